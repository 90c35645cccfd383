use std::io::Write;
use std::path::{Path, PathBuf};

use bwgeo::cov::{self, BallParam, CovPoint, GeodesicCount};
use bwgeo::io::{self, MatrixFile};
use bwgeo::oracles::{random_orthogonal, seeded_rng};
use bwgeo::spd::{self, SpdPoint};
use bwgeo::stratum::{self, LogKind, StratumPoint};
use bwgeo::{kernel, Error, SymMatrix, Tolerances};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_PARAM: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bwgeo", version, about = "Bures-Wasserstein geometry of covariance matrices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Relative threshold for numerical rank decisions.
    #[arg(long, global = true, env = "BWGEO_TOL_RANK", default_value_t = 1e-9)]
    pub tol_rank: f64,

    /// Largest accepted |M - M^T| entry.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_sym: f64,

    /// Seed for commands that sample (family members).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Emit JSON (default).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,

    /// Emit CSV.
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance between two PSD matrices.
    Dist { a: PathBuf, b: PathBuf },

    /// Samples of the canonical geodesic.
    Interp {
        a: PathBuf,
        b: PathBuf,
        /// Single time in [0, 1].
        #[arg(long, conflicts_with = "steps", required_unless_present = "steps")]
        t: Option<f64>,
        /// Number of equally spaced samples, endpoints included.
        #[arg(long)]
        steps: Option<usize>,
        /// Write one matrix file per sample instead of printing.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },

    /// Logarithm(s) of B seen from A.
    Log {
        a: PathBuf,
        b: PathBuf,
        /// Exit with status 3 unless the logarithm is unique.
        #[arg(long)]
        require_unique: bool,
    },

    /// Count or build minimizing geodesics.
    Enumerate {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, conflicts_with = "r0", required_unless_present = "r0")]
        count: bool,
        /// Spectral-ball parameter of shape (k - r) x (l - r).
        #[arg(long)]
        r0: Option<PathBuf>,
        /// Number of samples along the segment to include.
        #[arg(long)]
        samples: Option<usize>,
    },

    /// Symmetry, spectrum and rank diagnostics for one matrix.
    Check { file: PathBuf },

    /// Distances for every pair listed in a manifest
    /// `{"pairs":[{"a":"...","b":"..."}]}`; paths are relative to the manifest.
    Batch { manifest: PathBuf },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    status: &'static str,
    message: String,
}

impl Failure {
    fn input(e: impl ToString) -> Self {
        Self {
            code: EXIT_INPUT,
            status: "invalid_input",
            message: e.to_string(),
        }
    }

    fn param(e: impl ToString) -> Self {
        Self {
            code: EXIT_PARAM,
            status: "bad_parameter",
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ParamOutOfBall { .. } | Error::ParamOutOfRange(_) | Error::InvalidTolerances(_) => Self::param(e),
            _ => Self::input(e),
        }
    }
}

enum Output {
    Report(Value),
    Csv(String),
    /// Domain condition: report printed on stdout, non-zero exit.
    Domain(Value),
}

struct Ctx {
    tol: Tolerances,
    seed: u64,
    csv: bool,
}

/// Runs one parsed invocation, writing to the given streams, and returns
/// the process exit code.
pub fn run(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let tol = Tolerances {
        rank_rel: cli.global.tol_rank,
        sym_abs: cli.global.tol_sym,
        ..Tolerances::default()
    };
    let result = tol.validate().map_err(Failure::from).and_then(|_| {
        let ctx = Ctx {
            tol,
            seed: cli.global.seed,
            csv: cli.global.csv,
        };
        dispatch(&ctx, cli.command)
    });
    let (code, text, to_err) = match result {
        Ok(Output::Report(v)) => (EXIT_OK, pretty(&v), false),
        Ok(Output::Csv(s)) => (EXIT_OK, s, false),
        Ok(Output::Domain(v)) => (EXIT_DOMAIN, pretty(&v), false),
        Err(f) => {
            let v = json!({"status": f.status, "message": f.message});
            (f.code, pretty(&v), true)
        }
    };
    let stream: &mut dyn Write = if to_err { err } else { out };
    let _ = stream.write_all(text.as_bytes());
    code
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string(v).unwrap_or_default();
    s.push('\n');
    s
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<Output, Failure> {
    match command {
        Command::Dist { a, b } => cmd_dist(ctx, &a, &b),
        Command::Interp {
            a,
            b,
            t,
            steps,
            out_dir,
        } => cmd_interp(ctx, &a, &b, t, steps, out_dir.as_deref()),
        Command::Log { a, b, require_unique } => cmd_log(ctx, &a, &b, require_unique),
        Command::Enumerate {
            a,
            b,
            count,
            r0,
            samples,
        } => cmd_enumerate(ctx, &a, &b, count, r0.as_deref(), samples),
        Command::Check { file } => cmd_check(ctx, &file),
        Command::Batch { manifest } => cmd_batch(ctx, &manifest),
    }
}

fn load_point(path: &Path, tol: &Tolerances) -> Result<CovPoint, Failure> {
    let m = io::read_matrix(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    CovPoint::from_matrix(&m, tol).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_pair(a: &Path, b: &Path, tol: &Tolerances) -> Result<(CovPoint, CovPoint), Failure> {
    let pa = load_point(a, tol)?;
    let pb = load_point(b, tol)?;
    if pa.dim() != pb.dim() {
        return Err(Failure::input(format!(
            "matrices have different sizes ({0}x{0} and {1}x{1})",
            pa.dim(),
            pb.dim()
        )));
    }
    Ok((pa, pb))
}

fn matrix_value(m: &DMatrix<f64>) -> Value {
    serde_json::to_value(MatrixFile::from_matrix(m)).unwrap_or(Value::Null)
}

fn dist_fields(a: &CovPoint, b: &CovPoint, tol: &Tolerances) -> Result<(f64, usize, usize, usize), Failure> {
    Ok((
        cov::bw_distance(a, b)?,
        a.rank(),
        b.rank(),
        cov::rank_product(a, b, tol)?,
    ))
}

fn cmd_dist(ctx: &Ctx, a: &Path, b: &Path) -> Result<Output, Failure> {
    let (pa, pb) = load_pair(a, b, &ctx.tol)?;
    let (d, k, l, r) = dist_fields(&pa, &pb, &ctx.tol)?;
    if ctx.csv {
        return Ok(Output::Csv(format!(
            "distance,rank_a,rank_b,rank_product\n{},{k},{l},{r}\n",
            io::format_value(d)
        )));
    }
    Ok(Output::Report(json!({
        "distance": d,
        "rank_a": k,
        "rank_b": l,
        "rank_product": r,
    })))
}

fn cmd_interp(
    ctx: &Ctx,
    a: &Path,
    b: &Path,
    t: Option<f64>,
    steps: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<Output, Failure> {
    let times: Vec<f64> = match (t, steps) {
        (Some(t), _) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(Failure::param(format!("--t {t} is outside [0, 1]")));
            }
            vec![t]
        }
        (None, Some(n)) => {
            if n < 2 {
                return Err(Failure::param(format!("--steps {n} < 2")));
            }
            (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
        }
        (None, None) => return Err(Failure::param("one of --t or --steps is required")),
    };
    let (pa, pb) = load_pair(a, b, &ctx.tol)?;
    let seg = cov::canonical_geodesic(&pa, &pb, &ctx.tol)?;
    let samples: Vec<(f64, DMatrix<f64>)> = times.iter().map(|&t| (t, seg.eval(t).into_inner())).collect();

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
        let ext = if ctx.csv { "csv" } else { "json" };
        let mut files = Vec::new();
        for (i, (t, m)) in samples.iter().enumerate() {
            let name = format!("sample_{i:04}.{ext}");
            io::write_matrix(&dir.join(&name), m)?;
            files.push(json!({"t": t, "file": name}));
        }
        return Ok(Output::Report(json!({"samples": files})));
    }
    if samples.len() == 1 {
        let m = &samples[0].1;
        return Ok(Output::Csv(if ctx.csv { io::to_csv(m) } else { io::to_json(m) }));
    }
    if ctx.csv {
        let mut s = String::new();
        for (t, m) in &samples {
            s.push_str(&format!("# t={}\n", io::format_value(*t)));
            s.push_str(&io::to_csv(m));
        }
        return Ok(Output::Csv(s));
    }
    let list: Vec<Value> = samples
        .iter()
        .map(|(t, m)| json!({"t": t, "matrix": matrix_value(m)}))
        .collect();
    Ok(Output::Report(json!({"samples": list})))
}

fn cmd_log(ctx: &Ctx, a: &Path, b: &Path, require_unique: bool) -> Result<Output, Failure> {
    let (pa, pb) = load_pair(a, b, &ctx.tol)?;
    let tol = &ctx.tol;
    if pa.is_full_rank() && pb.is_full_rank() {
        let v = spd::log_full(&SpdPoint::from_cov(pa)?, &SpdPoint::from_cov(pb.clone())?, tol)?;
        let n = pb.dim();
        return Ok(log_report(ctx, "unique", n, n, vec![v.into_inner()], None));
    }
    let sigma = StratumPoint::from_cov(pa);
    let family = stratum::logarithms_stratum(&sigma, &pb, tol)?;
    let (k, r) = (family.k, family.r);
    if require_unique && family.kind != LogKind::Unique {
        return Ok(Output::Domain(json!({
            "status": "non_unique",
            "kind": family.kind.as_str(),
            "r": r,
            "k": k,
        })));
    }
    match family.kind {
        LogKind::Unique => {
            let v = stratum::log_map_stratum(&sigma, &pb, tol)?;
            Ok(log_report(ctx, "unique", r, k, vec![v.v.into_inner()], None))
        }
        LogKind::Pair => {
            let params = family.finite_params().unwrap_or_default();
            let tangents = params
                .iter()
                .map(|q| family.member(q, tol).map(|t| t.v.into_inner()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(log_report(ctx, "pair", r, k, tangents, None))
        }
        LogKind::OrthogonalFamily => {
            let q = random_orthogonal(family.param_dim(), &mut seeded_rng(ctx.seed));
            let v = family.member(&q, tol)?;
            Ok(log_report(
                ctx,
                "orthogonal_family",
                r,
                k,
                vec![v.v.into_inner()],
                Some(q),
            ))
        }
    }
}

fn log_report(
    ctx: &Ctx,
    kind: &str,
    r: usize,
    k: usize,
    tangents: Vec<DMatrix<f64>>,
    param: Option<DMatrix<f64>>,
) -> Output {
    if ctx.csv {
        let mut s = format!("# kind={kind} r={r} k={k}\n");
        for (i, v) in tangents.iter().enumerate() {
            s.push_str(&format!("# tangent {i}\n"));
            s.push_str(&io::to_csv(v));
        }
        return Output::Csv(s);
    }
    let mut report = json!({
        "status": "ok",
        "kind": kind,
        "r": r,
        "k": k,
        "tangents": tangents.iter().map(matrix_value).collect::<Vec<_>>(),
    });
    if let Some(q) = param {
        report["sample_param"] = matrix_value(&q);
    }
    Output::Report(report)
}

fn count_value(c: &GeodesicCount) -> Value {
    json!({
        "n": c.n,
        "k": c.k,
        "l": c.l,
        "r": c.r,
        "in_stratum": c.in_stratum.as_str(),
        "in_cov": c.in_cov.as_str(),
    })
}

fn cmd_enumerate(
    ctx: &Ctx,
    a: &Path,
    b: &Path,
    count: bool,
    r0: Option<&Path>,
    samples: Option<usize>,
) -> Result<Output, Failure> {
    let (pa, pb) = load_pair(a, b, &ctx.tol)?;
    let tol = &ctx.tol;
    let dims = cov::ball_dims(&pa, &pb, tol)?;
    if count {
        let c = cov::count_minimizing_geodesics(&pa, &pb, tol)?;
        if ctx.csv {
            return Ok(Output::Csv(format!(
                "n,k,l,r,in_stratum,in_cov\n{},{},{},{},{},{}\n",
                c.n,
                c.k,
                c.l,
                c.r,
                c.in_stratum.as_str(),
                c.in_cov.as_str()
            )));
        }
        let mut v = count_value(&c);
        v["ball_shape"] = json!([dims.0, dims.1]);
        return Ok(Output::Report(v));
    }
    let Some(r0_path) = r0 else {
        return Err(Failure::param("one of --count or --r0 is required"));
    };
    let m = io::read_matrix(r0_path).map_err(Failure::param)?;
    let p = BallParam::new(m, tol).map_err(Failure::param)?;
    let seg = cov::minimizing_geodesic(&pa, &pb, &p, tol).map_err(|e| match e {
        Error::DimensionMismatch(_) => Failure::param(e),
        other => Failure::from(other),
    })?;
    let swapped = matches!(seg.provenance, cov::Provenance::Ball { swapped: true, .. });
    let minimal = cov::is_minimal_rank_param(p.as_matrix(), tol);
    let sample_list = match samples {
        None => Vec::new(),
        Some(n) if n < 2 => return Err(Failure::param(format!("--samples {n} < 2"))),
        Some(n) => (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                (t, seg.eval(t).into_inner())
            })
            .collect(),
    };
    if ctx.csv {
        let mut s = String::from("# mixed\n");
        s.push_str(&io::to_csv(&seg.mixed));
        for (t, m) in &sample_list {
            s.push_str(&format!("# t={}\n", io::format_value(*t)));
            s.push_str(&io::to_csv(m));
        }
        return Ok(Output::Csv(s));
    }
    Ok(Output::Report(json!({
        "mixed": matrix_value(&seg.mixed),
        "r0_shape": [dims.0, dims.1],
        "minimal_rank": minimal,
        "swapped": swapped,
        "samples": sample_list
            .iter()
            .map(|(t, m)| json!({"t": t, "matrix": matrix_value(m)}))
            .collect::<Vec<_>>(),
    })))
}

fn cmd_check(ctx: &Ctx, file: &Path) -> Result<Output, Failure> {
    let m = io::read_matrix(file).map_err(Failure::input)?;
    if m.nrows() != m.ncols() {
        return Err(Failure::input(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        }));
    }
    let residual = kernel::max_abs(&(&m - m.transpose()));
    let sym = SymMatrix::sym_part(&m);
    let eig = kernel::eig_sym(&sym)?;
    let min = eig.min_value().unwrap_or(0.0);
    let max = eig.max_value().unwrap_or(0.0);
    let symmetric = residual <= ctx.tol.sym_abs;
    let (psd, rank, clip) = match CovPoint::new(sym, &ctx.tol) {
        Ok(p) => (true, p.rank(), p.clip()),
        Err(_) => (false, kernel::rank_with_tol(eig.values.as_slice(), &ctx.tol), 0.0),
    };
    let psd = psd && symmetric;
    if ctx.csv {
        return Ok(Output::Csv(format!(
            "n,symmetry_residual,symmetric,min_eig,max_eig,clip,rank,psd,not_psd\n{},{},{},{},{},{},{},{},{}\n",
            m.nrows(),
            io::format_value(residual),
            symmetric,
            io::format_value(min),
            io::format_value(max),
            io::format_value(clip),
            rank,
            psd,
            !psd
        )));
    }
    Ok(Output::Report(json!({
        "n": m.nrows(),
        "symmetry_residual": residual,
        "symmetric": symmetric,
        "min_eig": min,
        "max_eig": max,
        "clip": clip,
        "rank": rank,
        "psd": psd,
        "not_psd": !psd,
    })))
}

#[derive(serde::Deserialize)]
struct Manifest {
    pairs: Vec<ManifestPair>,
}

#[derive(serde::Deserialize)]
struct ManifestPair {
    a: String,
    b: String,
}

fn cmd_batch(ctx: &Ctx, manifest: &Path) -> Result<Output, Failure> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Failure::input(format!("{}: {e}", manifest.display())))?;
    let parsed: Manifest = serde_json::from_str(&text).map_err(Failure::input)?;
    let root = manifest.parent().unwrap_or(Path::new("."));
    let mut results = Vec::new();
    let mut csv = String::from("a,b,distance,rank_a,rank_b,rank_product,error\n");
    for pair in &parsed.pairs {
        let outcome = load_pair(&root.join(&pair.a), &root.join(&pair.b), &ctx.tol)
            .and_then(|(pa, pb)| dist_fields(&pa, &pb, &ctx.tol));
        match outcome {
            Ok((d, k, l, r)) => {
                csv.push_str(&format!("{},{},{},{k},{l},{r},\n", pair.a, pair.b, io::format_value(d)));
                results.push(json!({
                    "a": pair.a,
                    "b": pair.b,
                    "distance": d,
                    "rank_a": k,
                    "rank_b": l,
                    "rank_product": r,
                }));
            }
            Err(f) => {
                csv.push_str(&format!("{},{},,,,,{}\n", pair.a, pair.b, f.message.replace(',', ";")));
                results.push(json!({"a": pair.a, "b": pair.b, "error": f.message}));
            }
        }
    }
    if ctx.csv {
        return Ok(Output::Csv(csv));
    }
    Ok(Output::Report(json!({"results": results})))
}
