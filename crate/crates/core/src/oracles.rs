//! Slow, independent checks and seeded samplers.
//!
//! Nothing here is used by the production paths; these functions exist so
//! that tests can verify geometric claims from first principles (lengths,
//! pairwise distances, brute-force Procrustes) rather than by re-running
//! the formulas under test.

use nalgebra::{DMatrix, QR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cov::{bw_distance, CovPoint, GeodesicSegment};
use crate::error::{Error, Result};
use crate::kernel::{max_abs, SymMatrix, Tolerances};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_normal(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of `diag(R)` folded into `Q`).
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let qr = QR::new(random_normal(n, n, rng));
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `n x k` matrix with orthonormal columns.
pub fn random_stiefel(n: usize, k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    random_orthogonal(n, rng).columns(0, k).into_owned()
}

pub fn random_symmetric(n: usize, rng: &mut impl Rng) -> SymMatrix {
    SymMatrix::sym_part(&random_normal(n, n, rng))
}

fn uniform_diag(k: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| if i == j { rng.random_range(lo..=hi) } else { 0.0 })
}

/// SPD matrix with eigenvalues uniform in `[lo, hi]`.
pub fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> SymMatrix {
    let q = random_orthogonal(n, rng);
    SymMatrix::sym_part(&(&q * uniform_diag(n, lo, hi, rng) * q.transpose()))
}

/// `n x k` factor with singular values uniform in `[lo, hi]`.
pub fn random_factor(n: usize, k: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    random_stiefel(n, k, rng) * uniform_diag(k, lo, hi, rng) * random_orthogonal(k, rng)
}

/// PSD pair `(Σ, Λ)` in dimension `n` with `rk Σ = k`, `rk Λ = l` and
/// `rk ΣΛ = r`. Factors have singular values in `[0.5, 1.5]`.
pub fn random_psd_pair(n: usize, k: usize, l: usize, r: usize, rng: &mut impl Rng) -> Result<(SymMatrix, SymMatrix)> {
    if k > n || l > n || r > k.min(l) || k + l > n + r {
        return Err(Error::ParamOutOfRange(format!(
            "no PSD pair with n={n}, k={k}, l={l}, r={r}"
        )));
    }
    let q = random_orthogonal(n, rng);
    let q_k = q.columns(0, k).into_owned();
    let q_rest = q.columns(k, l - r).into_owned();
    let x0 = &q_k * random_factor(k, k, 0.5, 1.5, rng);

    // Y0 = [Q_k P1 | Q_rest] diag(s) [P2 P3]^T; X0^T Y0 has rank exactly r
    let p1 = random_stiefel(k, r, rng);
    let p23 = random_orthogonal(l, rng);
    let mut left = DMatrix::zeros(n, l);
    left.columns_mut(0, r).copy_from(&(&q_k * p1));
    left.columns_mut(r, l - r)
        .copy_from(&(q_rest * random_orthogonal(l - r, rng)));
    let y0 = left * uniform_diag(l, 0.5, 1.5, rng) * p23.transpose();

    Ok((
        SymMatrix::sym_part(&(&x0 * x0.transpose())),
        SymMatrix::sym_part(&(&y0 * y0.transpose())),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallSample {
    Zero,
    /// Orthonormal along the shorter side.
    Stiefel,
    /// Singular values uniform in `[0, 0.9]`.
    Interior,
    /// Singular values in `[0, 0.9]` except one equal to 1.
    Boundary,
}

pub fn random_ball_param(rows: usize, cols: usize, kind: BallSample, rng: &mut impl Rng) -> DMatrix<f64> {
    let p = rows.min(cols);
    if p == 0 {
        return DMatrix::zeros(rows, cols);
    }
    let mut s: Vec<f64> = match kind {
        BallSample::Zero => return DMatrix::zeros(rows, cols),
        BallSample::Stiefel => vec![1.0; p],
        BallSample::Interior | BallSample::Boundary => (0..p).map(|_| rng.random_range(0.0..=0.9)).collect(),
    };
    if kind == BallSample::Boundary {
        s[0] = 1.0;
    }
    let u = random_stiefel(rows, p, rng);
    let v = random_stiefel(cols, p, rng);
    let sd = DMatrix::from_fn(p, p, |i, j| if i == j { s[i] } else { 0.0 });
    u * sd * v.transpose()
}

/// A curve `t ↦ c(t)` on `[a, b]`.
pub struct CurveSampler<'a> {
    pub f: Box<dyn Fn(f64) -> SymMatrix + 'a>,
    pub a: f64,
    pub b: f64,
}

impl<'a> CurveSampler<'a> {
    pub fn new(f: impl Fn(f64) -> SymMatrix + 'a, a: f64, b: f64) -> Self {
        Self { f: Box::new(f), a, b }
    }

    pub fn from_segment(seg: &'a GeodesicSegment) -> Self {
        Self::new(move |t| seg.eval(t), 0.0, 1.0)
    }

    fn grid(&self, n: usize, tol: &Tolerances) -> Result<Vec<(f64, CovPoint)>> {
        (0..=n)
            .map(|i| {
                let t = self.a + (self.b - self.a) * i as f64 / n as f64;
                CovPoint::new((self.f)(t), tol).map(|p| (t, p))
            })
            .collect()
    }
}

/// Length of the inscribed polyline on the uniform `N`-grid.
pub fn polyline_length(c: &CurveSampler<'_>, n: usize, tol: &Tolerances) -> Result<f64> {
    if n < 2 {
        return Err(Error::ParamOutOfRange(format!("{n} subdivisions < 2")));
    }
    let pts = c.grid(n, tol)?;
    pts.windows(2).map(|w| bw_distance(&w[0].1, &w[1].1)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizingReport {
    pub ok: bool,
    /// Largest `|d(γ(s), γ(t)) - (t - s) d(Σ, Λ)|` over grid pairs.
    pub worst: f64,
}

/// Pairwise proportionality test on the uniform `N`-grid of `[0, 1]`.
pub fn check_minimizing(seg: &GeodesicSegment, n: usize, check_tol: f64, tol: &Tolerances) -> Result<MinimizingReport> {
    check_curve_minimizing(&CurveSampler::from_segment(seg), n, check_tol, tol)
}

/// Pairwise proportionality for an arbitrary curve on `[a, b]`.
pub fn check_curve_minimizing(
    c: &CurveSampler<'_>,
    n: usize,
    check_tol: f64,
    tol: &Tolerances,
) -> Result<MinimizingReport> {
    if n < 3 {
        return Err(Error::ParamOutOfRange(format!("grid size {n} < 3")));
    }
    let pts = c.grid(n, tol)?;
    let span = c.b - c.a;
    let total = bw_distance(&pts[0].1, &pts[n].1)?;
    let mut worst = 0.0_f64;
    for i in 0..=n {
        for j in (i + 1)..=n {
            let d = bw_distance(&pts[i].1, &pts[j].1)?;
            let expected = (pts[j].0 - pts[i].0) / span * total;
            worst = worst.max((d - expected).abs());
        }
    }
    Ok(MinimizingReport {
        ok: worst <= check_tol,
        worst,
    })
}

/// `min ||Y R^T - X||_F` over `trials` random orthogonal `R`: an upper bound
/// on the distance between `X X^T` and `Y Y^T`.
pub fn procrustes_sampled(x: &DMatrix<f64>, y: &DMatrix<f64>, trials: usize, rng: &mut impl Rng) -> Result<f64> {
    if trials == 0 {
        return Err(Error::ParamOutOfRange("trials must be >= 1".into()));
    }
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "X {:?}, Y {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let p = x.ncols();
    let mut best = f64::INFINITY;
    for _ in 0..trials {
        let r = random_orthogonal(p, rng);
        best = best.min((y * r.transpose() - x).norm());
    }
    Ok(best)
}

/// Finite-difference residual `|(γ(h) - γ(0)) / h - V|_∞`.
pub fn velocity_check(seg: &GeodesicSegment, v_claimed: &SymMatrix, h: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 1e-3) {
        return Err(Error::ParamOutOfRange(format!("step {h} outside (0, 1e-3]")));
    }
    let fd = (seg.eval(h).as_matrix() - seg.eval(0.0).as_matrix()) / h;
    Ok(max_abs(&(fd - v_claimed.as_matrix())))
}
