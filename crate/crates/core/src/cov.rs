//! The metric space of covariance matrices: distance, registration and the
//! full family of minimizing geodesics between matrices of arbitrary ranks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{
    self, eig_sym, max_abs, orth_complement, pinv_sym, rank_scaled, rank_with_tol, spectral_norm, svd_thin, Eigen,
    Factor, SymMatrix, Tolerances,
};

/// A certified positive semi-definite matrix.
///
/// Eigenvalues within `rank_rel * max |λ|` of zero are treated as zero; the
/// most negative such eigenvalue is recorded as the clip magnitude. The
/// symmetric input is kept verbatim so that segment endpoints reproduce it.
#[derive(Debug, Clone)]
pub struct CovPoint {
    mat: SymMatrix,
    rank: usize,
    eig: Eigen,
    band: f64,
    clip: f64,
    root: SymMatrix,
}

impl CovPoint {
    pub fn new(mat: SymMatrix, tol: &Tolerances) -> Result<Self> {
        let eig = eig_sym(&mat)?;
        let band = tol.rank_rel * eig.max_abs_value();
        let min = eig.min_value().unwrap_or(0.0);
        if min < -band {
            return Err(Error::NotPsd { min_eig: min });
        }
        let rank = eig.values.iter().filter(|v| **v > band).count();
        let root = eig.apply(|v| if v > band { v.sqrt() } else { 0.0 });
        Ok(Self {
            mat,
            rank,
            eig,
            band,
            clip: (-min).max(0.0),
            root,
        })
    }

    /// Symmetrizes (with the asymmetry check) and certifies.
    pub fn from_matrix(m: &DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        Self::new(kernel::symmetrize(m, tol)?, tol)
    }

    pub fn mat(&self) -> &SymMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eig(&self) -> &Eigen {
        &self.eig
    }

    /// Magnitude of the negative eigenvalue clipped to zero (0 if none).
    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn sqrt(&self) -> &SymMatrix {
        &self.root
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    /// Trace of the certified matrix, i.e. the sum of the retained eigenvalues.
    pub fn certified_trace(&self) -> f64 {
        self.eig.values.iter().filter(|v| **v > self.band).sum()
    }

    /// Orthonormal basis `U` of the range (n x k) and the matching positive
    /// eigenvalues, ascending.
    pub fn range(&self) -> (Factor, Vec<f64>) {
        let n = self.dim();
        let k = self.rank;
        let u = self.eig.vectors.columns(n - k, k).into_owned();
        let d = self.eig.values.rows(n - k, k).iter().copied().collect();
        (u, d)
    }

    /// Thin full-rank factor `X0 = U D^{1/2}` (n x k).
    pub fn thin_factor(&self) -> Factor {
        let (mut u, d) = self.range();
        for (j, dj) in d.iter().enumerate() {
            u.column_mut(j).scale_mut(dj.sqrt());
        }
        u
    }
}

/// Bures-Wasserstein distance.
///
/// Computed as `(tr Σ + tr Λ - 2 ||Σ^{1/2} Λ^{1/2}||_*)^{1/2}`; the nuclear
/// norm equals `tr (Σ^{1/2} Λ Σ^{1/2})^{1/2}` but avoids a second square
/// root of a possibly singular matrix.
pub fn bw_distance(sigma: &CovPoint, lambda: &CovPoint) -> Result<f64> {
    check_same_dim(sigma, lambda)?;
    if sigma.mat == lambda.mat {
        return Ok(0.0);
    }
    let nuclear: f64 = kernel::singular_values(&(sigma.root.as_matrix() * lambda.root.as_matrix()))?
        .iter()
        .sum();
    let sq = sigma.certified_trace() + lambda.certified_trace() - 2.0 * nuclear;
    Ok(sq.max(0.0).sqrt())
}

fn check_same_dim(a: &CovPoint, b: &CovPoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "points of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Orthogonal `R` from the polar decomposition `X^T Y = (X^T Λ X)^{1/2} R`,
/// so that `Y R^T` is the factor of `Λ` closest to `X`.
pub fn register(x: &Factor, y: &Factor, tol: &Tolerances) -> Result<DMatrix<f64>> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "factors of shape {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let (_, r) = kernel::polar_orthogonal(&(x.transpose() * y), tol)?;
    Ok(r)
}

/// Singular values of `X0^T Y0` and the rank decision on them. The band is
/// scaled by `||X0|| ||Y0||` so that products that vanish exactly come out
/// with rank 0.
fn cross_spectrum(sigma: &CovPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<(Vec<f64>, usize)> {
    let x0 = sigma.thin_factor();
    let y0 = lambda.thin_factor();
    let s = kernel::singular_values(&(x0.transpose() * &y0))?;
    let scale = spectral_norm(&x0) * spectral_norm(&y0);
    let r = rank_scaled(&s, scale, tol);
    Ok((s, r))
}

/// `rk(ΣΛ)`, computed as the rank of `X0^T Y0` for thin factors.
pub fn rank_product(sigma: &CovPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<usize> {
    check_same_dim(sigma, lambda)?;
    Ok(cross_spectrum(sigma, lambda, tol)?.1)
}

/// Square factors `X`, `Y` of `Σ` (rank k) and `Λ` (rank l), `k >= l`, with
/// `X^T Y = Diag(D_r, 0)`. Only the leading `k` (resp. `l`) columns are
/// non-zero.
#[derive(Debug, Clone)]
pub struct AlignedFactors {
    pub x: Factor,
    pub y: Factor,
    pub d_r: Vec<f64>,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub r: usize,
}

impl AlignedFactors {
    pub fn x_r(&self) -> Factor {
        self.x.columns(0, self.r).into_owned()
    }

    pub fn x_kr(&self) -> Factor {
        self.x.columns(self.r, self.k - self.r).into_owned()
    }

    pub fn y_r(&self) -> Factor {
        self.y.columns(0, self.r).into_owned()
    }

    pub fn y_lr(&self) -> Factor {
        self.y.columns(self.r, self.l - self.r).into_owned()
    }

    /// Shape of the spectral-ball parameter, `(k - r, l - r)`.
    pub fn ball_dims(&self) -> (usize, usize) {
        (self.k - self.r, self.l - self.r)
    }

    /// `sym(X_r Y_r^T + X_{k-r} R0 Y_{l-r}^T)`.
    pub fn mixed_term(&self, r0: &DMatrix<f64>) -> SymMatrix {
        let mut m = self.x_r() * self.y_r().transpose();
        if r0.nrows() > 0 && r0.ncols() > 0 {
            m += self.x_kr() * r0 * self.y_lr().transpose();
        }
        SymMatrix::sym_part(&m)
    }
}

pub fn aligned_factors(sigma: &CovPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<AlignedFactors> {
    check_same_dim(sigma, lambda)?;
    let (n, k, l) = (sigma.dim(), sigma.rank(), lambda.rank());
    if k < l {
        return Err(Error::RankMismatch { k, l });
    }
    let x0 = sigma.thin_factor();
    let y0 = lambda.thin_factor();
    let (u_thin, s, v) = svd_thin(&(x0.transpose() * &y0))?;
    let scale = spectral_norm(&x0) * spectral_norm(&y0);
    let r = rank_scaled(&s, scale, tol);

    // complete U (k x l) to an orthogonal k x k matrix
    let mut u = DMatrix::zeros(k, k);
    u.columns_mut(0, l).copy_from(&u_thin);
    if k > l {
        let rest = if l == 0 {
            DMatrix::identity(k, k)
        } else {
            orth_complement(&u_thin, tol)?
        };
        u.columns_mut(l, k - l).copy_from(&rest);
    }

    let mut x = DMatrix::zeros(n, n);
    x.columns_mut(0, k).copy_from(&(x0 * u));
    let mut y = DMatrix::zeros(n, n);
    y.columns_mut(0, l).copy_from(&(y0 * v));
    Ok(AlignedFactors {
        x,
        y,
        d_r: s[..r].to_vec(),
        n,
        k,
        l,
        r,
    })
}

/// Aligned factors for whichever orientation has the larger rank first.
/// The flag is `true` when the pair was swapped.
pub(crate) fn oriented_factors(
    sigma: &CovPoint,
    lambda: &CovPoint,
    tol: &Tolerances,
) -> Result<(AlignedFactors, bool)> {
    if sigma.rank() >= lambda.rank() {
        Ok((aligned_factors(sigma, lambda, tol)?, false))
    } else {
        Ok((aligned_factors(lambda, sigma, tol)?, true))
    }
}

/// Origin of a segment's mixed term.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Built directly from `(Σ, Λ, M)`.
    Direct,
    /// Full-rank or unique-logarithm formula.
    ClosedForm,
    /// Rotation `R` acting on the canonical factors of a stratum.
    Rotation(DMatrix<f64>),
    /// Spectral-ball parameter in caller order; `swapped` records that the
    /// construction ran on `(Λ, Σ)` because `rk Σ < rk Λ`.
    Ball { r0: DMatrix<f64>, swapped: bool },
    /// The `R0 = 0` geodesic from its rank-independent formula.
    Canonical,
}

/// The curve `(1-t)^2 Σ + t^2 Λ + 2t(1-t) M`.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    pub sigma: CovPoint,
    pub lambda: CovPoint,
    pub mixed: SymMatrix,
    pub provenance: Provenance,
}

impl GeodesicSegment {
    pub fn new(sigma: CovPoint, lambda: CovPoint, mixed: SymMatrix) -> Result<Self> {
        check_same_dim(&sigma, &lambda)?;
        if mixed.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mixed term is {0}x{0}, points are {1}x{1}",
                mixed.dim(),
                sigma.dim()
            )));
        }
        Ok(Self {
            sigma,
            lambda,
            mixed,
            provenance: Provenance::Direct,
        })
    }

    /// Reparametrizes the quadratic curve `A + s B + s^2 C`, `s ∈ [0,1]`.
    pub fn from_quadratic(a: &SymMatrix, b: &SymMatrix, c: &SymMatrix, tol: &Tolerances) -> Result<Self> {
        let sigma = CovPoint::new(a.clone(), tol)?;
        let lambda = CovPoint::new(a.add(b).add(c), tol)?;
        Self::new(sigma, lambda, a.add(&b.scale(0.5)))
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn eval(&self, t: f64) -> SymMatrix {
        if t == 0.0 {
            return self.sigma.mat.clone();
        }
        if t == 1.0 {
            return self.lambda.mat.clone();
        }
        let s = 1.0 - t;
        let m = self.sigma.mat.as_matrix() * (s * s)
            + self.lambda.mat.as_matrix() * (t * t)
            + self.mixed.as_matrix() * (2.0 * t * s);
        SymMatrix::sym_part(&m)
    }

    /// Evaluates and certifies `γ(t)`.
    pub fn point(&self, t: f64, tol: &Tolerances) -> Result<CovPoint> {
        if t == 0.0 {
            return Ok(self.sigma.clone());
        }
        if t == 1.0 {
            return Ok(self.lambda.clone());
        }
        CovPoint::new(self.eval(t), tol)
    }

    /// Numerical rank of `γ(t)`, without a PSD check.
    pub fn rank_at(&self, t: f64, tol: &Tolerances) -> Result<usize> {
        let eig = eig_sym(&self.eval(t))?;
        Ok(rank_with_tol(eig.values.as_slice(), tol))
    }
}

/// Parameter in the closed unit spectral ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallParam(DMatrix<f64>);

impl BallParam {
    pub fn new(m: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParamOutOfRange("parameter has non-finite entries".into()));
        }
        let norm = spectral_norm(&m);
        if norm > 1.0 + tol.geo_tol {
            return Err(Error::ParamOutOfBall { norm });
        }
        Ok(Self(m))
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
}

/// Shape `(k - r, l - r)` of the spectral-ball parameter for `(Σ, Λ)` in
/// caller order.
pub fn ball_dims(sigma: &CovPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<(usize, usize)> {
    let r = rank_product(sigma, lambda, tol)?;
    Ok((sigma.rank() - r, lambda.rank() - r))
}

/// The minimizing geodesic indexed by `R0` (shape `(k - r) x (l - r)` in
/// caller order).
pub fn minimizing_geodesic(
    sigma: &CovPoint,
    lambda: &CovPoint,
    r0: &BallParam,
    tol: &Tolerances,
) -> Result<GeodesicSegment> {
    let (af, swapped) = oriented_factors(sigma, lambda, tol)?;
    let (big, small) = af.ball_dims();
    let expected = if swapped { (small, big) } else { (big, small) };
    let shape = r0.shape();
    let both_empty = shape.0 * shape.1 == 0 && expected.0 * expected.1 == 0;
    if shape != expected && !both_empty {
        return Err(Error::DimensionMismatch(format!(
            "R0 must be {}x{}, got {}x{}",
            expected.0, expected.1, shape.0, shape.1
        )));
    }
    let oriented = if both_empty {
        DMatrix::zeros(big, small)
    } else if swapped {
        r0.as_matrix().transpose()
    } else {
        r0.as_matrix().clone()
    };
    let mixed = af.mixed_term(&oriented);
    Ok(
        GeodesicSegment::new(sigma.clone(), lambda.clone(), mixed)?.with_provenance(Provenance::Ball {
            r0: r0.as_matrix().clone(),
            swapped,
        }),
    )
}

/// `sym(Σ^{1/2} ((Σ^{1/2} Λ Σ^{1/2})^{1/2})^- Σ^{1/2} Λ)`.
pub(crate) fn canonical_mixed(sigma: &CovPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<SymMatrix> {
    let rs = sigma.sqrt().as_matrix();
    let inner = CovPoint::new(SymMatrix::sym_part(&(rs * lambda.mat().as_matrix() * rs)), tol)?;
    let inv_root = pinv_sym(inner.sqrt(), tol)?;
    Ok(SymMatrix::sym_part(
        &(rs * inv_root.as_matrix() * rs * lambda.mat().as_matrix()),
    ))
}

/// The `R0 = 0` minimizing geodesic, from its rank-independent formula.
pub fn canonical_geodesic(sigma: &CovPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<GeodesicSegment> {
    check_same_dim(sigma, lambda)?;
    let mixed = canonical_mixed(sigma, lambda, tol)?;
    Ok(GeodesicSegment::new(sigma.clone(), lambda.clone(), mixed)?.with_provenance(Provenance::Canonical))
}

/// Canonical geodesic evaluated at `t ∈ [0, 1]`.
pub fn interpolate(sigma: &CovPoint, lambda: &CovPoint, t: f64, tol: &Tolerances) -> Result<SymMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParamOutOfRange(format!("t = {t} is outside [0, 1]")));
    }
    Ok(canonical_geodesic(sigma, lambda, tol)?.eval(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    One,
    Two,
    Infinite,
}

impl Multiplicity {
    pub fn as_str(self) -> &'static str {
        match self {
            Multiplicity::One => "one",
            Multiplicity::Two => "two",
            Multiplicity::Infinite => "infinite",
        }
    }
}

/// Number of minimizing geodesics, in the stratum of the higher-rank
/// endpoint (segments of minimal rank) and in the whole space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeodesicCount {
    pub in_stratum: Multiplicity,
    pub in_cov: Multiplicity,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub r: usize,
}

pub fn count_minimizing_geodesics(sigma: &CovPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<GeodesicCount> {
    let r = rank_product(sigma, lambda, tol)?;
    let (k, l) = if sigma.rank() >= lambda.rank() {
        (sigma.rank(), lambda.rank())
    } else {
        (lambda.rank(), sigma.rank())
    };
    let in_cov = if r == l {
        Multiplicity::One
    } else {
        Multiplicity::Infinite
    };
    let in_stratum = if r == l {
        Multiplicity::One
    } else if k == l && r + 1 == k {
        Multiplicity::Two
    } else {
        Multiplicity::Infinite
    };
    Ok(GeodesicCount {
        in_stratum,
        in_cov,
        n: sigma.dim(),
        k,
        l,
        r,
    })
}

/// Whether `R0` lies on the Stiefel manifold (orthonormal along its shorter
/// side), i.e. indexes a segment of minimal rank. Empty parameters qualify.
pub fn is_minimal_rank_param(r0: &DMatrix<f64>, tol: &Tolerances) -> bool {
    let (rows, cols) = r0.shape();
    if rows == 0 || cols == 0 {
        return true;
    }
    let gram = if rows >= cols {
        r0.transpose() * r0
    } else {
        r0 * r0.transpose()
    };
    let p = gram.nrows();
    max_abs(&(gram - DMatrix::identity(p, p))) <= tol.geo_tol.max(tol.rank_rel * 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankProfile {
    pub samples: Vec<(f64, usize)>,
    pub rank: usize,
}

/// Ranks at the interior grid `t_i = i / (N + 1)`, `i = 1..=N`.
pub fn rank_profile(seg: &GeodesicSegment, grid_size: usize, tol: &Tolerances) -> Result<RankProfile> {
    if grid_size < 3 {
        return Err(Error::ParamOutOfRange(format!("grid size {grid_size} < 3")));
    }
    let samples = (1..=grid_size)
        .map(|i| {
            let t = i as f64 / (grid_size + 1) as f64;
            seg.rank_at(t, tol).map(|r| (t, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let min = samples.iter().map(|s| s.1).min().unwrap_or(0);
    let max = samples.iter().map(|s| s.1).max().unwrap_or(0);
    if min != max {
        return Err(Error::NonConstantRank { min, max });
    }
    Ok(RankProfile { samples, rank: min })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pt(d: &[f64]) -> CovPoint {
        CovPoint::new(SymMatrix::from_diagonal(d), &tol()).unwrap()
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, eps: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) <= eps
    }

    /// diag(1,1,0) and diag(1,0,1): rank 2 each, product rank 1.
    fn pair_r1() -> (CovPoint, CovPoint) {
        (pt(&[1.0, 1.0, 0.0]), pt(&[1.0, 0.0, 1.0]))
    }

    #[test]
    fn cov_point_certification() {
        let p = pt(&[4.0, 0.0, 1.0]);
        assert_eq!(p.rank(), 2);
        assert_eq!(p.clip(), 0.0);
        let x = p.thin_factor();
        assert!(close(&(&x * x.transpose()), p.mat(), 1e-14));

        let near = CovPoint::new(SymMatrix::from_diagonal(&[1.0, -1e-13]), &tol()).unwrap();
        assert_eq!(near.rank(), 1);
        assert!((near.clip() - 1e-13).abs() < 1e-20);

        assert!(matches!(
            CovPoint::new(SymMatrix::from_diagonal(&[1.0, -1.0]), &tol()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let s = pt(&[2.0, 3.0]);
        assert_eq!(bw_distance(&s, &s).unwrap(), 0.0);
        for n in 1..5 {
            let i = CovPoint::new(SymMatrix::identity(n), &tol()).unwrap();
            let four = CovPoint::new(SymMatrix::identity(n).scale(4.0), &tol()).unwrap();
            assert!((bw_distance(&i, &four).unwrap() - (n as f64).sqrt()).abs() < 1e-14);
        }
        let d = bw_distance(&pt(&[4.0, 0.0]), &pt(&[0.0, 4.0])).unwrap();
        assert!((d - 8f64.sqrt()).abs() < 1e-14);
        let (a, b) = pair_r1();
        assert!((bw_distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn register_examples() {
        let x = DMatrix::identity(2, 2);
        let y = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let r = register(&x, &y, &tol()).unwrap();
        assert!(close(&r, &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), 1e-14));
        assert!(close(&(&y * r.transpose()), &(DMatrix::identity(2, 2) * 2.0), 1e-14));
        assert!(((&y * r.transpose() - &x).norm() - 2f64.sqrt()).abs() < 1e-14);

        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let r = register(&x, &x, &tol()).unwrap();
        assert!((&x * r.transpose() - &x).norm() < 1e-14);
    }

    #[test]
    fn rank_product_examples() {
        let (a, b) = pair_r1();
        assert_eq!(rank_product(&a, &b, &tol()).unwrap(), 1);
        let a = pt(&[1.0, 1.0, 0.0, 0.0]);
        let b = pt(&[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(rank_product(&a, &b, &tol()).unwrap(), 0);
        assert_eq!(rank_product(&a, &a, &tol()).unwrap(), 2);
    }

    #[test]
    fn aligned_factor_invariants() {
        let (a, b) = pair_r1();
        let af = aligned_factors(&a, &b, &tol()).unwrap();
        assert_eq!((af.k, af.l, af.r), (2, 2, 1));
        assert!((af.d_r[0] - 1.0).abs() < 1e-14);
        assert!(close(&(&af.x * af.x.transpose()), a.mat(), 1e-14));
        assert!(close(&(&af.y * af.y.transpose()), b.mat(), 1e-14));
        let mut expected = DMatrix::zeros(3, 3);
        expected[(0, 0)] = 1.0;
        assert!(close(&(af.x.transpose() * &af.y), &expected, 1e-14));
        // active columns: x_r and y_r are ±e1
        assert!((af.x_r()[(0, 0)].abs() - 1.0).abs() < 1e-14);

        let s = pt(&[1.0, 0.0]);
        let af = aligned_factors(&s, &s, &tol()).unwrap();
        assert_eq!(af.r, 1);
        assert!(close(&af.x, &af.y, 1e-14));

        assert!(matches!(
            aligned_factors(&pt(&[1.0, 0.0]), &pt(&[1.0, 1.0]), &tol()),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn minimizing_geodesic_pair_r1() {
        let (a, b) = pair_r1();
        let t = 0.3;
        let u = (1.0 - t) * t;
        let plus = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.49, u, 0.0, u, 0.09]);
        let minus = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.49, -u, 0.0, -u, 0.09]);
        let mut got = Vec::new();
        for s in [1.0, -1.0] {
            let p = BallParam::new(DMatrix::from_element(1, 1, s), &tol()).unwrap();
            got.push(minimizing_geodesic(&a, &b, &p, &tol()).unwrap().eval(t).into_inner());
        }
        assert!(
            (close(&got[0], &plus, 1e-14) && close(&got[1], &minus, 1e-14))
                || (close(&got[0], &minus, 1e-14) && close(&got[1], &plus, 1e-14))
        );

        let seg = minimizing_geodesic(&a, &b, &BallParam::zero(1, 1), &tol()).unwrap();
        assert!(close(
            &seg.mixed,
            &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0])),
            1e-14
        ));
        assert_eq!(rank_profile(&seg, 9, &tol()).unwrap().rank, 3);

        let too_big = DMatrix::from_element(1, 1, 1.5);
        assert!(matches!(
            BallParam::new(too_big, &tol()),
            Err(Error::ParamOutOfBall { .. })
        ));
        let wrong = BallParam::zero(2, 1);
        assert!(matches!(
            minimizing_geodesic(&a, &b, &wrong, &tol()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn canonical_examples() {
        let (a, b) = pair_r1();
        let seg = canonical_geodesic(&a, &b, &tol()).unwrap();
        let t: f64 = 0.4;
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, (1.0 - t).powi(2), t * t]));
        assert!(close(&seg.eval(t), &expected, 1e-14));

        let a = pt(&[1.0, 1.0, 0.0, 0.0]);
        let b = pt(&[0.0, 0.0, 1.0, 1.0]);
        assert!(max_abs(&canonical_geodesic(&a, &b, &tol()).unwrap().mixed) < 1e-14);

        let i = CovPoint::new(SymMatrix::identity(3), &tol()).unwrap();
        let four = CovPoint::new(SymMatrix::identity(3).scale(4.0), &tol()).unwrap();
        let mid = interpolate(&i, &four, 0.5, &tol()).unwrap();
        assert!(close(&mid, &(DMatrix::identity(3, 3) * 2.25), 1e-14));
        assert_eq!(interpolate(&i, &four, 0.0, &tol()).unwrap(), *i.mat());
        assert_eq!(interpolate(&i, &four, 1.0, &tol()).unwrap(), *four.mat());
        assert!(interpolate(&i, &four, 1.5, &tol()).is_err());
    }

    #[test]
    fn swapped_orientation_matches() {
        let (a, _) = pair_r1();
        let b = pt(&[0.0, 0.0, 2.0]);
        // k = 2 > l = 1, r = 0: R0 is 2x1
        let p = BallParam::new(DMatrix::from_column_slice(2, 1, &[0.6, 0.8]), &tol()).unwrap();
        let fwd = minimizing_geodesic(&a, &b, &p, &tol()).unwrap();
        let q = BallParam::new(p.as_matrix().transpose(), &tol()).unwrap();
        let back = minimizing_geodesic(&b, &a, &q, &tol()).unwrap();
        assert_eq!(
            back.provenance,
            Provenance::Ball {
                r0: q.as_matrix().clone(),
                swapped: true
            }
        );
        assert!(close(&fwd.eval(0.25), &back.eval(0.75), 1e-14));
    }

    #[test]
    fn counts_follow_the_table() {
        let full = pt(&[1.0, 2.0, 3.0]);
        let c = count_minimizing_geodesics(&full, &pt(&[1.0, 1.0, 4.0]), &tol()).unwrap();
        assert_eq!((c.in_stratum, c.in_cov), (Multiplicity::One, Multiplicity::One));

        let c = count_minimizing_geodesics(&full, &pt(&[0.0, 1.0, 0.0]), &tol()).unwrap();
        assert_eq!((c.in_stratum, c.in_cov), (Multiplicity::One, Multiplicity::One));

        let (a, b) = pair_r1();
        let c = count_minimizing_geodesics(&a, &b, &tol()).unwrap();
        assert_eq!((c.in_stratum, c.in_cov), (Multiplicity::Two, Multiplicity::Infinite));

        let a = pt(&[1.0, 1.0, 0.0]);
        let c = count_minimizing_geodesics(&a, &a.clone(), &tol()).unwrap();
        assert_eq!((c.in_stratum, c.in_cov), (Multiplicity::One, Multiplicity::One));

        let a = pt(&[1.0, 1.0, 0.0, 0.0]);
        let b = pt(&[0.0, 0.0, 1.0, 1.0]);
        let c = count_minimizing_geodesics(&a, &b, &tol()).unwrap();
        assert_eq!(
            (c.in_stratum, c.in_cov),
            (Multiplicity::Infinite, Multiplicity::Infinite)
        );

        let c = count_minimizing_geodesics(&pt(&[0.0, 0.0, 1.0, 0.0]), &a, &tol()).unwrap();
        assert_eq!((c.k, c.l, c.r), (2, 1, 0));
        assert_eq!(
            (c.in_stratum, c.in_cov),
            (Multiplicity::Infinite, Multiplicity::Infinite)
        );
    }

    #[test]
    fn minimal_rank_params() {
        assert!(is_minimal_rank_param(&DMatrix::zeros(2, 0), &tol()));
        assert!(!is_minimal_rank_param(&DMatrix::zeros(2, 1), &tol()));
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let q = DMatrix::from_row_slice(2, 2, &[c, -c, c, c]);
        assert!(is_minimal_rank_param(&q, &tol()));
        assert!(is_minimal_rank_param(
            &DMatrix::from_row_slice(1, 2, &[0.6, 0.8]),
            &tol()
        ));
    }

    #[test]
    fn rank_profile_examples() {
        let (a, b) = pair_r1();
        for s in [1.0, -1.0] {
            let p = BallParam::new(DMatrix::from_element(1, 1, s), &tol()).unwrap();
            let seg = minimizing_geodesic(&a, &b, &p, &tol()).unwrap();
            assert_eq!(rank_profile(&seg, 7, &tol()).unwrap().rank, 2);
        }
        let seg = canonical_geodesic(&a, &a, &tol()).unwrap();
        assert_eq!(rank_profile(&seg, 5, &tol()).unwrap().rank, 2);
        assert!(rank_profile(&seg, 2, &tol()).is_err());
    }
}
