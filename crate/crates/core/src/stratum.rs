//! Riemannian geometry of the manifold of PSD matrices of fixed rank `k`.

use nalgebra::DMatrix;

use crate::cov::{self, aligned_factors, CovPoint, GeodesicSegment, Provenance};
use crate::error::{Error, Result};
use crate::kernel::{
    divide_by_eigen_sums, eig_sym, intersects_with_scale, max_abs, spectral_norm, sylvester_spd, Factor, SymMatrix,
    Tolerances,
};
use crate::spd::{check_factor, OpenInterval};

/// Rank-`k` PSD matrix `Σ = U D U^T` with `U` (n x k) orthonormal.
#[derive(Debug, Clone)]
pub struct StratumPoint {
    point: CovPoint,
    u: Factor,
    d: Vec<f64>,
    perp: DMatrix<f64>,
}

impl StratumPoint {
    pub fn new(mat: SymMatrix, tol: &Tolerances) -> Result<Self> {
        Ok(Self::from_cov(CovPoint::new(mat, tol)?))
    }

    pub fn from_cov(point: CovPoint) -> Self {
        let (u, d) = point.range();
        let n = point.dim();
        let perp = DMatrix::identity(n, n) - &u * u.transpose();
        Self { point, u, d, perp }
    }

    /// Point `X X^T` for a factor of full column rank.
    pub fn from_factor(x: &Factor, tol: &Tolerances) -> Result<Self> {
        let p = Self::new(SymMatrix::sym_part(&(x * x.transpose())), tol)?;
        if p.rank() != x.ncols() {
            return Err(Error::RankDeficient {
                rank: p.rank(),
                expected: x.ncols(),
            });
        }
        Ok(p)
    }

    pub fn mat(&self) -> &SymMatrix {
        self.point.mat()
    }

    pub fn point(&self) -> &CovPoint {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn u(&self) -> &Factor {
        &self.u
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Projector `I - U U^T` onto the orthogonal complement of the range.
    pub fn perp(&self) -> &DMatrix<f64> {
        &self.perp
    }

    /// Canonical factor `X = U D^{1/2}`.
    pub fn canonical_factor(&self) -> Factor {
        self.point.thin_factor()
    }

    fn pinv(&self) -> DMatrix<f64> {
        let mut ud = self.u.clone();
        for (j, dj) in self.d.iter().enumerate() {
            ud.column_mut(j).scale_mut(1.0 / dj);
        }
        ud * self.u.transpose()
    }

    /// `S_D(U^T V U)`, the k x k block of the restricted Sylvester solution.
    fn f0(&self, v: &SymMatrix) -> SymMatrix {
        let mut inner = self.u.transpose() * v.as_matrix() * &self.u;
        divide_by_eigen_sums(&mut inner, &self.d);
        SymMatrix::sym_part(&inner)
    }
}

/// Tangent vector at a stratum point, with the quantities that drive the
/// exponential map cached.
#[derive(Debug, Clone)]
pub struct StratumTangent {
    pub base: StratumPoint,
    pub v: SymMatrix,
    /// `U S_D(U^T V U) U^T`.
    pub s: SymMatrix,
    /// `S_D(U^T V U)`.
    pub f0: SymMatrix,
    /// `D^{-1} U^T V (I - U U^T) V U D^{-1}`.
    pub m0: SymMatrix,
}

impl StratumTangent {
    /// Checks `X_perp^T V X_perp = 0` up to `sym_abs * max(1, |V|)`.
    pub fn new(base: &StratumPoint, v: SymMatrix, tol: &Tolerances) -> Result<Self> {
        check_dim(base, &v)?;
        let residual = max_abs(&(&base.perp * v.as_matrix() * &base.perp));
        if residual > tol.sym_abs * v.norm_inf().max(1.0) {
            return Err(Error::NotTangent {
                rank: base.rank(),
                residual,
            });
        }
        Ok(Self::unchecked(base, v))
    }

    pub(crate) fn unchecked(base: &StratumPoint, v: SymMatrix) -> Self {
        let f0 = base.f0(&v);
        let s = SymMatrix::sym_part(&(&base.u * f0.as_matrix() * base.u.transpose()));
        let mut vud = v.as_matrix() * &base.u;
        for (j, dj) in base.d.iter().enumerate() {
            vud.column_mut(j).scale_mut(1.0 / dj);
        }
        let m0 = SymMatrix::sym_part(&(vud.transpose() * &base.perp * &vud));
        Self {
            base: base.clone(),
            v,
            s,
            f0,
            m0,
        }
    }

    /// Second-order coefficient `W` of `γ(t) = Σ + tV + t^2 W`.
    pub fn second_order(&self) -> SymMatrix {
        let s = self.s.as_matrix();
        let v = self.v.as_matrix();
        let p = &self.base.perp;
        let svp = s * v * p;
        let w = s * self.base.mat().as_matrix() * s + &svp + svp.transpose() + p * v * self.base.pinv() * v * p;
        SymMatrix::sym_part(&w)
    }
}

fn check_dim(base: &StratumPoint, v: &SymMatrix) -> Result<()> {
    if v.dim() != base.dim() {
        return Err(Error::DimensionMismatch(format!(
            "tangent is {0}x{0}, base point is {1}x{1}",
            v.dim(),
            base.dim()
        )));
    }
    Ok(())
}

/// Orthogonal projection `W - P W P`, `P = I - U U^T`, onto the tangent space.
pub fn project_tangent(sigma: &StratumPoint, w: &SymMatrix) -> Result<StratumTangent> {
    check_dim(sigma, w)?;
    let p = &sigma.perp;
    let v = SymMatrix::sym_part(&(w.as_matrix() - p * w.as_matrix() * p));
    Ok(StratumTangent::unchecked(sigma, v))
}

/// Horizontal lift `X G^{-1} F + (I - U U^T) V X G^{-1}` with `G = X^T X`
/// and `F = S_G(X^T V X)`.
pub fn horizontal_lift_stratum(x: &Factor, v: &StratumTangent, tol: &Tolerances) -> Result<Factor> {
    check_factor(v.base.mat(), x, tol)?;
    if x.ncols() != v.base.rank() {
        return Err(Error::DimensionMismatch(format!(
            "factor has {} columns, stratum rank is {}",
            x.ncols(),
            v.base.rank()
        )));
    }
    let g = SymMatrix::sym_part(&(x.transpose() * x));
    let g_inv = g.as_matrix().clone().try_inverse().ok_or(Error::RankDeficient {
        rank: 0,
        expected: x.ncols(),
    })?;
    let f = sylvester_spd(&g, &SymMatrix::sym_part(&(x.transpose() * v.v.as_matrix() * x)), tol)?;
    let xg = x * &g_inv;
    Ok(&xg * f.as_matrix() + &v.base.perp * v.v.as_matrix() * &xg)
}

/// `tr(S_V Σ S_W) + tr((I - UU^T) V Σ^- W (I - UU^T))`.
pub fn metric_stratum(v: &StratumTangent, w: &StratumTangent) -> Result<f64> {
    if v.base.mat() != w.base.mat() {
        return Err(Error::DimensionMismatch("tangents at different base points".into()));
    }
    let sigma = v.base.mat().as_matrix();
    let p = &v.base.perp;
    let range = (v.s.as_matrix() * sigma * w.s.as_matrix()).trace();
    let normal = (p * v.v.as_matrix() * v.base.pinv() * w.v.as_matrix() * p).trace();
    Ok(range + normal)
}

/// `Σ + tV + t^2 W`, for any real `t`.
pub fn exp_stratum(v: &StratumTangent, t: f64) -> SymMatrix {
    let w = v.second_order();
    SymMatrix::sym_part(&(v.base.mat().as_matrix() + v.v.as_matrix() * t + w.as_matrix() * (t * t)))
}

/// Eigenvalues of `F0` whose eigenspace meets `ker M0`; these are exactly
/// the `λ` for which the geodesic drops rank at `t = -1/λ`.
pub fn degenerate_eigenvalues(v: &StratumTangent, tol: &Tolerances) -> Result<Vec<f64>> {
    let eig = eig_sym(&v.f0)?;
    let d_min = v.base.d.iter().copied().fold(f64::INFINITY, f64::min);
    let v_norm = spectral_norm(&v.v);
    let scale = spectral_norm(&v.m0).max(v_norm * v_norm / (d_min * d_min));
    let mut out = Vec::new();
    for space in eig.eigenspaces(tol) {
        if intersects_with_scale(&space.basis, &v.m0, scale, tol)? {
            out.push(space.value);
        }
    }
    Ok(out)
}

/// Maximal open interval on which the geodesic keeps rank `k`.
pub fn definition_interval_stratum(v: &StratumTangent, tol: &Tolerances) -> Result<OpenInterval> {
    let e = degenerate_eigenvalues(v, tol)?;
    let band = tol.rank_rel * eig_sym(&v.f0)?.max_abs_value();
    let ext = e
        .iter()
        .copied()
        .reduce(f64::min)
        .zip(e.iter().copied().reduce(f64::max));
    Ok(OpenInterval::from_extremes(ext, band))
}

/// Cut times in both directions: `forward = t_cut(Σ, V)` and
/// `backward = t_cut(Σ, -V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutTimes {
    pub forward: f64,
    pub backward: f64,
}

pub fn cut_time_stratum(v: &StratumTangent, tol: &Tolerances) -> Result<CutTimes> {
    let eig = eig_sym(&v.f0)?;
    let iv = OpenInterval::from_extremes(eig.min_value().zip(eig.max_value()), tol.rank_rel * eig.max_abs_value());
    Ok(CutTimes {
        forward: iv.hi,
        backward: -iv.lo,
    })
}

/// A rotation tested against the preimage characterization.
#[derive(Debug, Clone)]
pub struct RotationCandidate {
    pub r: DMatrix<f64>,
    /// `X^T Y R^T`.
    pub h: DMatrix<f64>,
    pub symmetric_ok: bool,
    pub preimage_ok: bool,
    pub log_ok: bool,
}

fn check_pair(x: &Factor, y: &Factor, r: &DMatrix<f64>) -> Result<()> {
    let k = x.ncols();
    if y.shape() != x.shape() || r.shape() != (k, k) {
        return Err(Error::DimensionMismatch(format!(
            "X {:?}, Y {:?}, R {:?}",
            x.shape(),
            y.shape(),
            r.shape()
        )));
    }
    Ok(())
}

/// Classifies `R` as a symmetric solution, a preimage and/or a logarithm
/// of `Λ = Y Y^T` seen from `Σ = X X^T`.
pub fn is_preimage(x: &Factor, y: &Factor, r: &DMatrix<f64>, tol: &Tolerances) -> Result<RotationCandidate> {
    check_pair(x, y, r)?;
    let h = x.transpose() * y * r.transpose();
    let asym = max_abs(&(&h - h.transpose()));
    let symmetric_ok = asym <= tol.sym_abs * max_abs(&h).max(1.0);
    let mut out = RotationCandidate {
        r: r.clone(),
        h: h.clone(),
        symmetric_ok,
        preimage_ok: false,
        log_ok: false,
    };
    if !symmetric_ok {
        return Ok(out);
    }
    let hs = SymMatrix::sym_part(&h);
    let k = x.ncols();
    let g = SymMatrix::sym_part(&(x.transpose() * x));
    let g_inv_root = eig_sym(&g)?.apply(|v| 1.0 / v.sqrt());
    let gi = g_inv_root.as_matrix();
    let a = SymMatrix::sym_part(&(gi * hs.as_matrix() * gi));
    let yr = y * r.transpose();
    let b = SymMatrix::sym_part(&(gi * yr.transpose() * &yr * gi));
    let b_norm = spectral_norm(&b);

    let eig_a = eig_sym(&a)?;
    let band = tol.rank_rel * eig_a.max_abs_value();
    let mut preimage_ok = true;
    for space in eig_a.eigenspaces(tol) {
        let mu = space.value;
        if mu >= -band {
            continue;
        }
        let shifted = DMatrix::identity(k, k) * (mu * mu) - b.as_matrix();
        if intersects_with_scale(&space.basis, &shifted, b_norm.max(mu * mu), tol)? {
            preimage_ok = false;
            break;
        }
    }
    out.preimage_ok = preimage_ok;
    out.log_ok = preimage_ok && eig_sym(&hs)?.min_value().unwrap_or(0.0) >= -band_of(&hs, tol)?;
    Ok(out)
}

fn band_of(s: &SymMatrix, tol: &Tolerances) -> Result<f64> {
    Ok(tol.rank_rel * eig_sym(s)?.max_abs_value())
}

/// `V = 2 sym(X R Y^T) - 2Σ` for `R` in the preimage set.
pub fn tangent_from_rotation(x: &Factor, y: &Factor, r: &DMatrix<f64>, tol: &Tolerances) -> Result<StratumTangent> {
    if !is_preimage(x, y, r, tol)?.preimage_ok {
        return Err(Error::NotPreimage);
    }
    let sigma = StratumPoint::from_factor(x, tol)?;
    let xry = x * r * y.transpose();
    let v = SymMatrix::sym_part(&(&xry + xry.transpose() - sigma.mat().as_matrix() * 2.0));
    Ok(StratumTangent::unchecked(&sigma, v))
}

/// Inverse of [`tangent_from_rotation`]: solves `Y R^T = X + V#` in the
/// least-squares sense and checks the result.
pub fn rotation_from_tangent(v: &StratumTangent, x: &Factor, y: &Factor, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let lift = horizontal_lift_stratum(x, v, tol)?;
    if y.shape() != x.shape() {
        return Err(Error::DimensionMismatch(format!(
            "X {:?}, Y {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let target = x + &lift;
    let gy = (y.transpose() * y).try_inverse().ok_or(Error::RankDeficient {
        rank: 0,
        expected: y.ncols(),
    })?;
    let r = (gy * y.transpose() * &target).transpose();
    let k = r.nrows();
    let scale = max_abs(&target).max(1.0);
    let residual = max_abs(&(y * r.transpose() - &target));
    let orth = max_abs(&(&r * r.transpose() - DMatrix::identity(k, k)));
    if residual > tol.sym_abs * scale || orth > tol.sym_abs * scale {
        return Err(Error::NotPreimage);
    }
    if !is_preimage(x, y, &r, tol)?.preimage_ok {
        return Err(Error::NotPreimage);
    }
    Ok(r)
}

/// Segment `(1-t)^2 Σ + t^2 Λ + 2t(1-t) sym(X R Y^T)`.
pub fn geodesic_stratum_by_rotation(
    x: &Factor,
    y: &Factor,
    r: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<GeodesicSegment> {
    if !is_preimage(x, y, r, tol)?.preimage_ok {
        return Err(Error::NotPreimage);
    }
    let sigma = CovPoint::new(SymMatrix::sym_part(&(x * x.transpose())), tol)?;
    let lambda = CovPoint::new(SymMatrix::sym_part(&(y * y.transpose())), tol)?;
    let mixed = SymMatrix::sym_part(&(x * r * y.transpose()));
    Ok(GeodesicSegment::new(sigma, lambda, mixed)?.with_provenance(Provenance::Rotation(r.clone())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    Unique,
    Pair,
    OrthogonalFamily,
}

impl LogKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LogKind::Unique => "unique",
            LogKind::Pair => "pair",
            LogKind::OrthogonalFamily => "orthogonal_family",
        }
    }
}

/// All logarithms of `Λ` from `Σ`, indexed by `Q ∈ O(k - r)` through
/// `R(Q) = Diag(I_r, Q)` on factors aligned so that `X^T Y = Diag(D_r, 0)`.
#[derive(Debug, Clone)]
pub struct LogFamily {
    pub kind: LogKind,
    pub r: usize,
    pub k: usize,
    pub x: Factor,
    pub y: Factor,
    base: StratumPoint,
    lambda: CovPoint,
}

impl LogFamily {
    /// Size `k - r` of the orthogonal parameter.
    pub fn param_dim(&self) -> usize {
        self.k - self.r
    }

    pub fn rotation(&self, q: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
        let m = self.param_dim();
        if q.shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!(
                "Q must be {m}x{m}, got {:?}",
                q.shape()
            )));
        }
        let orth = max_abs(&(q.transpose() * q - DMatrix::identity(m, m)));
        if orth > tol.sym_abs {
            return Err(Error::ParamOutOfRange(format!(
                "Q is not orthogonal (residual {orth:e})"
            )));
        }
        let mut r = DMatrix::identity(self.k, self.k);
        r.view_mut((self.r, self.r), (m, m)).copy_from(q);
        Ok(r)
    }

    pub fn member(&self, q: &DMatrix<f64>, tol: &Tolerances) -> Result<StratumTangent> {
        let r = self.rotation(q, tol)?;
        let xry = &self.x * r * self.y.transpose();
        let v = SymMatrix::sym_part(&(&xry + xry.transpose() - self.base.mat().as_matrix() * 2.0));
        Ok(StratumTangent::unchecked(&self.base, v))
    }

    pub fn segment(&self, q: &DMatrix<f64>, tol: &Tolerances) -> Result<GeodesicSegment> {
        let r = self.rotation(q, tol)?;
        let mixed = SymMatrix::sym_part(&(&self.x * &r * self.y.transpose()));
        Ok(
            GeodesicSegment::new(self.base.point().clone(), self.lambda.clone(), mixed)?
                .with_provenance(Provenance::Rotation(r)),
        )
    }

    /// The finitely many parameters for `Unique` (empty `Q`) and `Pair`
    /// (`Q = ±1`); `None` for a continuous family.
    pub fn finite_params(&self) -> Option<Vec<DMatrix<f64>>> {
        match self.kind {
            LogKind::Unique => Some(vec![DMatrix::zeros(0, 0)]),
            LogKind::Pair => Some(vec![
                DMatrix::from_element(1, 1, 1.0),
                DMatrix::from_element(1, 1, -1.0),
            ]),
            LogKind::OrthogonalFamily => None,
        }
    }
}

pub fn logarithms_stratum(sigma: &StratumPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<LogFamily> {
    let (k, l) = (sigma.rank(), lambda.rank());
    if k != l {
        return Err(Error::RankMismatch { k, l });
    }
    let af = aligned_factors(sigma.point(), lambda, tol)?;
    let kind = if af.r == k {
        LogKind::Unique
    } else if af.r + 1 == k {
        LogKind::Pair
    } else {
        LogKind::OrthogonalFamily
    };
    Ok(LogFamily {
        kind,
        r: af.r,
        k,
        x: af.x.columns(0, k).into_owned(),
        y: af.y.columns(0, k).into_owned(),
        base: sigma.clone(),
        lambda: lambda.clone(),
    })
}

/// The unique logarithm `2 sym(Σ^{1/2} ((Σ^{1/2} Λ Σ^{1/2})^{1/2})^- Σ^{1/2} Λ) - 2Σ`
/// when `rk(ΣΛ) = k`.
pub fn log_map_stratum(sigma: &StratumPoint, lambda: &CovPoint, tol: &Tolerances) -> Result<StratumTangent> {
    let (k, l) = (sigma.rank(), lambda.rank());
    if k != l {
        return Err(Error::RankMismatch { k, l });
    }
    let r = cov::rank_product(sigma.point(), lambda, tol)?;
    if r < k {
        return Err(Error::NotUnique { r, k });
    }
    let mixed = cov::canonical_mixed(sigma.point(), lambda, tol)?;
    let v = mixed.scale(2.0).sub(&sigma.mat().scale(2.0));
    Ok(StratumTangent::unchecked(sigma, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, eps: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) <= eps
    }

    fn sigma110() -> StratumPoint {
        StratumPoint::new(SymMatrix::from_diagonal(&[1.0, 1.0, 0.0]), &tol()).unwrap()
    }

    fn e12() -> Factor {
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    }

    fn v_shear() -> SymMatrix {
        SymMatrix::from_row_slice(3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0])
    }

    fn r_minus(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(2, 2, &[-c, s, s, c])
    }

    #[test]
    fn projection_examples() {
        let full = StratumPoint::new(SymMatrix::from_diagonal(&[1.0, 2.0]), &tol()).unwrap();
        let w = SymMatrix::from_row_slice(2, &[1.0, 3.0, 3.0, 4.0]);
        assert!(close(&project_tangent(&full, &w).unwrap().v, &w, 1e-15));

        let s = sigma110();
        let normal = SymMatrix::from_diagonal(&[0.0, 0.0, 1.0]);
        assert!(max_abs(&project_tangent(&s, &normal).unwrap().v) < 1e-15);

        let w = SymMatrix::from_row_slice(3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let v = project_tangent(&s, &w).unwrap();
        assert!(close(&v.v, &v_shear(), 1e-15));
        assert!(close(&project_tangent(&s, &v.v).unwrap().v, &v.v, 1e-15));

        assert!(matches!(
            StratumTangent::new(&s, w, &tol()),
            Err(Error::NotTangent { rank: 2, .. })
        ));
    }

    #[test]
    fn lift_examples() {
        let i2 = StratumPoint::new(SymMatrix::identity(2), &tol()).unwrap();
        let v = SymMatrix::from_row_slice(2, &[1.0, -2.0, -2.0, 3.0]);
        let tan = StratumTangent::new(&i2, v.clone(), &tol()).unwrap();
        let lift = horizontal_lift_stratum(&DMatrix::identity(2, 2), &tan, &tol()).unwrap();
        assert!(close(&lift, &(v.as_matrix() * 0.5), 1e-15));

        let s = sigma110();
        let tan = StratumTangent::new(&s, v_shear(), &tol()).unwrap();
        let lift = horizontal_lift_stratum(&e12(), &tan, &tol()).unwrap();
        assert!(close(
            &lift,
            &DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            1e-15
        ));

        let zero = StratumTangent::new(&s, SymMatrix::zeros(3), &tol()).unwrap();
        assert_eq!(max_abs(&horizontal_lift_stratum(&e12(), &zero, &tol()).unwrap()), 0.0);
    }

    #[test]
    fn metric_examples() {
        let s = sigma110();
        let v = StratumTangent::new(&s, v_shear(), &tol()).unwrap();
        assert!(max_abs(&v.s) < 1e-15);
        assert!((metric_stratum(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        let zero = StratumTangent::new(&s, SymMatrix::zeros(3), &tol()).unwrap();
        assert_eq!(metric_stratum(&zero, &v).unwrap(), 0.0);

        let full = crate::spd::SpdPoint::new(SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 3.0]), &tol()).unwrap();
        let sp = StratumPoint::new(full.mat().clone(), &tol()).unwrap();
        let a = SymMatrix::from_row_slice(2, &[1.0, -2.0, -2.0, 0.5]);
        let b = SymMatrix::from_row_slice(2, &[0.3, 1.0, 1.0, -1.0]);
        let ta = StratumTangent::new(&sp, a.clone(), &tol()).unwrap();
        let tb = StratumTangent::new(&sp, b.clone(), &tol()).unwrap();
        let expected = crate::spd::metric_full(&full, &a, &b).unwrap();
        assert!((metric_stratum(&ta, &tb).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn exp_examples() {
        let s = sigma110();
        let v = StratumTangent::new(&s, v_shear(), &tol()).unwrap();
        for t in [-1.5, 0.0, 0.5, 2.0] {
            let expected = SymMatrix::from_row_slice(3, &[1.0, 0.0, 0.0, 0.0, 1.0, t, 0.0, t, t * t]);
            assert!(close(&exp_stratum(&v, t), &expected, 1e-14));
        }
        let zero = StratumTangent::new(&s, SymMatrix::zeros(3), &tol()).unwrap();
        assert!(close(&exp_stratum(&zero, 3.0), s.mat(), 0.0));

        let v = StratumTangent::new(&s, s.mat().scale(2.0), &tol()).unwrap();
        assert!(close(&exp_stratum(&v, 1.0), &(s.mat().as_matrix() * 4.0), 1e-14));
    }

    #[test]
    fn interval_examples() {
        let s = sigma110();
        // rotation -I2 between the factors of Σ and 4Σ gives V = -6Σ
        let v = StratumTangent::new(&s, s.mat().scale(-6.0), &tol()).unwrap();
        let iv = definition_interval_stratum(&v, &tol()).unwrap();
        assert!((iv.hi - 1.0 / 3.0).abs() < 1e-14 && iv.lo == f64::NEG_INFINITY);

        let y = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let v = tangent_from_rotation_unchecked(&e12(), &y, &r_minus(0.0));
        let iv = definition_interval_stratum(&v, &tol()).unwrap();
        assert!((iv.hi - 0.5).abs() < 1e-14);

        let zero = StratumTangent::new(&s, SymMatrix::zeros(3), &tol()).unwrap();
        assert_eq!(
            definition_interval_stratum(&zero, &tol()).unwrap(),
            OpenInterval::REAL_LINE
        );

        let v = StratumTangent::new(&s, v_shear(), &tol()).unwrap();
        assert_eq!(
            definition_interval_stratum(&v, &tol()).unwrap(),
            OpenInterval::REAL_LINE
        );
    }

    fn tangent_from_rotation_unchecked(x: &Factor, y: &Factor, r: &DMatrix<f64>) -> StratumTangent {
        let sigma = StratumPoint::from_factor(x, &tol()).unwrap();
        let xry = x * r * y.transpose();
        let v = SymMatrix::sym_part(&(&xry + xry.transpose() - sigma.mat().as_matrix() * 2.0));
        StratumTangent::new(&sigma, v, &tol()).unwrap()
    }

    #[test]
    fn cut_time_examples() {
        let s = sigma110();
        let v = StratumTangent::new(&s, v_shear(), &tol()).unwrap();
        assert_eq!(cut_time_stratum(&v, &tol()).unwrap().forward, f64::INFINITY);

        let v = StratumTangent::new(&s, s.mat().scale(2.0), &tol()).unwrap();
        let c = cut_time_stratum(&v, &tol()).unwrap();
        assert_eq!(c.forward, f64::INFINITY);
        assert!((c.backward - 1.0).abs() < 1e-14);

        let zero = StratumTangent::new(&s, SymMatrix::zeros(3), &tol()).unwrap();
        let c = cut_time_stratum(&zero, &tol()).unwrap();
        assert_eq!((c.forward, c.backward), (f64::INFINITY, f64::INFINITY));
    }

    #[test]
    fn preimage_examples() {
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let c = is_preimage(&e12(), &y, &r_minus(std::f64::consts::PI), &tol()).unwrap();
        assert!(c.symmetric_ok && c.preimage_ok && !c.log_ok);

        let c = is_preimage(&e12(), &y, &r_minus(0.0), &tol()).unwrap();
        assert!(c.symmetric_ok && !c.preimage_ok && !c.log_ok);

        let c = is_preimage(&e12(), &y, &DMatrix::identity(2, 2), &tol()).unwrap();
        assert!(c.symmetric_ok && c.preimage_ok && c.log_ok);

        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0]);
        let c = is_preimage(&x, &x, &DMatrix::identity(2, 2), &tol()).unwrap();
        assert!(c.symmetric_ok && c.preimage_ok && c.log_ok);

        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let c = is_preimage(&e12(), &y, &rot, &tol()).unwrap();
        assert!(!c.symmetric_ok && !c.preimage_ok);
    }

    #[test]
    fn rotation_round_trips() {
        let y3 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let lambda = SymMatrix::from_diagonal(&[1.0, 0.0, 1.0]);
        let r = DMatrix::identity(2, 2);
        let v = tangent_from_rotation(&e12(), &y3, &r, &tol()).unwrap();
        assert!(close(&exp_stratum(&v, 1.0), &lambda, 1e-14));
        let back = rotation_from_tangent(&v, &e12(), &y3, &tol()).unwrap();
        assert!(close(&back, &r, 1e-14));

        let v = tangent_from_rotation(&e12(), &e12(), &r, &tol()).unwrap();
        assert_eq!(max_abs(&v.v), 0.0);
        assert!(close(
            &rotation_from_tangent(&v, &e12(), &e12(), &tol()).unwrap(),
            &r,
            1e-15
        ));

        let y2 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let v = log_map_stratum(
            &sigma110(),
            &CovPoint::new(SymMatrix::sym_part(&(&y2 * y2.transpose())), &tol()).unwrap(),
            &tol(),
        )
        .unwrap();
        assert!(close(
            &rotation_from_tangent(&v, &e12(), &y2, &tol()).unwrap(),
            &r,
            1e-13
        ));

        let y = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            tangent_from_rotation(&e12(), &y, &r_minus(0.0), &tol()),
            Err(Error::NotPreimage)
        ));
    }

    #[test]
    fn rotation_segments() {
        let y3 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let seg = geodesic_stratum_by_rotation(
            &e12(),
            &y3,
            &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0])),
            &tol(),
        )
        .unwrap();
        let t = 0.3;
        let u = t * (1.0 - t);
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.49, -u, 0.0, -u, 0.09]);
        assert!(close(&seg.eval(t), &expected, 1e-14));

        let y2 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let seg = geodesic_stratum_by_rotation(&e12(), &y2, &r_minus(std::f64::consts::PI), &tol()).unwrap();
        let a = 1.0 - 2.0 * t;
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, a * a, -t * a, 0.0, -t * a, t * t]);
        assert!(close(&seg.eval(t), &expected, 1e-14));
    }

    #[test]
    fn log_family_kinds() {
        let s = sigma110();
        let ex3 = CovPoint::new(SymMatrix::from_diagonal(&[1.0, 0.0, 1.0]), &tol()).unwrap();
        let fam = logarithms_stratum(&s, &ex3, &tol()).unwrap();
        assert_eq!((fam.kind, fam.r), (LogKind::Pair, 1));
        for q in fam.finite_params().unwrap() {
            let v = fam.member(&q, &tol()).unwrap();
            assert!(close(&exp_stratum(&v, 1.0), ex3.mat(), 1e-14));
        }

        let ex1 = CovPoint::new(s.mat().scale(4.0), &tol()).unwrap();
        assert_eq!(logarithms_stratum(&s, &ex1, &tol()).unwrap().kind, LogKind::Unique);

        let a = StratumPoint::new(SymMatrix::from_diagonal(&[1.0, 1.0, 0.0, 0.0]), &tol()).unwrap();
        let b = CovPoint::new(SymMatrix::from_diagonal(&[0.0, 0.0, 1.0, 1.0]), &tol()).unwrap();
        let fam = logarithms_stratum(&a, &b, &tol()).unwrap();
        assert_eq!((fam.kind, fam.r, fam.param_dim()), (LogKind::OrthogonalFamily, 0, 2));
        assert!(fam.member(&(DMatrix::identity(2, 2) * 2.0), &tol()).is_err());

        let low = CovPoint::new(SymMatrix::from_diagonal(&[1.0, 0.0, 0.0]), &tol()).unwrap();
        assert!(matches!(
            logarithms_stratum(&s, &low, &tol()),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn log_map_examples() {
        let s = sigma110();
        assert!(max_abs(&log_map_stratum(&s, s.point(), &tol()).unwrap().v) < 1e-14);

        let ex1 = CovPoint::new(s.mat().scale(4.0), &tol()).unwrap();
        let v = log_map_stratum(&s, &ex1, &tol()).unwrap();
        assert!(close(&v.v, &s.mat().scale(2.0), 1e-14));

        let ex2 = CovPoint::new(
            SymMatrix::from_row_slice(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]),
            &tol(),
        )
        .unwrap();
        let v = log_map_stratum(&s, &ex2, &tol()).unwrap();
        assert!(close(&v.v, &v_shear(), 1e-14));

        let ex3 = CovPoint::new(SymMatrix::from_diagonal(&[1.0, 0.0, 1.0]), &tol()).unwrap();
        assert!(matches!(
            log_map_stratum(&s, &ex3, &tol()),
            Err(Error::NotUnique { r: 1, k: 2 })
        ));
    }
}
