//! Riemannian geometry of the open cone of positive definite matrices.

use crate::cov::{CovPoint, GeodesicSegment, Provenance};
use crate::error::{Error, Result};
use crate::kernel::{max_abs, sqrt_psd, sylvester_in_eigenbasis, Factor, SymMatrix, Tolerances};

/// Strictly positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdPoint {
    point: CovPoint,
}

impl SpdPoint {
    pub fn new(mat: SymMatrix, tol: &Tolerances) -> Result<Self> {
        Self::from_cov(CovPoint::new(mat, tol)?)
    }

    pub fn from_cov(point: CovPoint) -> Result<Self> {
        if !point.is_full_rank() {
            return Err(Error::NotSpd {
                min_eig: point.eig().min_value().unwrap_or(0.0),
            });
        }
        Ok(Self { point })
    }

    pub fn mat(&self) -> &SymMatrix {
        self.point.mat()
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn point(&self) -> &CovPoint {
        &self.point
    }

    /// `S_Σ(V)`, the solution of `ΣS + SΣ = V`.
    pub fn sylvester(&self, v: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(v)?;
        let eig = self.point.eig();
        Ok(sylvester_in_eigenbasis(&eig.vectors, eig.values.as_slice(), v))
    }

    fn inv_sqrt(&self) -> SymMatrix {
        self.point.eig().apply(|v| 1.0 / v.sqrt())
    }

    fn check_dim(&self, v: &SymMatrix) -> Result<()> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "tangent is {0}x{0}, base point is {1}x{1}",
                v.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Open interval with possibly infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OpenInterval {
    pub const REAL_LINE: OpenInterval = OpenInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t < self.hi
    }

    /// Interval from the extreme eigenvalues `λ-` and `λ+` of a matrix
    /// `S` such that the geodesic degenerates when `1 + tλ = 0` for some
    /// `λ` in the relevant set. `None` stands for an empty set.
    pub(crate) fn from_extremes(extremes: Option<(f64, f64)>, band: f64) -> Self {
        let Some((lmin, lmax)) = extremes else {
            return Self::REAL_LINE;
        };
        let lo = if lmax > band { -1.0 / lmax } else { f64::NEG_INFINITY };
        let hi = if lmin < -band { -1.0 / lmin } else { f64::INFINITY };
        Self { lo, hi }
    }
}

/// Tangent vector at an SPD point with its Sylvester transform cached.
#[derive(Debug, Clone)]
pub struct FullTangent {
    pub base: SpdPoint,
    pub v: SymMatrix,
    pub s: SymMatrix,
}

impl FullTangent {
    pub fn new(base: &SpdPoint, v: SymMatrix) -> Result<Self> {
        let s = base.sylvester(&v)?;
        Ok(Self {
            base: base.clone(),
            v,
            s,
        })
    }
}

/// Value of the exponential map together with a flag telling whether `t`
/// lies inside the definition interval.
#[derive(Debug, Clone)]
pub struct ExpValue {
    pub mat: SymMatrix,
    pub in_domain: bool,
}

/// `tr(S_Σ(V) Σ S_Σ(W))`.
pub fn metric_full(sigma: &SpdPoint, v: &SymMatrix, w: &SymMatrix) -> Result<f64> {
    let sv = sigma.sylvester(v)?;
    let sw = sigma.sylvester(w)?;
    Ok((sv.as_matrix() * sigma.mat().as_matrix() * sw.as_matrix()).trace())
}

/// `Σ + tV + t^2 S Σ S` with `S = S_Σ(V)`, evaluated for any real `t`.
pub fn exp_full(sigma: &SpdPoint, v: &SymMatrix, t: f64, tol: &Tolerances) -> Result<ExpValue> {
    let tan = FullTangent::new(sigma, v.clone())?;
    let s = tan.s.as_matrix();
    let w = s * sigma.mat().as_matrix() * s;
    let mat = SymMatrix::sym_part(&(sigma.mat().as_matrix() + v.as_matrix() * t + w * (t * t)));
    let in_domain = interval_of(&tan.s, tol)?.contains(t);
    Ok(ExpValue { mat, in_domain })
}

fn extremes(s: &SymMatrix) -> Result<(Option<(f64, f64)>, f64)> {
    let eig = crate::kernel::eig_sym(s)?;
    let ext = eig.min_value().zip(eig.max_value());
    Ok((ext, eig.max_abs_value()))
}

fn interval_of(s: &SymMatrix, tol: &Tolerances) -> Result<OpenInterval> {
    let (ext, scale) = extremes(s)?;
    Ok(OpenInterval::from_extremes(ext, tol.rank_rel * scale))
}

/// Maximal open interval on which the geodesic stays positive definite.
pub fn definition_interval_full(sigma: &SpdPoint, v: &SymMatrix, tol: &Tolerances) -> Result<OpenInterval> {
    interval_of(&sigma.sylvester(v)?, tol)
}

/// Forward cut time: `-1/λmin(S_Σ(V))` when `λmin < 0`, else infinity.
pub fn cut_time_full(sigma: &SpdPoint, v: &SymMatrix, tol: &Tolerances) -> Result<f64> {
    Ok(definition_interval_full(sigma, v, tol)?.hi)
}

/// `Σ^{1/2} (Σ^{1/2} Λ Σ^{1/2})^{1/2} Σ^{-1/2}`, not symmetrized.
fn transport_product(sigma: &SpdPoint, lambda: &SpdPoint, tol: &Tolerances) -> Result<nalgebra::DMatrix<f64>> {
    if sigma.dim() != lambda.dim() {
        return Err(Error::DimensionMismatch(format!(
            "points of dimension {} and {}",
            sigma.dim(),
            lambda.dim()
        )));
    }
    let rs = sigma.point.sqrt().as_matrix();
    let c = SymMatrix::sym_part(&(rs * lambda.mat().as_matrix() * rs));
    let c_root = sqrt_psd(&c, tol)?;
    Ok(rs * c_root.as_matrix() * sigma.inv_sqrt().as_matrix())
}

/// The unique logarithm `2 sym(Σ^{1/2} C^{1/2} Σ^{-1/2}) - 2Σ`,
/// `C = Σ^{1/2} Λ Σ^{1/2}`.
pub fn log_full(sigma: &SpdPoint, lambda: &SpdPoint, tol: &Tolerances) -> Result<SymMatrix> {
    let p = transport_product(sigma, lambda, tol)?;
    Ok(SymMatrix::sym_part(
        &((&p + p.transpose()) - sigma.mat().as_matrix() * 2.0),
    ))
}

/// The geodesic from `Σ` to `Λ` in universal form.
pub fn geodesic_full(sigma: &SpdPoint, lambda: &SpdPoint, tol: &Tolerances) -> Result<GeodesicSegment> {
    let mixed = SymMatrix::sym_part(&transport_product(sigma, lambda, tol)?);
    Ok(GeodesicSegment::new(sigma.point.clone(), lambda.point.clone(), mixed)?.with_provenance(Provenance::ClosedForm))
}

/// Horizontal lift `S_Σ(V) X` for a factor `X X^T = Σ`.
pub fn horizontal_lift_full(sigma: &SpdPoint, v: &SymMatrix, x: &Factor, tol: &Tolerances) -> Result<Factor> {
    check_factor(sigma.mat(), x, tol)?;
    Ok(sigma.sylvester(v)?.as_matrix() * x)
}

pub(crate) fn check_factor(sigma: &SymMatrix, x: &Factor, tol: &Tolerances) -> Result<()> {
    if x.nrows() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor has {} rows, point is {}x{}",
            x.nrows(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    let residual = max_abs(&(x * x.transpose() - sigma.as_matrix()));
    if residual > tol.sym_abs * sigma.norm_inf().max(1.0) {
        return Err(Error::FactorMismatch { residual });
    }
    Ok(())
}
