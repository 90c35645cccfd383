//! Dense symmetric linear algebra with an explicit tolerance policy.
//!
//! Every numerical rank decision in the crate goes through [`Tolerances`];
//! the geometry modules above this one are written as if arithmetic were
//! exact and delegate all "is this zero?" questions here.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, QR};

use crate::error::{Error, Result};

/// A dense `n x k` real matrix used as a factor `X` of `XX^T`.
pub type Factor = DMatrix<f64>;

const MAX_SWEEPS_PER_DIM: usize = 1000;
const CONVERGENCE_EPS: f64 = 5.0 * f64::EPSILON;

/// Relative backward error accepted from a computed factorization. Healthy
/// runs stay below `1e-12`; failed ones are off by order one.
const BACKWARD_REL: f64 = 1e-10;

fn accurate(recon: &DMatrix<f64>, m: &DMatrix<f64>) -> bool {
    (recon - m).norm() <= BACKWARD_REL * m.norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative threshold for rank decisions, compared against the largest
    /// eigenvalue or singular value.
    pub rank_rel: f64,
    /// Largest accepted `max |M - M^T|` before an input is rejected.
    pub sym_abs: f64,
    /// Relative gap below which neighbouring eigenvalues share an eigenspace.
    pub eig_cluster: f64,
    /// Default tolerance for geometric equality checks.
    pub geo_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rel: 1e-9,
            sym_abs: 1e-8,
            eig_cluster: 1e-7,
            geo_tol: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rank_rel", self.rank_rel),
            ("sym_abs", self.sym_abs),
            ("eig_cluster", self.eig_cluster),
            ("geo_tol", self.geo_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerances(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rank_rel >= 1.0 {
            return Err(Error::InvalidTolerances(format!(
                "rank_rel must be < 1, got {}",
                self.rank_rel
            )));
        }
        Ok(())
    }
}

/// Real symmetric matrix. Symmetry is exact: construction averages `M` and
/// `M^T` so that `entries[i][j] == entries[j][i]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Symmetric part `(M + M^T) / 2` without any asymmetry check.
    pub fn sym_part(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "sym_part of a non-square matrix");
        let n = m.nrows();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = m[(i, i)];
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Self(out)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// Row-major constructor; panics on a length mismatch. Intended for
    /// literals in examples and tests.
    pub fn from_row_slice(n: usize, data: &[f64]) -> Self {
        Self::sym_part(&DMatrix::from_row_slice(n, n, data))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Largest absolute entry.
    pub fn norm_inf(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        Self(&self.0 - &other.0)
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Largest absolute entry (`0` for empty matrices).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn symmetrize(m: &DMatrix<f64>, tol: &Tolerances) -> Result<SymMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let residual = max_abs(&(m - m.transpose()));
    if residual > tol.sym_abs {
        return Err(Error::AsymmetricInput { residual });
    }
    Ok(SymMatrix::sym_part(m))
}

/// Eigendecomposition `S = U diag(values) U^T` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn min_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::min)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }

    /// `U f(D) U^T`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            scaled.column_mut(j).scale_mut(fj);
        }
        SymMatrix::sym_part(&(scaled * self.vectors.transpose()))
    }

    /// Groups eigenvalues into numerically equal clusters.
    pub fn eigenspaces(&self, tol: &Tolerances) -> Vec<Eigenspace> {
        let n = self.dim();
        if n == 0 {
            return Vec::new();
        }
        let gap = tol.eig_cluster * self.max_abs_value();
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..n {
            if self.values[i] - self.values[i - 1] > gap {
                groups.push((start, i));
                start = i;
            }
        }
        groups.push((start, n));
        groups
            .into_iter()
            .map(|(a, b)| {
                let value = self.values.rows(a, b - a).sum() / (b - a) as f64;
                Eigenspace {
                    value,
                    basis: self.vectors.columns(a, b - a).into_owned(),
                }
            })
            .collect()
    }
}

/// A cluster of equal eigenvalues and an orthonormal basis of its eigenspace.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub value: f64,
    pub basis: DMatrix<f64>,
}

pub fn eig_sym(s: &SymMatrix) -> Result<Eigen> {
    let n = s.dim();
    if n == 0 {
        return Ok(Eigen {
            vectors: DMatrix::zeros(0, 0),
            values: DVector::zeros(0),
        });
    }
    let eig = nalgebra::SymmetricEigen::try_new(s.as_matrix().clone(), CONVERGENCE_EPS, MAX_SWEEPS_PER_DIM * n)
        .filter(|e| {
            let recon = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose();
            accurate(&recon, s.as_matrix())
        })
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigen { vectors, values })
}

/// Number of entries with `|v| > rank_rel * max |v|`.
pub fn rank_with_tol(values: &[f64], tol: &Tolerances) -> usize {
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    rank_scaled(values, scale, tol)
}

/// Rank decision against an externally supplied magnitude instead of the
/// largest value itself. Used where the list can be pure rounding noise,
/// e.g. the singular values of `X^T Y` when `X^T Y = 0` exactly.
pub fn rank_scaled(values: &[f64], scale: f64, tol: &Tolerances) -> usize {
    if scale <= 0.0 {
        return 0;
    }
    let band = tol.rank_rel * scale;
    values.iter().filter(|v| v.abs() > band).count()
}

fn psd_band(eig: &Eigen, tol: &Tolerances) -> Result<f64> {
    let band = tol.rank_rel * eig.max_abs_value();
    if let Some(min) = eig.min_value() {
        if min < -band {
            return Err(Error::NotPsd { min_eig: min });
        }
    }
    Ok(band)
}

/// Symmetric PSD square root. Eigenvalues inside the rank band
/// `[-rank_rel * max, rank_rel * max]` are treated as exact zeros.
pub fn sqrt_psd(s: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    let eig = eig_sym(s)?;
    let band = psd_band(&eig, tol)?;
    Ok(eig.apply(|v| if v > band { v.sqrt() } else { 0.0 }))
}

/// Moore-Penrose inverse of a symmetric matrix.
pub fn pinv_sym(s: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    let eig = eig_sym(s)?;
    let band = tol.rank_rel * eig.max_abs_value();
    Ok(eig.apply(|v| if v.abs() > band { 1.0 / v } else { 0.0 }))
}

/// Solves `A Z + Z A = B` for symmetric `Z`, `A` symmetric positive definite.
pub fn sylvester_spd(a: &SymMatrix, b: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "sylvester: A is {0}x{0}, B is {1}x{1}",
            a.dim(),
            b.dim()
        )));
    }
    let eig = eig_sym(a)?;
    if let Some(min) = eig.min_value() {
        if min <= tol.rank_rel * eig.max_abs_value() {
            return Err(Error::NotSpd { min_eig: min });
        }
    }
    Ok(sylvester_in_eigenbasis(&eig.vectors, eig.values.as_slice(), b))
}

/// `U S_D(U^T B U) U^T` where `A = U diag(d) U^T`; with `U` having `k < n`
/// orthonormal columns this is the restricted solve used on strata.
pub(crate) fn sylvester_in_eigenbasis(u: &DMatrix<f64>, d: &[f64], b: &DMatrix<f64>) -> SymMatrix {
    let mut inner = u.transpose() * b * u;
    divide_by_eigen_sums(&mut inner, d);
    SymMatrix::sym_part(&(u * inner * u.transpose()))
}

/// Entrywise `B_ij / (d_i + d_j)`: the Sylvester solution for diagonal `A`.
pub(crate) fn divide_by_eigen_sums(b: &mut DMatrix<f64>, d: &[f64]) {
    for i in 0..d.len() {
        for j in 0..d.len() {
            b[(i, j)] /= d[i] + d[j];
        }
    }
}

/// Thin SVD `M = U diag(s) V^T` with descending singular values. `U` is
/// `m x p`, `V` is `n x p` with `p = min(m, n)`.
///
/// Computed with faer: nalgebra's bidiagonal QR iteration returns visibly
/// wrong factorizations on a small fraction of rank-deficient inputs.
pub(crate) fn svd_thin(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok((DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(cols, 0)));
    }
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().map_err(|_| Error::ConvergenceFailure)?;
    let (fu, fv) = (svd.U(), svd.V());
    let p = rows.min(cols);
    let u = DMatrix::from_fn(rows, p, |i, j| fu[(i, j)]);
    let v = DMatrix::from_fn(cols, p, |i, j| fv[(i, j)]);
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    let recon = &u * DMatrix::from_diagonal(&DVector::from_column_slice(&s)) * v.transpose();
    if !accurate(&recon, m) {
        return Err(Error::ConvergenceFailure);
    }
    Ok((u, s, v))
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(svd_thin(m)?.1)
}

/// Polar decomposition `M = H R`, `H = (M M^T)^{1/2}`, `R` orthogonal.
///
/// When `M` is singular `R` is not unique. On the numerical null spaces the
/// completion maximising `tr(R)` is chosen, so `R` acts as the identity on
/// any direction shared by `ker(M)` and `ker(M^T)`.
pub fn polar_orthogonal(m: &DMatrix<f64>, tol: &Tolerances) -> Result<(SymMatrix, DMatrix<f64>)> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((SymMatrix::zeros(0), DMatrix::zeros(0, 0)));
    }
    let (u, s, v) = svd_thin(m)?;
    let r = rank_with_tol(&s, tol);

    let mut us = u.clone();
    for (j, sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(*sj);
    }
    let h = SymMatrix::sym_part(&(us * u.transpose()));

    let u_r = u.columns(0, r);
    let v_r = v.columns(0, r);
    let mut rot = u_r * v_r.transpose();
    if r < n {
        let u0 = u.columns(r, n - r);
        let v0 = v.columns(r, n - r);
        let w = u0.transpose() * v0;
        let (p, _, t) = svd_thin(&w)?;
        rot += u0 * (p * t.transpose()) * v0.transpose();
    }
    Ok((h, rot))
}

/// Orthonormal basis of the orthogonal complement of `span(X)`.
pub fn orth_complement(x: &Factor, tol: &Tolerances) -> Result<Factor> {
    let (n, k) = x.shape();
    if k == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let rank = rank_with_tol(&singular_values(x)?, tol);
    if k > n || rank < k {
        return Err(Error::RankDeficient { rank, expected: k });
    }
    if k == n {
        return Ok(DMatrix::zeros(n, 0));
    }
    // Householder QR of [X | I]: the leading k columns of Q span col(X).
    let mut stacked = DMatrix::zeros(n, k + n);
    stacked.columns_mut(0, k).copy_from(x);
    stacked.columns_mut(k, n).fill_with_identity();
    let q = QR::new(stacked).q();
    Ok(q.columns(k, n - k).into_owned())
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).ok().and_then(|s| s.first().copied()).unwrap_or(0.0)
}

/// Orthonormal basis of the numerical kernel of `S`.
pub fn kernel_basis(s: &SymMatrix, tol: &Tolerances) -> Result<Factor> {
    let eig = eig_sym(s)?;
    let band = tol.rank_rel * eig.max_abs_value();
    let cols: Vec<usize> = (0..eig.dim()).filter(|&j| eig.values[j].abs() <= band).collect();
    let mut basis = DMatrix::zeros(s.dim(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        basis.set_column(dst, &eig.vectors.column(src));
    }
    Ok(basis)
}

/// Whether `span(basis) ∩ ker(M) ≠ {0}`.
pub fn intersect_nontrivial(basis: &Factor, m: &SymMatrix, tol: &Tolerances) -> Result<bool> {
    intersects_with_scale(basis, m.as_matrix(), spectral_norm(m), tol)
}

/// Kernel intersection test where "zero" means below `rank_rel * scale`.
pub(crate) fn intersects_with_scale(
    basis: &DMatrix<f64>,
    m: &DMatrix<f64>,
    scale: f64,
    tol: &Tolerances,
) -> Result<bool> {
    if basis.ncols() == 0 {
        return Ok(false);
    }
    if basis.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, matrix has {} columns",
            basis.nrows(),
            m.ncols()
        )));
    }
    let image = m * basis;
    if image.ncols() > image.nrows() {
        return Ok(true);
    }
    let smallest = singular_values(&image)?.last().copied().unwrap_or(0.0);
    Ok(smallest <= tol.rank_rel * scale)
}
