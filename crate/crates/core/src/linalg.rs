//! Dense symmetric matrices and the handful of spectral/Cholesky kernels the
//! bounds need.
//!
//! All tolerances are relative. Every constructor symmetrizes its input as
//! `(A + Aᵀ)/2`, so Schur-complement round-off never leaks asymmetry into an
//! eigensolver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{MerspError, Result};

/// Numerical tolerances shared by every module.
pub mod tol {
    /// Strict positive-definiteness: smallest eigenvalue (or Cholesky pivot)
    /// must exceed this fraction of the scale.
    pub const PD_TOL: f64 = 1e-10;
    /// Semidefiniteness slack.
    pub const PSD_TOL: f64 = 1e-9;
    /// Eigenvalues below `RANK_TOL * λ₁` count as zero.
    pub const RANK_TOL: f64 = 1e-9;
}

/// A real symmetric matrix of order at least one.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps a square matrix, symmetrizing it.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(MerspError::InvalidArgument(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(MerspError::InvalidArgument("matrix of order 0".into()));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(MerspError::InvalidArgument("rows are not all of length n".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::symmetrized(DMatrix::from_fn(n, n, f))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Principal submatrix `A[idx, idx]`.
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        let k = idx.len();
        SymMatrix(DMatrix::from_fn(k, k, |a, b| self.0[(idx[a], idx[b])]))
    }

    /// Rectangular block `A[rows, cols]`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.0[(rows[a], cols[b])])
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix(&self.0 * c)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    /// `Diag(d) · A · Diag(d)`.
    pub fn diag_congruence(&self, d: &[f64]) -> SymMatrix {
        let n = self.order();
        SymMatrix(DMatrix::from_fn(n, n, |i, j| d[i] * self.0[(i, j)] * d[j]))
    }

    /// `X · A · X` for a symmetric `X`.
    pub fn sandwich(&self, x: &SymMatrix) -> SymMatrix {
        Self::symmetrized(&x.0 * &self.0 * &x.0)
    }

    /// `Gᵀ · A · G` for a rectangular `G`.
    pub fn congruence(&self, g: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrized(g.transpose() * &self.0 * g)
    }

    /// Builds `Gᵀ G`.
    pub fn gram(g: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrized(g.transpose() * g)
    }
}

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl EigenDecomp {
    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Rebuilds `Q f(Λ) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..n {
                scaled[(i, k)] *= fv;
            }
        }
        SymMatrix::symmetrized(scaled * self.vectors.transpose())
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

pub fn eig(a: &SymMatrix) -> Result<EigenDecomp> {
    if !a.is_finite() {
        return Err(MerspError::NumericalFailure("non-finite matrix entry".into()));
    }
    let se = SymmetricEigen::new(a.0.clone());
    let n = a.order();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MerspError::NumericalFailure("eigensolver produced NaN".into()));
    }
    let vectors = DMatrix::from_fn(n, n, |i, k| se.eigenvectors[(i, order[k])]);
    Ok(EigenDecomp { values, vectors })
}

pub fn lambda_max(a: &SymMatrix) -> Result<f64> {
    Ok(eig(a)?.lambda_max())
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factors `a`, failing when a pivot is at most `rel_tol` times the
    /// largest diagonal entry.
    pub fn with_tolerance(a: &SymMatrix, rel_tol: f64) -> Result<Self> {
        let n = a.order();
        let scale = a.diagonal().into_iter().fold(0.0_f64, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(MerspError::NotPositiveDefinite("non-positive diagonal".into()));
        }
        let floor = rel_tol * scale;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a.0[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(MerspError::NotPositiveDefinite(format!(
                    "pivot {j} is {d:.3e} (threshold {floor:.3e})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut v = a.0[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn new(a: &SymMatrix) -> Result<Self> {
        Self::with_tolerance(a, tol::PD_TOL)
    }

    pub fn ldet(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.l.nrows();
        let linv = self
            .l
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular factor with positive diagonal");
        SymMatrix::symmetrized(linv.transpose() * linv)
    }
}

/// Log-determinant of a positive definite matrix via Cholesky.
pub fn ldet_pd(a: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::new(a)?.ldet())
}

/// Strict or non-strict positive semidefiniteness test.
pub fn is_psd(a: &SymMatrix, strict: bool) -> bool {
    let Ok(e) = eig(a) else { return false };
    let (lo, hi) = (e.lambda_min(), e.lambda_max());
    if strict {
        lo > tol::PD_TOL * (1.0 + hi)
    } else {
        lo >= -tol::PSD_TOL * (1.0 + hi.abs())
    }
}

fn require_psd(e: &EigenDecomp) -> Result<()> {
    let (lo, hi) = (e.lambda_min(), e.lambda_max());
    if lo < -tol::PSD_TOL * (1.0 + hi.abs()) {
        return Err(MerspError::DomainError(format!(
            "matrix is indefinite (λ_min = {lo:.3e})"
        )));
    }
    Ok(())
}

fn rank_cutoff(e: &EigenDecomp) -> f64 {
    tol::RANK_TOL * e.lambda_max().max(0.0)
}

/// Moore–Penrose pseudoinverse of a PSD matrix.
pub fn pinv_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eig(a)?;
    require_psd(&e)?;
    let cut = rank_cutoff(&e);
    Ok(e.map(|v| if v > cut && v > 0.0 { 1.0 / v } else { 0.0 }))
}

/// Principal square root of a PSD matrix; tiny negative eigenvalues clamp to 0.
pub fn sqrt_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eig(a)?;
    require_psd(&e)?;
    Ok(e.map(|v| v.max(0.0).sqrt()))
}

/// `A^{†/2}`: square root of the pseudoinverse.
pub fn pinv_sqrt_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eig(a)?;
    require_psd(&e)?;
    let cut = rank_cutoff(&e);
    Ok(e.map(|v| if v > cut && v > 0.0 { 1.0 / v.sqrt() } else { 0.0 }))
}

/// `A^{-1/2}` for a positive definite matrix.
pub fn inv_sqrt_pd(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eig(a)?;
    if !(e.lambda_min() > tol::PD_TOL * (1.0 + e.lambda_max())) {
        return Err(MerspError::NotPositiveDefinite(format!(
            "λ_min = {:.3e}",
            e.lambda_min()
        )));
    }
    Ok(e.map(|v| 1.0 / v.sqrt()))
}

/// Numerical rank of a PSD matrix (eigenvalue cutoff `RANK_TOL · λ₁`).
pub fn rank_psd(a: &SymMatrix) -> Result<usize> {
    let e = eig(a)?;
    let cut = rank_cutoff(&e);
    Ok(e.values.iter().filter(|&&v| v > cut && v > 0.0).count())
}

/// Numerical rank of a rectangular matrix via its singular values.
pub fn rank_rect(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0;
    }
    // singular values are square roots of Gram eigenvalues
    let cut = tol::RANK_TOL.sqrt() * top;
    sv.iter().filter(|&&v| v > cut).count()
}
