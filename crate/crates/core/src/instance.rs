//! Problem instances and the bound-preserving transforms between them.
//!
//! A [`CovarianceInstance`] is the raw joint covariance over `N ∪ T` with `N`
//! the first `n` indices. [`build_mersp`] turns it into the matrix pair
//! `(C1, C2) = (C[N,N], C_T[N,N])` where `C_T[N,N]` is the conditional
//! covariance of the observables given the targets. Every transform on
//! [`MerspInstance`] keeps `objective` values in the units of the original
//! problem by accumulating an additive `offset`.

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MerspError, Result};
use crate::linalg::{self, tol, SymMatrix};

/// Relative shrink applied to ψ* before it is used as a scaling factor.
pub const PSI_MARGIN: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct CovarianceInstance {
    c: SymMatrix,
    n: usize,
    t: usize,
}

impl CovarianceInstance {
    /// Validates `C ⪰ 0`, `C[T,T] ≻ 0`, `n ≥ 2`, `t ≥ 1`.
    pub fn new(c: SymMatrix, n: usize, t: usize) -> Result<Self> {
        if n < 2 || t < 1 {
            return Err(MerspError::InvalidArgument(format!(
                "need n >= 2 and t >= 1, got n={n}, t={t}"
            )));
        }
        if c.order() != n + t {
            return Err(MerspError::InvalidArgument(format!(
                "matrix order {} does not match n+t = {}",
                c.order(),
                n + t
            )));
        }
        if !linalg::is_psd(&c, false) {
            return Err(MerspError::DomainError("covariance is not PSD".into()));
        }
        let inst = CovarianceInstance { c, n, t };
        if !linalg::is_psd(&inst.c_tt(), true) {
            return Err(MerspError::NotPositiveDefinite("C[T,T] is not positive definite".into()));
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.c
    }

    pub fn n_indices(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    pub fn t_indices(&self) -> Vec<usize> {
        (self.n..self.n + self.t).collect()
    }

    /// `C[N,N]`.
    pub fn c_nn(&self) -> SymMatrix {
        self.c.principal(&self.n_indices())
    }

    /// `C[T,T]`.
    pub fn c_tt(&self) -> SymMatrix {
        self.c.principal(&self.t_indices())
    }

    /// `C[N,T]`, an `n × t` block.
    pub fn c_nt(&self) -> DMatrix<f64> {
        self.c.block(&self.n_indices(), &self.t_indices())
    }

    /// `C_T[N,N] = C[N,N] − C[N,T] C[T,T]⁻¹ C[T,N]`.
    pub fn conditional_nn(&self) -> Result<SymMatrix> {
        let tt_inv = linalg::Cholesky::new(&self.c_tt())?.inverse();
        let nt = self.c_nt();
        let explained = tt_inv.congruence(&nt.transpose());
        Ok(self.c_nn().sub(&explained))
    }

    pub fn is_pd(&self) -> bool {
        linalg::is_psd(&self.c, true)
    }

    /// `C[T,T] − C[N,T]ᵀ C[N,N]† C[N,T]`.
    pub fn condition7_matrix(&self) -> Result<SymMatrix> {
        let nn_pinv = linalg::pinv_psd(&self.c_nn())?;
        let nt = self.c_nt();
        Ok(self.c_tt().sub(&nn_pinv.congruence(&nt)))
    }

    pub fn ranks(&self) -> Result<RankProfile> {
        Ok(RankProfile {
            rank_c: linalg::rank_psd(&self.c)?,
            rank_nn: linalg::rank_psd(&self.c_nn())?,
            rank_nt: linalg::rank_rect(&self.c_nt()),
            rank_condition7: linalg::rank_psd(&self.condition7_matrix()?)?,
        })
    }
}

/// Ranks of `C`, `C[N,N]`, `C[N,T]` and of the condition-(7) matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RankProfile {
    pub rank_c: usize,
    pub rank_nn: usize,
    pub rank_nt: usize,
    pub rank_condition7: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transform {
    Complement,
    Scale { gamma1: f64, gamma2: f64 },
    DiagScale,
}

/// The generalized problem `max ldet C1[S,S] − ldet C2[S,S] + offset, |S| = s`.
#[derive(Clone, Debug)]
pub struct MerspInstance {
    c1: SymMatrix,
    c2: SymMatrix,
    s: usize,
    offset: f64,
    lineage: Vec<Transform>,
}

impl MerspInstance {
    pub fn new(c1: SymMatrix, c2: SymMatrix, s: usize) -> Result<Self> {
        let n = c1.order();
        if c2.order() != n {
            return Err(MerspError::InvalidArgument("C1 and C2 differ in order".into()));
        }
        if s == 0 || s >= n {
            return Err(MerspError::InvalidArgument(format!(
                "cardinality s={s} must satisfy 0 < s < n={n}"
            )));
        }
        Ok(MerspInstance { c1, c2, s, offset: 0.0, lineage: Vec::new() })
    }

    pub fn c1(&self) -> &SymMatrix {
        &self.c1
    }

    pub fn c2(&self) -> &SymMatrix {
        &self.c2
    }

    pub fn n(&self) -> usize {
        self.c1.order()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn lineage(&self) -> &[Transform] {
        &self.lineage
    }

    /// True when an odd number of complements has been applied.
    pub fn is_complemented(&self) -> bool {
        self.lineage.iter().filter(|t| matches!(t, Transform::Complement)).count() % 2 == 1
    }

    /// `ldet C1[S,S] − ldet C2[S,S] + offset` for any nonempty `S`.
    pub fn value_of(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Ok(self.offset);
        }
        let l1 = linalg::ldet_pd(&self.c1.principal(subset))?;
        let l2 = linalg::ldet_pd(&self.c2.principal(subset))?;
        Ok(l1 - l2 + self.offset)
    }

    /// Objective at a subset of exactly `s` indices.
    pub fn objective(&self, subset: &[usize]) -> Result<f64> {
        if subset.len() != self.s {
            return Err(MerspError::InvalidArgument(format!(
                "subset has {} indices, expected {}",
                subset.len(),
                self.s
            )));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.n()) {
            return Err(MerspError::InvalidArgument(format!("index {bad} out of range")));
        }
        self.value_of(subset)
    }

    /// `(C1⁻¹, C2⁻¹, n − s)` with offset `+ ldet C1 − ldet C2`.
    pub fn complement(&self) -> Result<MerspInstance> {
        let ch1 = linalg::Cholesky::new(&self.c1)?;
        let ch2 = linalg::Cholesky::new(&self.c2)?;
        let mut lineage = self.lineage.clone();
        lineage.push(Transform::Complement);
        Ok(MerspInstance {
            c1: ch1.inverse(),
            c2: ch2.inverse(),
            s: self.n() - self.s,
            offset: self.offset + ch1.ldet() - ch2.ldet(),
            lineage,
        })
    }

    /// `(γ1 C1, γ2 C2, s)` with offset `− s log(γ1/γ2)`.
    pub fn scale(&self, gamma1: f64, gamma2: f64) -> Result<MerspInstance> {
        if !(gamma1 > 0.0 && gamma2 > 0.0) {
            return Err(MerspError::InvalidArgument("scaling factors must be positive".into()));
        }
        let mut lineage = self.lineage.clone();
        lineage.push(Transform::Scale { gamma1, gamma2 });
        Ok(MerspInstance {
            c1: self.c1.scaled(gamma1),
            c2: self.c2.scaled(gamma2),
            s: self.s,
            offset: self.offset - self.s as f64 * (gamma1 / gamma2).ln(),
            lineage,
        })
    }

    /// `C_k ← Diag(Ψ) C_k Diag(Ψ)`; the objective is unchanged on every `S`.
    pub fn apply_diag_scaling(&self, psi: &[f64]) -> Result<MerspInstance> {
        if psi.len() != self.n() {
            return Err(MerspError::InvalidArgument("Ψ has the wrong length".into()));
        }
        if psi.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(MerspError::InvalidArgument("Ψ must be positive".into()));
        }
        let mut lineage = self.lineage.clone();
        lineage.push(Transform::DiagScale);
        Ok(MerspInstance {
            c1: self.c1.diag_congruence(psi),
            c2: self.c2.diag_congruence(psi),
            s: self.s,
            offset: self.offset,
            lineage,
        })
    }

    /// Largest `ψ` with `C2 ⪰ ψ C1`, computed from the matrix pencil.
    ///
    /// When `C2` is singular, `C1` must vanish on the null space of `C2`
    /// (otherwise no positive ψ exists) and the pencil is restricted to the
    /// range of `C2`.
    pub fn max_psi(&self) -> Result<f64> {
        let e2 = linalg::eig(&self.c2)?;
        let top = e2.lambda_max();
        if !(top > 0.0) {
            return Err(MerspError::DegenerateInstance("C2 is zero".into()));
        }
        let cut = tol::RANK_TOL * top;
        let range: Vec<usize> = (0..self.n()).filter(|&k| e2.values[k] > cut).collect();
        let n = self.n();
        let u = DMatrix::from_fn(n, range.len(), |i, k| e2.vectors[(i, range[k])]);
        if range.len() < n {
            let missing: Vec<usize> = (range.len()..n).collect();
            let null = DMatrix::from_fn(n, missing.len(), |i, k| e2.vectors[(i, missing[k])]);
            let leak = self.c1.congruence(&null).max_abs();
            if leak > tol::PSD_TOL * (1.0 + self.c1.max_abs()) {
                return Err(MerspError::IllPosed(format!(
                    "C1 has weight {leak:.3e} on the null space of C2; no ψ > 0 gives C2 ⪰ ψC1"
                )));
            }
        }
        let scale: Vec<f64> = range.iter().map(|&k| 1.0 / e2.values[k].sqrt()).collect();
        let reduced = self.c1.congruence(&u).diag_congruence(&scale);
        let lam = linalg::lambda_max(&reduced)?;
        if !(lam > 0.0) {
            return Err(MerspError::DegenerateInstance("C1 is zero".into()));
        }
        Ok(1.0 / lam)
    }
}

/// `(B, B_T, s)` with `B = C[N,N]` and `B_T = C_T[N,N]`.
pub fn build_mersp(cov: &CovarianceInstance, s: usize) -> Result<MerspInstance> {
    if s == 0 || s >= cov.n() {
        return Err(MerspError::InvalidArgument(format!(
            "cardinality s={s} must satisfy 0 < s < n={}",
            cov.n()
        )));
    }
    MerspInstance::new(cov.c_nn(), cov.conditional_nn()?, s)
}

/// Whether `C[T,T] − C[N,T]ᵀ C[N,N]† C[N,T] ≻ 0`.
pub fn check_condition7(cov: &CovarianceInstance) -> bool {
    cov.condition7_matrix().map(|m| linalg::is_psd(&m, true)).unwrap_or(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    Original,
    Complementary,
}

/// The optimal augmented scaling factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiStar {
    pub value: f64,
    pub mode: PsiMode,
}

impl PsiStar {
    /// ψ* shrunk by [`PSI_MARGIN`], the value actually fed to the relaxation.
    pub fn safe_value(&self) -> f64 {
        self.value * (1.0 - PSI_MARGIN)
    }
}

/// Closed-form ψ* in either orientation.
///
/// Complementary: `1/λ₁(C_T[N,N]^{1/2} C[N,N]⁻¹ C_T[N,N]^{1/2})`, needs `C ≻ 0`.
/// Original: `1 − σ₁²(C[T,T]^{−1/2} C[T,N] C[N,N]^{†/2})`, needs condition (7).
pub fn psi_star(cov: &CovarianceInstance, mode: PsiMode) -> Result<PsiStar> {
    let value = match mode {
        PsiMode::Complementary => {
            if !cov.is_pd() {
                return Err(MerspError::NotPositiveDefinite(
                    "complementary ψ* requires C ≻ 0".into(),
                ));
            }
            let bt_half = linalg::sqrt_psd(&cov.conditional_nn()?)?;
            let b_inv = linalg::Cholesky::new(&cov.c_nn())?.inverse();
            1.0 / linalg::lambda_max(&b_inv.sandwich(&bt_half))?
        }
        PsiMode::Original => {
            if !check_condition7(cov) {
                return Err(MerspError::IllPosed("condition (7) does not hold".into()));
            }
            let tt_isqrt = linalg::inv_sqrt_pd(&cov.c_tt())?;
            let nn_psqrt = linalg::pinv_sqrt_psd(&cov.c_nn())?;
            let k = tt_isqrt.as_matrix() * cov.c_nt().transpose() * nn_psqrt.as_matrix();
            let kkt = SymMatrix::gram(&k.transpose());
            1.0 - linalg::lambda_max(&kkt)?
        }
    };
    if !value.is_finite() {
        return Err(MerspError::NumericalFailure("ψ* is not finite".into()));
    }
    Ok(PsiStar { value, mode })
}

/// Outcome of sampling subsets and testing `C[S,S] ≻ 0 ⇔ C_T[S,S] ≻ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EquivReport {
    pub trials: usize,
    pub violations: usize,
    /// Sampled subsets on which both sides were positive definite.
    pub both_pd: usize,
}

pub fn subset_equiv_check(cov: &CovarianceInstance, trials: usize, seed: u64) -> Result<EquivReport> {
    if !check_condition7(cov) {
        return Err(MerspError::IllPosed("condition (7) does not hold".into()));
    }
    let c_nn = cov.c_nn();
    let b_t = cov.conditional_nn()?;
    let n = cov.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivReport { trials, violations: 0, both_pd: 0 };
    for _ in 0..trials {
        let size = rng.random_range(1..n);
        let subset = random_subset(&mut rng, n, size);
        let lhs = linalg::is_psd(&c_nn.principal(&subset), true);
        let rhs = linalg::is_psd(&b_t.principal(&subset), true);
        if lhs != rhs {
            report.violations += 1;
        } else if lhs {
            report.both_pd += 1;
        }
    }
    Ok(report)
}

/// Uniform random `size`-subset of `0..n`, sorted.
pub(crate) fn random_subset(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Vec<usize> {
    let mut v = rand::seq::index::sample(rng, n, size).into_vec();
    v.sort_unstable();
    v
}
