//! Seeded synthetic covariance matrices.
//!
//! Singular matrices are built as `C = GᵀG` with `G = [U V, G_T]`, where
//! `U V` has rank `r − t`. The `t` columns of `G_T` then span the rest of
//! `ℝʳ`, which is what makes condition (7) hold.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MerspError, Result};
use crate::instance::{self, CovarianceInstance, PsiMode};
use crate::linalg::{self, SymMatrix};

const MAX_RESAMPLES: usize = 100;
const MAXPSI_CANDIDATES: usize = 50;
/// Required `λ_min / λ_max` of the condition-(7) matrix and of `C[T,T]`.
const MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Pd,
    SingularCond7,
    SingularMaxpsi,
}

impl std::str::FromStr for GenKind {
    type Err = MerspError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pd" => Ok(GenKind::Pd),
            "singular_cond7" => Ok(GenKind::SingularCond7),
            "singular_maxpsi" => Ok(GenKind::SingularMaxpsi),
            other => Err(MerspError::InvalidArgument(format!("unknown generator kind '{other}'"))),
        }
    }
}

impl GenKind {
    pub fn label(self) -> &'static str {
        match self {
            GenKind::Pd => "pd",
            GenKind::SingularCond7 => "singular_cond7",
            GenKind::SingularMaxpsi => "singular_maxpsi",
        }
    }
}

/// Rank used for singular kinds when none is given.
pub fn default_rank(n: usize, t: usize) -> usize {
    n + t - (n / 4).max(1)
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn ratio_ok(m: &SymMatrix) -> bool {
    linalg::eig(m).map(|e| e.lambda_min() >= MARGIN * e.lambda_max() && e.lambda_max() > 0.0).unwrap_or(false)
}

fn has_margin(cov: &CovarianceInstance) -> bool {
    ratio_ok(&cov.c_tt()) && cov.condition7_matrix().map(|m| ratio_ok(&m)).unwrap_or(false)
}

pub fn generate(kind: GenKind, n: usize, t: usize, rank: Option<usize>, seed: u64) -> Result<CovarianceInstance> {
    if n < 2 || t < 1 {
        return Err(MerspError::InvalidArgument(format!("need n >= 2 and t >= 1, got n={n}, t={t}")));
    }
    let order = n + t;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if kind == GenKind::Pd {
        let g = gaussian(&mut rng, order, order);
        let c = SymMatrix::gram(&g).add(&SymMatrix::identity(order).scaled(1e-3));
        return CovarianceInstance::new(c, n, t);
    }

    let r = rank.unwrap_or_else(|| default_rank(n, t));
    if r > order {
        return Err(MerspError::InvalidArgument(format!("rank {r} exceeds n + t = {order}")));
    }
    if r >= order || r <= t {
        return Err(MerspError::InvalidArgument(format!(
            "singular kinds need t < rank < n + t, got rank {r} with n={n}, t={t}"
        )));
    }
    let k = r - t;
    let mut base = None;
    for _ in 0..MAX_RESAMPLES {
        let u = gaussian(&mut rng, r, k);
        let v = gaussian(&mut rng, k, n);
        let gt = gaussian(&mut rng, r, t);
        let mut g = DMatrix::zeros(r, order);
        g.columns_mut(0, n).copy_from(&(u * v));
        g.columns_mut(n, t).copy_from(&gt);
        if let Ok(cov) = CovarianceInstance::new(SymMatrix::gram(&g), n, t) {
            if has_margin(&cov) {
                base = Some(cov);
                break;
            }
        }
    }
    let base = base.ok_or_else(|| {
        MerspError::GenerationFailed(format!("no admissible sample in {MAX_RESAMPLES} draws"))
    })?;
    if kind == GenKind::SingularCond7 {
        return Ok(base);
    }

    // relabel which columns form T, keeping the admissible choice with largest ψ*
    let mut best_psi = instance::psi_star(&base, PsiMode::Original)?.value;
    let mut best = base.clone();
    for _ in 0..MAXPSI_CANDIDATES {
        let t_set = instance::random_subset(&mut rng, order, t);
        let mut perm: Vec<usize> = (0..order).filter(|i| !t_set.contains(i)).collect();
        perm.extend_from_slice(&t_set);
        let c = SymMatrix::from_fn(order, |i, j| base.matrix().get(perm[i], perm[j]));
        let Ok(cov) = CovarianceInstance::new(c, n, t) else { continue };
        if !has_margin(&cov) {
            continue;
        }
        if let Ok(p) = instance::psi_star(&cov, PsiMode::Original) {
            if p.value > best_psi {
                best_psi = p.value;
                best = cov;
            }
        }
    }
    Ok(best)
}
