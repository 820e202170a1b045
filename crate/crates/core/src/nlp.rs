//! The (augmented) NLP bound.
//!
//! For parameters `d, p, γ, ψ` and `k = 1, 2`,
//!
//! ```text
//! M_k(x) = Diag((γd)^x) + γ Diag(x^{p/2}) (ψ_k C_k − D) Diag(x^{p/2}),   ψ₁ = ψ, ψ₂ = 1
//! f_ψ(x) = ldet M₁(x) − s log ψ − ldet M₂(x)
//! ```
//!
//! and the bound is `max f_ψ` over the capped simplex. `f_ψ` is concave when
//! `D ⪰ C2 ⪰ ψ C1`, `p ≥ 1` and `γ d_i ≤ exp(p_i − √p_i)`, and agrees with the
//! combinatorial objective at every binary point, so the certified maximum
//! is an upper bound.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MerspError, Result};
use crate::instance::{MerspInstance, PSI_MARGIN};
use crate::linalg::{self, tol, Cholesky, SymMatrix};
use crate::simplex::{self, CappedSimplex, SolveOptions};

/// Pivot floor when factoring `M_k(x)`; only exact singularity is rejected.
const M_PIVOT_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "Id", alias = "identity")]
    Identity,
    #[serde(rename = "Di", alias = "diagonal")]
    Diagonal,
    #[serde(rename = "Tr", alias = "trace")]
    Trace,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Identity, Strategy::Diagonal, Strategy::Trace];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Identity => "Id",
            Strategy::Diagonal => "Di",
            Strategy::Trace => "Tr",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = MerspError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "id" | "identity" => Ok(Strategy::Identity),
            "di" | "diag" | "diagonal" => Ok(Strategy::Diagonal),
            "tr" | "trace" => Ok(Strategy::Trace),
            other => Err(MerspError::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NlpParams {
    pub d: Vec<f64>,
    pub p: Vec<f64>,
    pub gamma: f64,
    pub psi: f64,
    pub strategy: Strategy,
}

impl NlpParams {
    pub fn new(d: Vec<f64>, gamma: f64, psi: f64, strategy: Strategy) -> Self {
        let p = best_p(gamma, &d);
        NlpParams { d, p, gamma, psi, strategy }
    }

    /// Checks the concavity certificate: `D ⪰ C2 ⪰ ψ C1`, `p ≥ 1` and
    /// `0 < γ d_i ≤ exp(p_i − √p_i)`.
    pub fn validate(&self, inst: &MerspInstance) -> Result<()> {
        let n = inst.n();
        if self.d.len() != n || self.p.len() != n {
            return Err(MerspError::InvalidArgument("parameter vectors have the wrong length".into()));
        }
        if !(self.gamma > 0.0) || !(self.psi > 0.0) {
            return Err(MerspError::InvalidArgument("γ and ψ must be positive".into()));
        }
        for (&d, &p) in self.d.iter().zip(&self.p) {
            let gd = self.gamma * d;
            if !(p >= 1.0) || !(gd > 0.0) || gd > (p - p.sqrt()).exp() * (1.0 + 1e-12) {
                return Err(MerspError::InvalidArgument(format!(
                    "γd = {gd:.6e} with p = {p:.6} violates the concavity condition"
                )));
            }
        }
        let slack = SymMatrix::from_diagonal(&self.d).sub(inst.c2());
        if !linalg::is_psd(&slack, false) {
            return Err(MerspError::InvalidArgument("D ⪰ C2 does not hold".into()));
        }
        let max_psi = inst.max_psi()?;
        if self.psi > max_psi * (1.0 + tol::PSD_TOL) {
            return Err(MerspError::IllPosed(format!(
                "ψ = {} exceeds the largest admissible value {max_psi}",
                self.psi
            )));
        }
        Ok(())
    }
}

/// The exponent vector minimizing the bound for a fixed `γ, d`.
pub fn best_p(gamma: f64, d: &[f64]) -> Vec<f64> {
    d.iter()
        .map(|&di| {
            let gd = gamma * di;
            if gd <= 1.0 {
                1.0
            } else {
                let r = 1.0 + (1.0 + 4.0 * gd.ln()).sqrt();
                r * r / 4.0
            }
        })
        .collect()
}

/// `D` and the admissible `γ` interval produced by a strategy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyChoice {
    pub strategy: Strategy,
    pub d: Vec<f64>,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl StrategyChoice {
    /// `count` evenly spaced values in `[1/d_max, 1/d_min]`, endpoints
    /// included; a single value when the interval is a point.
    pub fn gamma_grid(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = (self.gamma_min, self.gamma_max);
        if count <= 1 || hi - lo <= 1e-14 * hi {
            return vec![lo];
        }
        (0..count)
            .map(|k| if k + 1 == count { hi } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 })
            .collect()
    }

    fn from_d(strategy: Strategy, d: Vec<f64>) -> Result<Self> {
        let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
        if !(dmin > 0.0) {
            return Err(MerspError::DegenerateInstance("D has a non-positive entry".into()));
        }
        Ok(StrategyChoice { strategy, d, gamma_min: 1.0 / dmax, gamma_max: 1.0 / dmin })
    }
}

/// `D = λ₁(C2) I`, `γ = 1/λ₁(C2)`, hence `p = e`.
pub fn strategy_identity(inst: &MerspInstance) -> Result<NlpParams> {
    let rho = linalg::lambda_max(inst.c2())?;
    if !(rho > 0.0) {
        return Err(MerspError::DegenerateInstance("C2 = 0".into()));
    }
    Ok(NlpParams::new(vec![rho; inst.n()], 1.0 / rho, 1.0, Strategy::Identity))
}

fn identity_choice(inst: &MerspInstance) -> Result<StrategyChoice> {
    let p = strategy_identity(inst)?;
    Ok(StrategyChoice { strategy: Strategy::Identity, gamma_min: p.gamma, gamma_max: p.gamma, d: p.d })
}

/// `D = ρ Diag(C2)` with `ρ = λ₁(Diag(C2)^{-1/2} C2 Diag(C2)^{-1/2})`.
pub fn strategy_diagonal(inst: &MerspInstance) -> Result<StrategyChoice> {
    let diag = inst.c2().diagonal();
    if diag.iter().any(|&v| !(v > 0.0)) {
        return Err(MerspError::DegenerateInstance("C2 has a zero diagonal entry".into()));
    }
    let isq: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let rho = linalg::lambda_max(&inst.c2().diag_congruence(&isq))?;
    StrategyChoice::from_d(Strategy::Diagonal, diag.iter().map(|v| rho * v).collect())
}

/// `D = argmin { Tr Y : Y ⪰ C2, Y diagonal }`.
pub fn strategy_trace(inst: &MerspInstance) -> Result<StrategyChoice> {
    StrategyChoice::from_d(Strategy::Trace, solve_trace_d(inst.c2())?.d)
}

pub fn strategy_choice(inst: &MerspInstance, strategy: Strategy) -> Result<StrategyChoice> {
    match strategy {
        Strategy::Identity => identity_choice(inst),
        Strategy::Diagonal => strategy_diagonal(inst),
        Strategy::Trace => strategy_trace(inst),
    }
}

/// Primal/dual pair for the diagonal trace-minimization SDP.
#[derive(Clone, Debug)]
pub struct TraceSolution {
    /// Strictly feasible: `Diag(d) − C2 ≻ 0`.
    pub d: Vec<f64>,
    /// Dual feasible `Ω ⪰ 0` with `diag(Ω) = e`.
    pub dual: SymMatrix,
    /// `Tr(C2 Ω)`, a lower bound on the optimal trace.
    pub dual_value: f64,
    pub newton_steps: usize,
}

/// Solves `min Σ y  s.t.  Diag(y) ⪰ C2` with a primal log-barrier method.
///
/// Inner problems `min Σy − μ ldet(Diag(y) − C2)` are solved by damped
/// Newton; the Hessian is `μ (K ∘ K)` with `K = (Diag(y) − C2)⁻¹`, positive
/// definite by the Schur product theorem. `μ K` converges to the dual
/// multiplier, which is rescaled to unit diagonal to certify the result.
pub fn solve_trace_d(c2: &SymMatrix) -> Result<TraceSolution> {
    let n = c2.order();
    let e = linalg::eig(c2)?;
    let scale = e.lambda_max().abs().max(c2.max_abs()).max(f64::MIN_POSITIVE);
    let mut y = vec![e.lambda_max() + 0.5 * scale; n];
    let mut mu = scale;
    let mu_final = 1e-11 * scale;
    let mut steps = 0;

    let barrier = |y: &[f64], mu: f64| -> Option<(f64, SymMatrix)> {
        let z = SymMatrix::from_diagonal(y).sub(c2);
        let ch = Cholesky::with_tolerance(&z, 0.0).ok()?;
        Some((y.iter().sum::<f64>() - mu * ch.ldet(), ch.inverse()))
    };

    let (mut phi, mut k) = barrier(&y, mu).expect("start point is interior");
    loop {
        for _ in 0..100 {
            let grad = DVector::from_fn(n, |i, _| 1.0 - mu * k.get(i, i));
            let hess = DMatrix::from_fn(n, n, |i, j| mu * k.get(i, j) * k.get(i, j));
            let Some(step) = newton_direction(hess, &grad) else { break };
            let decrement = -grad.dot(&step);
            if decrement <= 1e-14 * (1.0 + phi.abs()) {
                break;
            }
            let mut a = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(v, d)| v + a * d).collect();
                if let Some((pt, kt)) = barrier(&trial, mu) {
                    if pt <= phi - 0.25 * a * decrement {
                        y = trial;
                        phi = pt;
                        k = kt;
                        moved = true;
                        break;
                    }
                }
                a *= 0.5;
            }
            steps += 1;
            if !moved || decrement < 1e-12 * scale {
                break;
            }
        }
        if mu <= mu_final {
            break;
        }
        mu *= 0.1;
        let (p, kk) = barrier(&y, mu).expect("iterate stays interior");
        phi = p;
        k = kk;
    }

    // dual certificate: Ω = μK rescaled to unit diagonal
    let dg: Vec<f64> = (0..n).map(|i| 1.0 / (mu * k.get(i, i)).sqrt()).collect();
    let omega = k.scaled(mu).diag_congruence(&dg);
    let dual_value = (c2.as_matrix().component_mul(omega.as_matrix())).sum();
    Ok(TraceSolution { d: y, dual: omega, dual_value, newton_steps: steps })
}

/// Solves `H Δ = −g`, regularizing `H` if its Cholesky factorization fails.
pub(crate) fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    let mut reg = 0.0;
    let scale = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for _ in 0..12 {
        let h = &hess + DMatrix::<f64>::identity(n, n) * reg;
        if let Some(ch) = h.cholesky() {
            let d = -ch.solve(grad);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}

struct Evaluated {
    ldet: f64,
    grad: Option<Vec<f64>>,
}

/// `ldet M(x)` and optionally its gradient for
/// `M = Diag((γd)^x) + γ X^{p/2} (ψC − D) X^{p/2}`.
///
/// The diagonal is assembled as `γψc_ii x^p + ((γd)^x − γd x^p)` so that the
/// `D` terms cancel exactly at `x_i = 1`.
fn ldet_m(c: &SymMatrix, psi: f64, params: &NlpParams, x: &[f64], with_grad: bool) -> Result<Evaluated> {
    let n = x.len();
    let gamma = params.gamma;
    let gd: Vec<f64> = params.d.iter().map(|d| gamma * d).collect();
    let q: Vec<f64> = x.iter().zip(&params.p).map(|(xi, pi)| xi.powf(0.5 * pi)).collect();
    let m = SymMatrix::from_fn(n, |i, j| {
        let base = gamma * psi * q[i] * c.get(i, j) * q[j];
        if i == j { base + (gd[i].powf(x[i]) - gd[i] * q[i] * q[i]) } else { base }
    });
    let ch = Cholesky::with_tolerance(&m, M_PIVOT_TOL)
        .map_err(|e| MerspError::NumericalFailure(format!("M(x) is not positive definite: {e}")))?;
    let ldet = ch.ldet();
    if !with_grad {
        return Ok(Evaluated { ldet, grad: None });
    }
    let w = ch.inverse();
    let grad = (0..n)
        .map(|i| {
            let diag_term = gd[i].ln() * gd[i].powf(x[i]) * w.get(i, i);
            let coupling: f64 = (0..n).map(|j| psi * c.get(i, j) * q[j] * w.get(j, i)).sum::<f64>()
                - params.d[i] * q[i] * w.get(i, i);
            let dq = params.p[i] * x[i].powf(0.5 * params.p[i] - 1.0);
            diag_term + gamma * dq * coupling
        })
        .collect();
    Ok(Evaluated { ldet, grad: Some(grad) })
}

fn check_point(inst: &MerspInstance, params: &NlpParams, x: &[f64]) -> Result<()> {
    if x.len() != inst.n() || params.d.len() != inst.n() || params.p.len() != inst.n() {
        return Err(MerspError::InvalidArgument("dimension mismatch".into()));
    }
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(MerspError::InvalidArgument("x must lie in [0,1]ⁿ".into()));
    }
    Ok(())
}

/// `f_ψ(x) + offset` for any `x ∈ [0,1]ⁿ`, binary points included.
pub fn f_value(inst: &MerspInstance, params: &NlpParams, x: &[f64]) -> Result<f64> {
    check_point(inst, params, x)?;
    let m1 = ldet_m(inst.c1(), params.psi, params, x, false)?;
    let m2 = ldet_m(inst.c2(), 1.0, params, x, false)?;
    Ok(m1.ldet - inst.s() as f64 * params.psi.ln() - m2.ldet + inst.offset())
}

/// `f_ψ(x) + offset` and `∇f_ψ(x)` for `x ∈ (0,1]ⁿ`.
pub fn f_value_grad(inst: &MerspInstance, params: &NlpParams, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_point(inst, params, x)?;
    if x.iter().any(|&v| v <= 0.0) {
        return Err(MerspError::InvalidArgument("gradient needs x > 0".into()));
    }
    let m1 = ldet_m(inst.c1(), params.psi, params, x, true)?;
    let m2 = ldet_m(inst.c2(), 1.0, params, x, true)?;
    let value = m1.ldet - inst.s() as f64 * params.psi.ln() - m2.ldet + inst.offset();
    let grad = m1.grad.unwrap().iter().zip(m2.grad.unwrap()).map(|(a, b)| a - b).collect();
    Ok((value, grad))
}

/// `f¹_ψ(x) = ldet M₁(x) − s log ψ` alone, for an explicit `ψ`.
pub fn f1_psi(inst: &MerspInstance, params: &NlpParams, x: &[f64], psi: f64) -> Result<f64> {
    check_point(inst, params, x)?;
    let m1 = ldet_m(inst.c1(), psi, params, x, false)?;
    Ok(m1.ldet - inst.s() as f64 * psi.ln())
}

#[derive(Clone, Copy, Debug)]
pub struct NlpOptions {
    pub gamma_grid: usize,
    pub solve: SolveOptions,
}

impl Default for NlpOptions {
    fn default() -> Self {
        NlpOptions { gamma_grid: 50, solve: SolveOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundResult {
    /// Certified upper bound in original units.
    pub value: f64,
    pub x_hat: Vec<f64>,
    pub fw_gap: f64,
    pub params: NlpParams,
    pub converged: bool,
    pub iterations: usize,
    pub wall_ms: f64,
}

/// The augmentation factor to use: `1` for the plain bound, otherwise the
/// largest admissible ψ shrunk by [`PSI_MARGIN`].
pub fn augmentation_psi(inst: &MerspInstance, augment: bool) -> Result<f64> {
    let max_psi = inst.max_psi()?;
    if augment {
        Ok(max_psi * (1.0 - PSI_MARGIN))
    } else if max_psi >= 1.0 - tol::PSD_TOL {
        Ok(1.0)
    } else {
        Err(MerspError::IllPosed(format!(
            "C2 ⪰ C1 fails (largest admissible ψ is {max_psi:.6}); use augmentation or complement"
        )))
    }
}

/// NLP bound with a given strategy; augmented when `augment` is set.
pub fn nlp_bound(
    inst: &MerspInstance,
    strategy: Strategy,
    augment: bool,
    opts: &NlpOptions,
) -> Result<BoundResult> {
    let psi = augmentation_psi(inst, augment)?;
    nlp_bound_with_psi(inst, strategy, psi, opts, None)
}

/// NLP bound for an explicit ψ, minimizing over the strategy's γ grid.
pub fn nlp_bound_with_psi(
    inst: &MerspInstance,
    strategy: Strategy,
    psi: f64,
    opts: &NlpOptions,
    warm_start: Option<&[f64]>,
) -> Result<BoundResult> {
    let start = Instant::now();
    let choice = strategy_choice(inst, strategy)?;
    let grid = choice.gamma_grid(opts.gamma_grid.max(1));
    let region = CappedSimplex::with_default_floor(inst.n(), inst.s() as f64)?;

    let results: Vec<Result<BoundResult>> = grid
        .par_iter()
        .map(|&gamma| {
            let params = NlpParams::new(choice.d.clone(), gamma, psi, strategy);
            let rep = simplex::maximize(
                |x: &[f64]| f_value_grad(inst, &params, x),
                &region,
                &opts.solve,
                warm_start,
            )?;
            Ok(BoundResult {
                value: rep.certified_upper,
                x_hat: rep.x_hat,
                fw_gap: rep.fw_gap,
                params,
                converged: rep.converged,
                iterations: rep.iterations,
                wall_ms: 0.0,
            })
        })
        .collect();

    let mut best: Option<BoundResult> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(b) if best.as_ref().is_none_or(|cur| b.value < cur.value) => best = Some(b),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let mut best = best.ok_or_else(|| first_err.unwrap_or(MerspError::Infeasible))?;
    best.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd_pair() -> MerspInstance {
        // complementary orientation of a small PD covariance
        let b = SymMatrix::from_rows(&[
            vec![2.0, 0.4, 0.1, 0.0],
            vec![0.4, 1.5, 0.3, 0.2],
            vec![0.1, 0.3, 1.2, 0.5],
            vec![0.0, 0.2, 0.5, 1.8],
        ])
        .unwrap();
        let v = DMatrix::from_row_slice(4, 1, &[0.5, 0.3, -0.4, 0.2]);
        let bt = b.sub(&SymMatrix::gram(&v.transpose()));
        MerspInstance::new(b, bt, 2).unwrap().complement().unwrap()
    }

    #[test]
    fn best_p_values() {
        let p = best_p(1.0, &[0.5, 1.0, std::f64::consts::E]);
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 1.0).abs() < 1e-15);
        let golden_sq = (1.0 + 5f64.sqrt()).powi(2) / 4.0;
        assert!((p[2] - golden_sq).abs() < 1e-12);
        assert!((p[2] - 2.618034).abs() < 1e-6);
    }

    #[test]
    fn identity_strategy() {
        let inst = MerspInstance::new(SymMatrix::identity(3), SymMatrix::identity(3), 1).unwrap();
        let p = strategy_identity(&inst).unwrap();
        assert_eq!((p.d.clone(), p.gamma, p.p.clone()), (vec![1.0; 3], 1.0, vec![1.0; 3]));
        let inst = MerspInstance::new(SymMatrix::identity(2), SymMatrix::from_diagonal(&[4.0, 1.0]), 1)
            .unwrap();
        let p = strategy_identity(&inst).unwrap();
        assert_eq!(p.d, vec![4.0, 4.0]);
        assert!((p.gamma - 0.25).abs() < 1e-15);
        let zero = MerspInstance::new(SymMatrix::identity(2), SymMatrix::zeros(2), 1).unwrap();
        assert!(matches!(strategy_identity(&zero), Err(MerspError::DegenerateInstance(_))));
    }

    #[test]
    fn diagonal_strategy() {
        let inst = MerspInstance::new(SymMatrix::identity(2), SymMatrix::identity(2), 1).unwrap();
        let c = strategy_diagonal(&inst).unwrap();
        assert_eq!(c.d, vec![1.0, 1.0]);
        assert_eq!((c.gamma_min, c.gamma_max), (1.0, 1.0));
        let inst = MerspInstance::new(SymMatrix::identity(2), SymMatrix::from_diagonal(&[4.0, 1.0]), 1)
            .unwrap();
        let c = strategy_diagonal(&inst).unwrap();
        assert!((c.d[0] - 4.0).abs() < 1e-14 && (c.d[1] - 1.0).abs() < 1e-14);
        assert!((c.gamma_min - 0.25).abs() < 1e-15 && (c.gamma_max - 1.0).abs() < 1e-15);
        let grid = c.gamma_grid(50);
        assert_eq!(grid.len(), 50);
        assert_eq!((grid[0], grid[49]), (0.25, 1.0));
    }

    #[test]
    fn trace_sdp_examples() {
        let sol = solve_trace_d(&SymMatrix::identity(4)).unwrap();
        assert!(sol.d.iter().all(|v| (v - 1.0).abs() < 1e-8));
        // all-ones 2×2: feasibility is (y₁−1)(y₂−1) ≥ 1, minimized at y = (2, 2)
        let sol = solve_trace_d(&SymMatrix::from_fn(2, |_, _| 1.0)).unwrap();
        assert!((sol.d[0] - 2.0).abs() < 1e-6 && (sol.d[1] - 2.0).abs() < 1e-6, "{:?}", sol.d);
        let total: f64 = sol.d.iter().sum();
        assert!((total - sol.dual_value).abs() <= 1e-5 * total);
        assert!(linalg::is_psd(&sol.dual, false));
        for i in 0..2 {
            assert!((sol.dual.get(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_points_reproduce_objective() {
        let inst = pd_pair();
        let psi = augmentation_psi(&inst, true).unwrap();
        for strategy in Strategy::ALL {
            let choice = strategy_choice(&inst, strategy).unwrap();
            for gamma in choice.gamma_grid(3) {
                let params = NlpParams::new(choice.d.clone(), gamma, psi, strategy);
                params.validate(&inst).unwrap();
                for s in [[0, 1], [0, 3], [2, 3], [1, 2]] {
                    let x: Vec<f64> = (0..4).map(|i| if s.contains(&i) { 1.0 } else { 0.0 }).collect();
                    let f = f_value(&inst, &params, &x).unwrap();
                    let obj = inst.objective(&s).unwrap();
                    assert!((f - obj).abs() < 1e-8, "{strategy:?} {s:?}: {f} vs {obj}");
                }
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let inst = pd_pair();
        let psi = augmentation_psi(&inst, true).unwrap();
        let choice = strategy_diagonal(&inst).unwrap();
        let params = NlpParams::new(choice.d.clone(), 0.5 * (choice.gamma_min + choice.gamma_max), psi, Strategy::Diagonal);
        let x = [0.3, 0.6, 0.45, 0.65];
        let (_, g) = f_value_grad(&inst, &params, &x).unwrap();
        let h = 1e-6;
        for i in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f_value(&inst, &params, &xp).unwrap() - f_value(&inst, &params, &xm).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn equal_matrices_give_zero() {
        let b = SymMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.1], vec![0.0, 0.1, 0.7]])
            .unwrap();
        let inst = MerspInstance::new(b.clone(), b, 1).unwrap();
        let params = strategy_identity(&inst).unwrap();
        for x in [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.9, 0.05, 0.05]] {
            assert!(f_value(&inst, &params, &x).unwrap().abs() < 1e-12);
        }
        let b = nlp_bound(&inst, Strategy::Identity, false, &NlpOptions::default()).unwrap();
        assert!(b.value.abs() <= 1e-6);
    }

    #[test]
    fn plain_bound_needs_c2_above_c1() {
        let inst = MerspInstance::new(
            SymMatrix::from_diagonal(&[2.0, 1.0]),
            SymMatrix::identity(2),
            1,
        )
        .unwrap();
        assert!(matches!(
            nlp_bound(&inst, Strategy::Identity, false, &NlpOptions::default()),
            Err(MerspError::IllPosed(_))
        ));
        let aug = nlp_bound(&inst, Strategy::Identity, true, &NlpOptions::default()).unwrap();
        assert!(aug.value >= 2f64.ln() - 1e-9);
    }
}
