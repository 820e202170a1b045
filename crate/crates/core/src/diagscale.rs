//! Diagonal scaling `C_k ↦ Diag(Ψ) C_k Diag(Ψ)`.
//!
//! The objective is unchanged for every `Ψ > 0`, but the NLP bound is not.
//! This module picks `Ψ` by minimizing `λ₁(Diag(Ψ) M Diag(Ψ))` under a
//! geometric-mean constraint, and refines it for the Identity strategy by
//! alternating NLP solves with quasi-Newton steps on `u = log Ψ`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MerspError, Result};
use crate::instance::MerspInstance;
use crate::linalg::{self, Cholesky, SymMatrix};
use crate::nlp::{self, newton_direction, BoundResult, NlpOptions, Strategy};
use crate::spectral::{bfgs_update, dot, identity, mat_vec};

/// Step halvings tried per outer iteration, each costing one NLP solve.
const MAX_HALVINGS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSource {
    Unit,
    MinLamDiff,
    MinLamC2,
    Optimized,
}

impl PsiSource {
    pub fn label(self) -> &'static str {
        match self {
            PsiSource::Unit => "unit",
            PsiSource::MinLamDiff => "min_lam_diff",
            PsiSource::MinLamC2 => "min_lam_c2",
            PsiSource::Optimized => "optimized",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalScaling {
    pub psi_vec: Vec<f64>,
    pub source: PsiSource,
    /// Certified bound after each accepted outer iteration.
    pub objective_trace: Vec<f64>,
}

impl DiagonalScaling {
    pub fn unit(n: usize) -> Self {
        DiagonalScaling { psi_vec: vec![1.0; n], source: PsiSource::Unit, objective_trace: Vec::new() }
    }

    pub fn geometric_mean(&self) -> f64 {
        let n = self.psi_vec.len() as f64;
        (self.psi_vec.iter().map(|v| v.ln()).sum::<f64>() / n).exp()
    }
}

/// `λ₁(Diag(e^u) M Diag(e^u))` and its gradient `2 λ₁ w_i²` in `u`.
pub fn lam1_log(m: &SymMatrix, u: &[f64]) -> Result<(f64, Vec<f64>)> {
    let psi: Vec<f64> = u.iter().map(|v| v.exp()).collect();
    let e = linalg::eig(&m.diag_congruence(&psi))?;
    let lam = e.lambda_max();
    let w = e.vector(0);
    Ok((lam, w.iter().map(|wi| 2.0 * lam * wi * wi).collect()))
}

/// Minimizes `λ₁(Diag(Ψ) M Diag(Ψ))` subject to `∏Ψ ≥ 1`.
///
/// Solved as the convex program `min t` over `tI ⪰ Diag(Ψ) M Diag(Ψ)`,
/// `Σ log Ψ ≥ 0` with a log-barrier Newton method. The returned `Ψ` is
/// normalized to geometric mean 1, which can only lower `λ₁`.
pub fn min_lam1(m: &SymMatrix) -> Result<DiagonalScaling> {
    let n = m.order();
    if !m.is_finite() {
        return Err(MerspError::NumericalFailure("matrix has non-finite entries".into()));
    }
    let dmax = m.diagonal().into_iter().fold(0.0, f64::max);
    if m.max_abs() == 0.0 || dmax <= 0.0 {
        return Err(MerspError::DegenerateInstance("matrix is zero".into()));
    }
    if !linalg::is_psd(m, false) {
        return Err(MerspError::DomainError("matrix is not positive semidefinite".into()));
    }
    if m.diagonal().iter().any(|&v| v <= 1e-12 * dmax) {
        // a zero diagonal entry lets λ₁ be driven to 0 without attaining it
        return Err(MerspError::DegenerateInstance("matrix has a zero diagonal entry".into()));
    }
    let m = m.scaled(1.0 / dmax);

    let mut psi = vec![0.1f64.exp(); n];
    let lam0 = linalg::lambda_max(&m.diag_congruence(&psi))?;
    let mut t = 1.5 * lam0 + 1e-3;
    let mut mu = 1.0;
    let mu_final = 1e-11;

    loop {
        let mut state = lam_barrier(&m, t, &psi, mu).expect("iterate is interior");
        for _ in 0..200 {
            let (g, h) = lam_barrier_derivatives(&m, t, &psi, mu, &state);
            let Some(step) = newton_direction(h, &g) else { break };
            let decrement = -g.dot(&step);
            if decrement <= 1e-15 * (1.0 + state.value.abs()) {
                break;
            }
            let mut a = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let tt = t + a * step[0];
                let pt: Vec<f64> = psi.iter().enumerate().map(|(i, v)| v + a * step[i + 1]).collect();
                if pt.iter().all(|v| *v > 0.0) {
                    if let Some(s) = lam_barrier(&m, tt, &pt, mu) {
                        if s.value <= state.value - 0.25 * a * decrement {
                            t = tt;
                            psi = pt;
                            state = s;
                            moved = true;
                            break;
                        }
                    }
                }
                a *= 0.5;
            }
            if !moved || decrement < 1e-13 {
                break;
            }
        }
        if mu <= mu_final {
            break;
        }
        mu *= 0.1;
    }

    let gm = (psi.iter().map(|v| v.ln()).sum::<f64>() / n as f64).exp();
    let psi_vec = psi.iter().map(|v| v / gm).collect();
    Ok(DiagonalScaling { psi_vec, source: PsiSource::Unit, objective_trace: Vec::new() })
}

struct BarrierState {
    value: f64,
    k: SymMatrix,
    geo: f64,
}

/// `t − μ ldet(tI − DΨ M DΨ) − μ log Σ log Ψ`, or `None` outside the domain.
fn lam_barrier(m: &SymMatrix, t: f64, psi: &[f64], mu: f64) -> Option<BarrierState> {
    let geo: f64 = psi.iter().map(|v| v.ln()).sum();
    if !(geo > 0.0) {
        return None;
    }
    let z = SymMatrix::identity(psi.len()).scaled(t).sub(&m.diag_congruence(psi));
    let ch = Cholesky::with_tolerance(&z, 0.0).ok()?;
    Some(BarrierState { value: t - mu * ch.ldet() - mu * geo.ln(), k: ch.inverse(), geo })
}

/// Gradient and Hessian of the barrier in `(t, Ψ)`.
fn lam_barrier_derivatives(
    m: &SymMatrix,
    _t: f64,
    psi: &[f64],
    mu: f64,
    st: &BarrierState,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = psi.len();
    let k = st.k.as_matrix();
    let mm = m.as_matrix();
    let a = DMatrix::from_fn(n, n, |i, j| psi[i] * mm[(i, j)]);
    let ka = k * &a;
    let kka = k * &ka;
    let q = a.transpose() * &ka;

    let mut g = DVector::zeros(n + 1);
    g[0] = 1.0 - mu * k.trace();
    for i in 0..n {
        g[i + 1] = 2.0 * mu * ka[(i, i)] - mu / (psi[i] * st.geo);
    }

    let mut h = DMatrix::zeros(n + 1, n + 1);
    h[(0, 0)] = mu * k.norm_squared();
    for i in 0..n {
        let v = -2.0 * mu * kka[(i, i)];
        h[(0, i + 1)] = v;
        h[(i + 1, 0)] = v;
        for j in 0..n {
            let mut v = 2.0 * ka[(j, i)] * ka[(i, j)] + 2.0 * k[(i, j)] * q[(i, j)] + 2.0 * mm[(i, j)] * k[(i, j)];
            v *= mu;
            v += mu / (psi[i] * psi[j] * st.geo * st.geo);
            if i == j {
                v += mu / (psi[i] * psi[i] * st.geo);
            }
            h[(i + 1, j + 1)] = v;
        }
    }
    (g, h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMethod {
    Unit,
    MinLamDiff,
    MinLamC2,
}

/// Initial `Ψ`: the unit vector, or `min_lam1` of `C2 − ψ C1` or of `C2`.
pub fn select_psi(inst: &MerspInstance, method: PsiMethod, psi: f64) -> Result<DiagonalScaling> {
    match method {
        PsiMethod::Unit => Ok(DiagonalScaling::unit(inst.n())),
        PsiMethod::MinLamDiff => {
            let m = inst.c2().sub(&inst.c1().scaled(psi));
            Ok(DiagonalScaling { source: PsiSource::MinLamDiff, ..min_lam1(&m)? })
        }
        PsiMethod::MinLamC2 => Ok(DiagonalScaling { source: PsiSource::MinLamC2, ..min_lam1(inst.c2())? }),
    }
}

/// `f` of the Identity-strategy NLP on the instance scaled by `e^u`,
/// evaluated at a fixed `x̂`, and its gradient in `u`.
pub fn phi_value_grad(inst: &MerspInstance, psi: f64, u: &[f64], x_hat: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = inst.n();
    if u.len() != n || x_hat.len() != n {
        return Err(MerspError::InvalidArgument("dimension mismatch".into()));
    }
    let scale: Vec<f64> = u.iter().map(|v| v.exp()).collect();
    let e1 = inst.c1().diag_congruence(&scale);
    let e2 = inst.c2().diag_congruence(&scale);
    let eig2 = linalg::eig(&e2)?;
    let rho = eig2.lambda_max();
    if !(rho > 0.0) {
        return Err(MerspError::DegenerateInstance("C2 = 0".into()));
    }
    let w = eig2.vector(0);
    let xs: Vec<f64> = x_hat.iter().map(|v| v.sqrt()).collect();

    let mut value = inst.offset() - inst.s() as f64 * psi.ln();
    let mut grad = vec![0.0; n];
    for (e, psi_k, sign) in [(&e1, psi, 1.0), (&e2, 1.0, -1.0)] {
        let g = e.scaled(psi_k / rho);
        let mk = SymMatrix::identity(n).add(&g.sub(&SymMatrix::identity(n)).diag_congruence(&xs));
        let ch = Cholesky::with_tolerance(&mk, 1e-15)
            .map_err(|e| MerspError::NumericalFailure(format!("Φ matrix: {e}")))?;
        value += sign * ch.ldet();
        let r = ch.inverse().diag_congruence(&xs);
        let er = e.as_matrix() * r.as_matrix();
        let tr_rg = (r.as_matrix().component_mul(g.as_matrix())).sum();
        for i in 0..n {
            grad[i] += sign * (2.0 * psi_k / rho * er[(i, i)] - 2.0 * w[i] * w[i] * tr_rg);
        }
    }
    Ok((value, grad))
}

#[derive(Clone, Copy, Debug)]
pub struct ScalingOptions {
    pub max_outer: usize,
    pub rel_tol: f64,
    pub nlp: NlpOptions,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions { max_outer: 30, rel_tol: 1e-6, nlp: NlpOptions::default() }
    }
}

fn scaled_bound(
    inst: &MerspInstance,
    strategy: Strategy,
    psi: f64,
    scale: &[f64],
    opts: &NlpOptions,
    warm: Option<&[f64]>,
) -> Result<BoundResult> {
    let scaled = inst.apply_diag_scaling(scale)?;
    nlp::nlp_bound_with_psi(&scaled, strategy, psi, opts, warm)
}

fn top_gap(inst: &MerspInstance, u: &[f64]) -> Result<f64> {
    let scale: Vec<f64> = u.iter().map(|v| v.exp()).collect();
    let e = linalg::eig(&inst.c2().diag_congruence(&scale))?;
    if e.values.len() < 2 {
        return Ok(f64::INFINITY);
    }
    Ok((e.values[0] - e.values[1]) / e.values[0].abs().max(f64::MIN_POSITIVE))
}

/// Alternates Identity-strategy NLP solves with BFGS steps on `u = log Ψ`.
///
/// A step is kept only if the re-solved certified bound strictly decreases,
/// so every entry of the returned trace is a valid bound.
pub fn optimize_psi_nlp_id(
    inst: &MerspInstance,
    psi: f64,
    start: &DiagonalScaling,
    opts: &ScalingOptions,
) -> Result<(DiagonalScaling, BoundResult)> {
    let n = inst.n();
    if start.psi_vec.len() != n || start.psi_vec.iter().any(|v| !(*v > 0.0)) {
        return Err(MerspError::InvalidArgument("Ψ must be a positive vector of length n".into()));
    }
    let mut u: Vec<f64> = start.psi_vec.iter().map(|v| v.ln()).collect();
    let mut best = scaled_bound(inst, Strategy::Identity, psi, &start.psi_vec, &opts.nlp, None)?;
    let mut trace = vec![best.value];
    let (_, mut g) = phi_value_grad(inst, psi, &u, &best.x_hat)?;
    let mut h = identity(n);

    for _ in 0..opts.max_outer {
        let mut p: Vec<f64> = mat_vec(&h, &g).iter().map(|v| -v).collect();
        if dot(&p, &g) >= 0.0 {
            h = identity(n);
            p = g.iter().map(|v| -v).collect();
        }
        let mean = p.iter().sum::<f64>() / n as f64;
        p.iter_mut().for_each(|v| *v -= mean);
        let pmax = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if pmax <= 1e-12 {
            break;
        }
        if pmax > 1.0 {
            p.iter_mut().for_each(|v| *v /= pmax);
        }
        // a repeated top eigenvalue makes g only a subgradient
        let mut alpha = if top_gap(inst, &u)? < 1e-8 { 0.5 } else { 1.0 };

        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
            let scale: Vec<f64> = trial.iter().map(|v| v.exp()).collect();
            if let Ok(b) = scaled_bound(inst, Strategy::Identity, psi, &scale, &opts.nlp, Some(&best.x_hat)) {
                if b.value < best.value - 1e-12 * (1.0 + best.value.abs()) {
                    accepted = Some((trial, b));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, b)) = accepted else { break };
        let improvement = (best.value - b.value) / best.value.abs().max(1.0);
        let Ok((_, g_new)) = phi_value_grad(inst, psi, &trial, &b.x_hat) else {
            u = trial;
            trace.push(b.value);
            best = b;
            break;
        };
        let sk: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        bfgs_update(&mut h, &sk, &yk);
        u = trial;
        g = g_new;
        trace.push(b.value);
        best = b;
        if improvement < opts.rel_tol {
            break;
        }
    }

    let psi_vec = u.iter().map(|v| v.exp()).collect();
    let source = if trace.len() > 1 { PsiSource::Optimized } else { start.source };
    Ok((DiagonalScaling { psi_vec, source, objective_trace: trace }, best))
}

/// Best bound over the three starting scalings, run concurrently.
///
/// For the Identity strategy each start is refined by
/// [`optimize_psi_nlp_id`]; otherwise the bound is evaluated at the start.
pub fn best_of_three(
    inst: &MerspInstance,
    strategy: Strategy,
    psi: f64,
    opts: &ScalingOptions,
) -> Result<(DiagonalScaling, BoundResult)> {
    let methods = [PsiMethod::Unit, PsiMethod::MinLamDiff, PsiMethod::MinLamC2];
    let branches: Vec<Result<(DiagonalScaling, BoundResult)>> = methods
        .par_iter()
        .map(|&m| {
            let start = select_psi(inst, m, psi)?;
            if strategy == Strategy::Identity {
                optimize_psi_nlp_id(inst, psi, &start, opts)
            } else {
                let b = scaled_bound(inst, strategy, psi, &start.psi_vec, &opts.nlp, None)?;
                Ok((DiagonalScaling { objective_trace: vec![b.value], ..start }, b))
            }
        })
        .collect();

    let mut best: Option<(DiagonalScaling, BoundResult)> = None;
    let mut first_err = None;
    for r in branches {
        match r {
            Ok(cand) if best.as_ref().is_none_or(|(_, b)| cand.1.value < b.value) => best = Some(cand),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(MerspError::Infeasible))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_lam1_identity() {
        let s = min_lam1(&SymMatrix::identity(3)).unwrap();
        assert!(s.psi_vec.iter().all(|v| (v - 1.0).abs() < 1e-6), "{:?}", s.psi_vec);
    }

    #[test]
    fn min_lam1_diagonal_by_hand() {
        let s = min_lam1(&SymMatrix::from_diagonal(&[4.0, 1.0])).unwrap();
        let want = [1.0 / 2f64.sqrt(), 2f64.sqrt()];
        for (a, b) in s.psi_vec.iter().zip(want) {
            assert!((a - b).abs() < 1e-6, "{:?}", s.psi_vec);
        }
        assert!((s.geometric_mean() - 1.0).abs() < 1e-12);
        let lam = linalg::lambda_max(&SymMatrix::from_diagonal(&[4.0, 1.0]).diag_congruence(&s.psi_vec)).unwrap();
        assert!((lam - 2.0).abs() < 1e-6);
    }

    #[test]
    fn min_lam1_errors() {
        assert!(matches!(min_lam1(&SymMatrix::zeros(3)), Err(MerspError::DegenerateInstance(_))));
        let indefinite = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(min_lam1(&indefinite), Err(MerspError::DomainError(_))));
    }

    #[test]
    fn barrier_derivatives_match_differences() {
        let m = SymMatrix::from_rows(&[vec![2.0, 0.5, 0.1], vec![0.5, 1.0, 0.3], vec![0.1, 0.3, 0.8]]).unwrap();
        let psi = [1.2, 0.9, 1.3];
        let (t, mu) = (5.0, 0.3);
        let st = lam_barrier(&m, t, &psi, mu).unwrap();
        let (g, h) = lam_barrier_derivatives(&m, t, &psi, mu, &st);
        let eval = |z: &[f64]| lam_barrier(&m, z[0], &z[1..], mu).unwrap().value;
        let gradient = |z: &[f64]| {
            let s = lam_barrier(&m, z[0], &z[1..], mu).unwrap();
            lam_barrier_derivatives(&m, z[0], &z[1..], mu, &s).0
        };
        let z0 = [t, psi[0], psi[1], psi[2]];
        let step = 1e-6;
        for i in 0..4 {
            let mut zp = z0;
            let mut zm = z0;
            zp[i] += step;
            zm[i] -= step;
            let fd = (eval(&zp) - eval(&zm)) / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-6, "grad {i}: {fd} vs {}", g[i]);
            let gp = gradient(&zp);
            let gm = gradient(&zm);
            for j in 0..4 {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fd - h[(j, i)]).abs() < 1e-5 * (1.0 + fd.abs()), "hess {j},{i}: {fd} vs {}", h[(j, i)]);
            }
        }
    }

    #[test]
    fn lam1_log_gradient() {
        let m = SymMatrix::from_rows(&[vec![2.0, 0.5, 0.1], vec![0.5, 1.0, 0.3], vec![0.1, 0.3, 0.8]]).unwrap();
        let u = [0.1, -0.2, 0.05];
        let (_, g) = lam1_log(&m, &u).unwrap();
        for i in 0..3 {
            let mut up = u;
            let mut um = u;
            up[i] += 1e-6;
            um[i] -= 1e-6;
            let fd = (lam1_log(&m, &up).unwrap().0 - lam1_log(&m, &um).unwrap().0) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }

    fn small_instance() -> MerspInstance {
        let b = SymMatrix::from_rows(&[
            vec![3.0, 0.4, 0.1, 0.0, 0.2],
            vec![0.4, 1.5, 0.3, 0.2, 0.0],
            vec![0.1, 0.3, 0.6, 0.1, 0.1],
            vec![0.0, 0.2, 0.1, 2.2, 0.4],
            vec![0.2, 0.0, 0.1, 0.4, 1.0],
        ])
        .unwrap();
        let v = DMatrix::from_row_slice(2, 5, &[0.5, 0.3, -0.2, 0.2, 0.1, 0.1, -0.4, 0.2, 0.6, 0.3]);
        let bt = b.sub(&SymMatrix::gram(&v));
        MerspInstance::new(b, bt, 3).unwrap().complement().unwrap()
    }

    #[test]
    fn phi_gradient_matches_differences() {
        let inst = small_instance();
        let psi = nlp::augmentation_psi(&inst, true).unwrap();
        let u = [0.1, -0.05, 0.2, -0.15, -0.1];
        let x = [0.5, 0.3, 0.4, 0.6, 0.2];
        let (_, g) = phi_value_grad(&inst, psi, &u, &x).unwrap();
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..5 {
            let mut up = u;
            let mut um = u;
            up[i] += 1e-6;
            um[i] -= 1e-6;
            let fd = (phi_value_grad(&inst, psi, &up, &x).unwrap().0 - phi_value_grad(&inst, psi, &um, &x).unwrap().0)
                / 2e-6;
            assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + gnorm), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn phi_matches_nlp_objective() {
        let inst = small_instance();
        let psi = nlp::augmentation_psi(&inst, true).unwrap();
        let u = [0.1, -0.05, 0.2, -0.15, -0.1];
        let x = [0.5, 0.3, 0.4, 0.6, 0.2];
        let scale: Vec<f64> = u.iter().map(|v: &f64| v.exp()).collect();
        let scaled = inst.apply_diag_scaling(&scale).unwrap();
        let params = nlp::NlpParams { psi, ..nlp::strategy_identity(&scaled).unwrap() };
        let f = nlp::f_value(&scaled, &params, &x).unwrap();
        let (phi, _) = phi_value_grad(&inst, psi, &u, &x).unwrap();
        assert!((f - phi).abs() < 1e-10);
    }

    #[test]
    fn trace_strategy_after_c2_scaling_is_identity() {
        let inst = small_instance();
        let s = select_psi(&inst, PsiMethod::MinLamC2, 1.0).unwrap();
        let scaled = inst.apply_diag_scaling(&s.psi_vec).unwrap();
        let lam = linalg::lambda_max(scaled.c2()).unwrap();
        let d = nlp::solve_trace_d(scaled.c2()).unwrap().d;
        for v in d {
            assert!((v - lam).abs() <= 1e-4 * lam, "{v} vs {lam}");
        }
    }

    #[test]
    fn equal_matrices_stay_put() {
        let b = SymMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.1], vec![0.0, 0.1, 0.7]]).unwrap();
        let inst = MerspInstance::new(b.clone(), b, 1).unwrap();
        let (sc, bound) = optimize_psi_nlp_id(&inst, 1.0, &DiagonalScaling::unit(3), &Default::default()).unwrap();
        assert_eq!(sc.psi_vec, vec![1.0; 3]);
        assert!(bound.value.abs() <= 1e-6);
    }

    #[test]
    fn optimization_never_worsens() {
        let inst = small_instance();
        let psi = nlp::augmentation_psi(&inst, true).unwrap();
        let opts = ScalingOptions::default();
        let (sc, b) = optimize_psi_nlp_id(&inst, psi, &DiagonalScaling::unit(5), &opts).unwrap();
        assert!(sc.objective_trace.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*sc.objective_trace.last().unwrap(), b.value);
        let exact = (0..5)
            .flat_map(|i| ((i + 1)..5).map(move |j| [i, j]))
            .map(|s| inst.objective(&s).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(b.value >= exact - 1e-9);
        let (_, b3) = best_of_three(&inst, Strategy::Identity, psi, &opts).unwrap();
        assert!(b3.value <= sc.objective_trace[0] + 2e-6);
        assert!(b3.value >= exact - 1e-9);
    }
}
