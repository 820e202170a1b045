//! Spectral upper bound and the dominance diagnostic Δ.
//!
//! `v(η) = Σ_{ℓ≤s} log λ_ℓ(D_η C1 D_η) − log λ_{n−ℓ+1}(D_η C2 D_η)` with
//! `D_η = Diag(exp(η/2))`. Every η yields a valid bound, so the minimizer is a
//! heuristic and the reported value is the smallest one seen.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{MerspError, Result};
use crate::instance::MerspInstance;
use crate::linalg::{self, EigenDecomp};

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Below this eigengap at the cut position the gradient is unreliable and
    /// the iterate gets a random nudge.
    pub eigengap_tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { max_iter: 200, grad_tol: 1e-6, eigengap_tol: 1e-8, max_restarts: 10, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub eta_hat: Vec<f64>,
    /// Bound in original units (offset included).
    pub value: f64,
    pub delta: f64,
    pub iterations: usize,
}

struct Spectra {
    e1: EigenDecomp,
    e2: EigenDecomp,
}

fn spectra(inst: &MerspInstance, eta: &[f64]) -> Result<Spectra> {
    if eta.len() != inst.n() {
        return Err(MerspError::InvalidArgument("η has the wrong length".into()));
    }
    let d: Vec<f64> = eta.iter().map(|v| (0.5 * v).exp()).collect();
    let e1 = linalg::eig(&inst.c1().diag_congruence(&d))?;
    let e2 = linalg::eig(&inst.c2().diag_congruence(&d))?;
    Ok(Spectra { e1, e2 })
}

fn checked_log(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v.ln())
    } else {
        Err(MerspError::NotPositiveDefinite(format!("{what} eigenvalue {v:.3e} is not positive")))
    }
}

fn value_from(inst: &MerspInstance, sp: &Spectra) -> Result<f64> {
    let (n, s) = (inst.n(), inst.s());
    let mut v = inst.offset();
    for l in 0..s {
        v += checked_log(sp.e1.values[l], "C1")?;
        v -= checked_log(sp.e2.values[n - 1 - l], "C2")?;
    }
    Ok(v)
}

/// `v(η)` including the instance offset.
pub fn spectral_value(inst: &MerspInstance, eta: &[f64]) -> Result<f64> {
    value_from(inst, &spectra(inst, eta)?)
}

/// `v(η)`, its gradient and the smaller of the two eigengaps at the cut.
///
/// For a simple eigenvalue of `D_η M D_η` with unit eigenvector `w`,
/// `∂ log λ / ∂η_i = w_i²`.
pub fn spectral_value_grad(inst: &MerspInstance, eta: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let sp = spectra(inst, eta)?;
    let v = value_from(inst, &sp)?;
    let (n, s) = (inst.n(), inst.s());
    let mut g = vec![0.0; n];
    for l in 0..s {
        let hi = sp.e1.vectors.column(l);
        let lo = sp.e2.vectors.column(n - 1 - l);
        for i in 0..n {
            g[i] += hi[i] * hi[i] - lo[i] * lo[i];
        }
    }
    let gap1 = relative_gap(&sp.e1.values, s - 1, s);
    let gap2 = relative_gap(&sp.e2.values, n - s - 1, n - s);
    Ok((v, g, gap1.min(gap2)))
}

fn relative_gap(values: &[f64], a: usize, b: usize) -> f64 {
    (values[a] - values[b]).abs() / values[0].abs().max(f64::MIN_POSITIVE)
}

/// `Δ(η) = Σ_{ℓ=1}^{n−s} log λ_{n−ℓ+1}(D_η C1 D_η) − log λ_ℓ(D_η C2 D_η)`.
pub fn delta(inst: &MerspInstance, eta: &[f64]) -> Result<f64> {
    let sp = spectra(inst, eta)?;
    let (n, s) = (inst.n(), inst.s());
    let mut d = 0.0;
    for l in 0..(n - s) {
        d += checked_log(sp.e1.values[n - 1 - l], "C1")?;
        d -= checked_log(sp.e2.values[l], "C2")?;
    }
    Ok(d)
}

/// Local BFGS minimization of `v(η)` from `η = 0`.
pub fn minimize_spectral(inst: &MerspInstance, opts: &SpectralOptions) -> Result<SpectralResult> {
    let n = inst.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let nudge = Normal::new(0.0, 1e-3).expect("valid normal");

    let mut eta = vec![0.0; n];
    let (mut v, mut g, mut gap) = spectral_value_grad(inst, &eta)?;
    let mut best = (v, eta.clone());
    let mut h = identity(n);
    let mut restarts = 0;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        if gap < opts.eigengap_tol && restarts < opts.max_restarts {
            restarts += 1;
            for e in eta.iter_mut() {
                *e += nudge.sample(&mut rng);
            }
            (v, g, gap) = spectral_value_grad(inst, &eta)?;
            if v < best.0 {
                best = (v, eta.clone());
            }
            h = identity(n);
            continue;
        }
        if norm(&g) <= opts.grad_tol {
            break;
        }
        let mut p = mat_vec(&h, &g);
        p.iter_mut().for_each(|x| *x = -*x);
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            h = identity(n);
            p = g.iter().map(|x| -x).collect();
            slope = -dot(&g, &g);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = eta.iter().zip(&p).map(|(e, d)| e + alpha * d).collect();
            if let Ok((vt, gt, gapt)) = spectral_value_grad(inst, &trial) {
                if vt < best.0 {
                    best = (vt, trial.clone());
                }
                if vt <= v + 1e-4 * alpha * slope {
                    accepted = Some((trial, vt, gt, gapt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, vt, gt, gapt)) = accepted else {
            if restarts < opts.max_restarts {
                // line search failure at a kink: treat like a coalescence
                gap = 0.0;
                continue;
            }
            break;
        };
        let sk: Vec<f64> = trial.iter().zip(&eta).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        bfgs_update(&mut h, &sk, &yk);
        eta = trial;
        v = vt;
        g = gt;
        gap = gapt;
    }

    let eta_hat = best.1;
    Ok(SpectralResult { delta: delta(inst, &eta_hat)?, value: best.0, eta_hat, iterations })
}

pub(crate) fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn mat_vec(h: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    h.iter().map(|row| dot(row, v)).collect()
}

/// Inverse-Hessian BFGS update; skipped when the curvature condition fails.
pub(crate) fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64]) {
    let sy = dot(s, y);
    if sy <= 1e-12 * norm(s) * norm(y) || sy <= 0.0 {
        return;
    }
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
