//! Certified maximization of smooth concave functions over the capped
//! simplex `{x ∈ [ε,1]ⁿ : eᵀx = s}`.
//!
//! The solver is projected-gradient ascent with Armijo backtracking and
//! Barzilai–Borwein step lengths. Its certificate is the Frank–Wolfe gap
//! measured against the vertices of the *unfloored* region `[0,1]ⁿ`, so
//! `value + fw_gap` bounds the concave maximum over the whole region.

use serde::Serialize;

use crate::error::{MerspError, Result};

pub const DEFAULT_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CappedSimplex {
    n: usize,
    mass: f64,
    lower: f64,
}

impl CappedSimplex {
    pub fn new(n: usize, mass: f64, lower: f64) -> Result<Self> {
        if n == 0 || !(lower > 0.0) || !(mass >= lower * n as f64) || mass > n as f64 {
            return Err(MerspError::InvalidArgument(format!(
                "invalid capped simplex n={n}, s={mass}, ε={lower}"
            )));
        }
        if !(lower < mass / n as f64) {
            return Err(MerspError::InvalidArgument("floor must lie below s/n".into()));
        }
        Ok(CappedSimplex { n, mass, lower })
    }

    pub fn with_default_floor(n: usize, mass: f64) -> Result<Self> {
        Self::new(n, mass, DEFAULT_FLOOR)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn center(&self) -> Vec<f64> {
        vec![self.mass / self.n as f64; self.n]
    }
}

/// Euclidean projection onto the region: `x_i = clamp(y_i − τ, ε, 1)` with
/// the knapsack multiplier τ found by bisection and then solved exactly on
/// the free set.
pub fn project(y: &[f64], region: &CappedSimplex) -> Vec<f64> {
    let (lo, hi, s) = (region.lower, 1.0, region.mass);
    let mass_at = |tau: f64| y.iter().map(|&v| (v - tau).clamp(lo, hi)).sum::<f64>();
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    // mass_at(a) = n ≥ s, mass_at(b) = nε ≤ s
    let (mut a, mut b) = (ymin - hi, ymax - lo);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mass_at(mid) > s {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
    }
    let mut tau = 0.5 * (a + b);
    // exact solve on the free set
    let (mut fixed, mut free_sum, mut free_cnt) = (0.0, 0.0, 0usize);
    for &v in y {
        let z = v - tau;
        if z <= lo {
            fixed += lo;
        } else if z >= hi {
            fixed += hi;
        } else {
            free_sum += v;
            free_cnt += 1;
        }
    }
    if free_cnt > 0 {
        let exact = (free_sum + fixed - s) / free_cnt as f64;
        if (mass_at(exact) - s).abs() <= (mass_at(tau) - s).abs() {
            tau = exact;
        }
    }
    y.iter().map(|&v| (v - tau).clamp(lo, hi)).collect()
}

/// Frank–Wolfe gap `max_v ∇f(x)ᵀ(v − x)` over `{v ∈ [0,1]ⁿ : eᵀv = s}`.
pub fn fw_gap(grad: &[f64], x: &[f64], mass: f64) -> f64 {
    let mut sorted: Vec<f64> = grad.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let whole = mass.floor() as usize;
    let frac = mass - whole as f64;
    let mut best: f64 = sorted.iter().take(whole).sum();
    if frac > 0.0 && whole < sorted.len() {
        best += frac * sorted[whole];
    }
    let at_x: f64 = grad.iter().zip(x).map(|(g, v)| g * v).sum();
    (best - at_x).max(0.0)
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { gap_tol: 1e-6, max_iter: 5000, armijo: 1e-4, backtrack: 0.5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub x_hat: Vec<f64>,
    pub value: f64,
    pub fw_gap: f64,
    /// `value + fw_gap`, an upper bound on the maximum by concavity.
    pub certified_upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn finite_pair(v: f64, g: &[f64]) -> bool {
    v.is_finite() && g.iter().all(|x| x.is_finite())
}

/// Maximizes a concave `f` (returning value and gradient) over `region`.
pub fn maximize<F>(
    f: F,
    region: &CappedSimplex,
    opts: &SolveOptions,
    start: Option<&[f64]>,
) -> Result<SolveReport>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = match start {
        Some(s) if s.len() == region.n => project(s, region),
        Some(_) => return Err(MerspError::InvalidArgument("start point has wrong length".into())),
        None => region.center(),
    };
    let (mut fx, mut gx) = f(&x)?;
    if !finite_pair(fx, &gx) {
        return Err(MerspError::NumericalFailure("objective not finite at start point".into()));
    }
    let mut step = 1.0;
    let mut iterations = 0;
    let mut gap = fw_gap(&gx, &x, region.mass);
    let mut converged = gap <= opts.gap_tol;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut a = step;
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&gx).map(|(xi, gi)| xi + a * gi).collect();
            let xn = project(&trial, region);
            let d: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let ascent = dot(&gx, &d);
            if d.iter().all(|v| *v == 0.0) || ascent <= 0.0 {
                break;
            }
            if let Ok((fn_, gn)) = f(&xn) {
                if finite_pair(fn_, &gn) && fn_ >= fx + opts.armijo * ascent {
                    accepted = Some((xn, fn_, gn, d));
                    break;
                }
            }
            a *= opts.backtrack;
        }
        let Some((xn, fn_, gn, d)) = accepted else { break };
        // Barzilai–Borwein: for concave f, dᵀ(g_new − g_old) ≤ 0
        let dy: f64 = d.iter().zip(gn.iter().zip(&gx)).map(|(di, (a, b))| di * (a - b)).sum();
        let dd = dot(&d, &d);
        step = if dy < 0.0 { (dd / -dy).clamp(1e-12, 1e12) } else { (a * 4.0).min(1e12) };
        x = xn;
        fx = fn_;
        gx = gn;
        gap = fw_gap(&gx, &x, region.mass);
        converged = gap <= opts.gap_tol;
    }

    Ok(SolveReport {
        certified_upper: fx + gap,
        x_hat: x,
        value: fx,
        fw_gap: gap,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let r = CappedSimplex::new(3, 2.0, 1e-10).unwrap();
        let p = project(&[0.9, 0.9, 0.9], &r);
        assert!(p.iter().all(|v| (v - 2.0 / 3.0).abs() < 1e-12));

        let feasible = [0.5, 0.7, 0.8];
        let p = project(&feasible, &r);
        for (a, b) in p.iter().zip(feasible) {
            assert!((a - b).abs() < 1e-12);
        }

        let r1 = CappedSimplex::new(3, 1.0, 1e-10).unwrap();
        let p = project(&[10.0, 0.0, 0.0], &r1);
        // KKT: τ = 9, the cap binds at 1 ... and the mass must still be 1,
        // so the remaining coordinates sit on the floor and the cap gives.
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - (1.0 - 2e-10)).abs() < 1e-12);
        assert!((p[1] - 1e-10).abs() < 1e-15 && (p[2] - 1e-10).abs() < 1e-15);
    }

    #[test]
    fn region_validation() {
        assert!(CappedSimplex::new(3, 0.0, 1e-9).is_err());
        assert!(CappedSimplex::new(3, 4.0, 1e-9).is_err());
        assert!(CappedSimplex::new(3, 1.0, 0.5).is_err());
    }

    #[test]
    fn fw_gap_fractional_mass() {
        let g = [3.0, 1.0, 2.0];
        let x = [0.5, 0.5, 0.5];
        // best vertex: 1 on coord 0, 0.5 on coord 2 → 3 + 1 = 4; gᵀx = 3
        assert!((fw_gap(&g, &x, 1.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_with_feasible_center() {
        let c = vec![0.2, 0.5, 0.9, 0.4];
        let r = CappedSimplex::with_default_floor(4, c.iter().sum()).unwrap();
        let cc = c.clone();
        let rep = maximize(
            move |x: &[f64]| {
                let v = -x.iter().zip(&cc).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                let g = x.iter().zip(&cc).map(|(a, b)| -2.0 * (a - b)).collect();
                Ok((v, g))
            },
            &r,
            &SolveOptions { gap_tol: 1e-8, ..Default::default() },
            None,
        )
        .unwrap();
        assert!(rep.converged && rep.fw_gap <= 1e-8);
        for (a, b) in rep.x_hat.iter().zip(&c) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn linear_objective_reaches_vertex_value() {
        let c = vec![1.0, 5.0, 3.0, -2.0, 4.0];
        let r = CappedSimplex::with_default_floor(5, 2.0).unwrap();
        let cc = c.clone();
        let rep = maximize(
            move |x: &[f64]| Ok((dot(x, &cc), cc.clone())),
            &r,
            &SolveOptions::default(),
            None,
        )
        .unwrap();
        // exact max over [0,1] is 5 + 4 = 9
        assert!(rep.certified_upper >= 9.0 - 1e-12);
        assert!(rep.certified_upper - 9.0 <= 1e-6);
        assert!(rep.x_hat[1] > 1.0 - 1e-6 && rep.x_hat[4] > 1.0 - 1e-6);
    }

    #[test]
    fn log_barrier_symmetric_optimum() {
        let n = 6;
        let s = 3.0;
        let r = CappedSimplex::with_default_floor(n, s).unwrap();
        let rep = maximize(
            |x: &[f64]| Ok((x.iter().map(|v| v.ln()).sum(), x.iter().map(|v| 1.0 / v).collect())),
            &r,
            &SolveOptions::default(),
            Some(&[0.9, 0.1, 0.5, 0.5, 0.6, 0.4]),
        )
        .unwrap();
        let want = n as f64 * (s / n as f64).ln();
        assert!((rep.value - want).abs() < 1e-6);
        assert!(rep.certified_upper >= want - 1e-12);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = CappedSimplex::with_default_floor(3, 1.0).unwrap();
        let out = maximize(|_x: &[f64]| Ok((f64::NAN, vec![0.0; 3])), &r, &Default::default(), None);
        assert!(matches!(out, Err(MerspError::NumericalFailure(_))));
    }
}
