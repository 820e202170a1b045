//! Seeded instance corpus shared by the integration suites.
#![allow(dead_code)]

use mersp::cli::{generate, GenKind};
use mersp::instance::CovarianceInstance;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Case {
    pub kind: GenKind,
    pub n: usize,
    pub t: usize,
    pub s: usize,
    pub seed: u64,
    pub cov: CovarianceInstance,
}

impl Case {
    pub fn id(&self) -> String {
        format!("{}-n{}-t{}-s{}-{}", self.kind.label(), self.n, self.t, self.s, self.seed)
    }
}

/// `count` instances cycling through n ∈ {8, 10, 12} and t ∈ 1..=6,
/// alternating positive definite and singular (condition (7)) kinds.
pub fn sweep_corpus(count: usize, seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = [8, 10, 12][k % 3];
            let t = 1 + (k / 3) % 6;
            let s = rng.random_range(2..=n - 2);
            let kind = if k % 2 == 0 { GenKind::Pd } else { GenKind::SingularCond7 };
            let case_seed = rng.random::<u64>();
            let rank = (kind != GenKind::Pd).then(|| t + rng.random_range(s..n));
            let cov = generate(kind, n, t, rank, case_seed).expect("corpus generation");
            Case { kind, n, t, s, seed: case_seed, cov }
        })
        .collect()
}

/// Singular instances with T relabelled to maximize ψ*.
pub fn maxpsi_corpus(count: usize, seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = [8, 10, 12][k % 3];
            let t = 2 + k % 4;
            let s = rng.random_range(2..=n / 2);
            let case_seed = rng.random::<u64>();
            let rank = t + rng.random_range(s.max(n / 2)..n);
            let cov = generate(GenKind::SingularMaxpsi, n, t, Some(rank), case_seed).expect("corpus generation");
            Case { kind: GenKind::SingularMaxpsi, n, t, s, seed: case_seed, cov }
        })
        .collect()
}

/// All size-`s` subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..s).collect();
    loop {
        out.push(c.clone());
        let Some(pos) = (0..s).rev().find(|&p| c[p] < n - s + p) else { break };
        c[pos] += 1;
        for q in (pos + 1)..s {
            c[q] = c[q - 1] + 1;
        }
    }
    out
}

/// Central differences of `f` at `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}

/// A random point of `{x ∈ [lo, hi]ⁿ : eᵀx = s}`.
pub fn interior_point(rng: &mut ChaCha8Rng, n: usize, s: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    // shift towards the mass constraint while staying in the box
    for _ in 0..200 {
        let excess = x.iter().sum::<f64>() - s as f64;
        if excess.abs() < 1e-14 {
            break;
        }
        let free: Vec<usize> = (0..n)
            .filter(|&i| if excess > 0.0 { x[i] > lo } else { x[i] < hi })
            .collect();
        let step = excess / free.len() as f64;
        for i in free {
            x[i] = (x[i] - step).clamp(lo, hi);
        }
    }
    x
}
