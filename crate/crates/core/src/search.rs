//! Lower bounds from heuristics, and exhaustive search for small instances.
//!
//! Indices are zero-based. A subset is *well posed* when both principal
//! submatrices pass a Cholesky factorization at the PD tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MerspError, Result};
use crate::instance::MerspInstance;

/// Largest number of subsets [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

const SWAP_IMPROVEMENT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Greedy,
    LocalSearch,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetSolution {
    /// Sorted ascending.
    pub subset: Vec<usize>,
    pub value: f64,
    pub method: SearchMethod,
}

/// Forward selection, adding the best well-posed index at each step.
pub fn greedy(inst: &MerspInstance) -> Result<SubsetSolution> {
    let n = inst.n();
    let mut chosen: Vec<usize> = Vec::with_capacity(inst.s());
    let mut value = inst.offset();
    while chosen.len() < inst.s() {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|i| !chosen.contains(i)) {
            let mut trial = chosen.clone();
            trial.push(i);
            trial.sort_unstable();
            if let Ok(v) = inst.value_of(&trial) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        let (i, v) = best.ok_or(MerspError::Infeasible)?;
        chosen.push(i);
        chosen.sort_unstable();
        value = v;
    }
    Ok(SubsetSolution { subset: chosen, value, method: SearchMethod::Greedy })
}

/// First-improvement 1-swap hill climbing from a well-posed start.
pub fn local_search(inst: &MerspInstance, start: &SubsetSolution) -> Result<SubsetSolution> {
    let n = inst.n();
    let mut current = start.subset.clone();
    current.sort_unstable();
    let mut value = inst.objective(&current)?;
    'outer: loop {
        for pos in 0..current.len() {
            for j in (0..n).filter(|j| !current.contains(j)) {
                let mut trial = current.clone();
                trial[pos] = j;
                trial.sort_unstable();
                if let Ok(v) = inst.value_of(&trial) {
                    if v > value + SWAP_IMPROVEMENT {
                        current = trial;
                        value = v;
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }
    Ok(SubsetSolution { subset: current, value, method: SearchMethod::LocalSearch })
}

/// Greedy followed by local search.
pub fn heuristic(inst: &MerspInstance) -> Result<SubsetSolution> {
    local_search(inst, &greedy(inst)?)
}

pub fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n.checked_sub(k)?);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Advances a sorted combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(pos) = (0..k).rev().find(|&p| c[p] < n - k + p) else { return false };
    c[pos] += 1;
    for q in (pos + 1)..k {
        c[q] = c[q - 1] + 1;
    }
    true
}

/// Exact optimum over all well-posed subsets of size `s`; ties go to the
/// lexicographically smallest subset.
pub fn brute_force(inst: &MerspInstance) -> Result<SubsetSolution> {
    let (n, s) = (inst.n(), inst.s());
    let count = binomial(n, s).unwrap_or(u128::MAX);
    if count > BRUTE_FORCE_LIMIT {
        return Err(MerspError::TooLarge { count, limit: BRUTE_FORCE_LIMIT });
    }
    // one chunk per leading index, each scanned in lexicographic order
    let chunks: Vec<Option<(Vec<usize>, f64)>> = (0..=(n - s))
        .into_par_iter()
        .map(|first| {
            let mut best: Option<(Vec<usize>, f64)> = None;
            let mut tail: Vec<usize> = ((first + 1)..(first + s)).collect();
            loop {
                let mut subset = Vec::with_capacity(s);
                subset.push(first);
                subset.extend_from_slice(&tail);
                if let Ok(v) = inst.value_of(&subset) {
                    if best.as_ref().is_none_or(|(_, b)| v > *b && !is_tie(v, *b)) {
                        best = Some((subset, v));
                    }
                }
                if tail.is_empty() || !next_tail(&mut tail, first + 1, n) {
                    break;
                }
            }
            best
        })
        .collect();

    let mut best: Option<(Vec<usize>, f64)> = None;
    for (subset, v) in chunks.into_iter().flatten() {
        if best.as_ref().is_none_or(|(_, b)| v > *b && !is_tie(v, *b)) {
            best = Some((subset, v));
        }
    }
    let (subset, value) = best.ok_or(MerspError::Infeasible)?;
    Ok(SubsetSolution { subset, value, method: SearchMethod::Exact })
}

/// Next combination of `lo..n` (shifted to start at zero for the stepping).
fn next_tail(tail: &mut [usize], lo: usize, n: usize) -> bool {
    tail.iter_mut().for_each(|v| *v -= lo);
    let more = next_combination(tail, n - lo);
    tail.iter_mut().for_each(|v| *v += lo);
    more
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;

    fn diag_instance(s: usize) -> MerspInstance {
        MerspInstance::new(
            SymMatrix::from_diagonal(&[4.0, 1.0, 1.0]),
            SymMatrix::from_diagonal(&[2.0, 1.0, 1.0]),
            s,
        )
        .unwrap()
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(40, 20), Some(137_846_528_820));
        assert_eq!(binomial(3, 5), None);
    }

    #[test]
    fn greedy_diagonal() {
        let g = greedy(&diag_instance(1)).unwrap();
        assert_eq!(g.subset, vec![0]);
        assert!((g.value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn local_search_moves_to_optimum() {
        let inst = diag_instance(1);
        let start = SubsetSolution { subset: vec![1], value: 0.0, method: SearchMethod::Greedy };
        let l = local_search(&inst, &start).unwrap();
        assert_eq!(l.subset, vec![0]);
        assert!((l.value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn brute_force_ties_and_equal_matrices() {
        // conditional covariance of the 3×3 example, as a two-index problem
        let b = SymMatrix::identity(2);
        let bt = SymMatrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let ex = brute_force(&MerspInstance::new(b, bt, 1).unwrap()).unwrap();
        assert_eq!(ex.subset, vec![0]);
        assert!((ex.value - 2f64.ln()).abs() < 1e-14);

        let c = SymMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.1], vec![0.0, 0.1, 0.7]]).unwrap();
        let ex = brute_force(&MerspInstance::new(c.clone(), c, 2).unwrap()).unwrap();
        assert!(ex.value.abs() < 1e-14);
        assert_eq!(ex.subset, vec![0, 1]);
    }

    #[test]
    fn brute_force_guard_and_infeasible() {
        let big = MerspInstance::new(SymMatrix::identity(40), SymMatrix::identity(40), 20).unwrap();
        assert!(matches!(brute_force(&big), Err(MerspError::TooLarge { .. })));
        let singular = MerspInstance::new(SymMatrix::zeros(3), SymMatrix::identity(3), 2).unwrap();
        assert!(matches!(brute_force(&singular), Err(MerspError::Infeasible)));
        assert!(matches!(greedy(&singular), Err(MerspError::Infeasible)));
    }

    #[test]
    fn pair_tie_goes_to_smallest() {
        let inst = diag_instance(2);
        let ex = brute_force(&inst).unwrap();
        assert_eq!(ex.subset, vec![0, 1]);
        assert!((ex.value - 2f64.ln()).abs() < 1e-15);
    }
}
