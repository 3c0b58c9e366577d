use std::cmp::Reverse;
use std::collections::BTreeSet;

use super::strength::StrengthGraph;
use crate::sparse::SparseMatrix;

/// Partition of the variables of one level into coarse and fine sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CFSplitting {
    is_coarse: Vec<bool>,
    /// Position of each coarse variable on the next coarser level.
    coarse_index: Vec<usize>,
    coarse: Vec<usize>,
    fine: Vec<usize>,
}

impl CFSplitting {
    pub fn from_flags(is_coarse: Vec<bool>) -> Self {
        let mut coarse_index = vec![usize::MAX; is_coarse.len()];
        let mut coarse = Vec::new();
        let mut fine = Vec::new();
        for (i, &c) in is_coarse.iter().enumerate() {
            if c {
                coarse_index[i] = coarse.len();
                coarse.push(i);
            } else {
                fine.push(i);
            }
        }
        Self {
            is_coarse,
            coarse_index,
            coarse,
            fine,
        }
    }

    pub fn len(&self) -> usize {
        self.is_coarse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_coarse.is_empty()
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.is_coarse[i]
    }

    /// Sorted coarse variables.
    pub fn coarse(&self) -> &[usize] {
        &self.coarse
    }

    /// Sorted fine variables.
    pub fn fine(&self) -> &[usize] {
        &self.fine
    }

    pub fn n_coarse(&self) -> usize {
        self.coarse.len()
    }

    /// Coarse-level index of a coarse variable.
    pub fn coarse_index(&self, i: usize) -> Option<usize> {
        self.is_coarse[i].then(|| self.coarse_index[i])
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Undecided,
    Coarse,
    Fine,
}

/// Classical Ruge-Stüben first pass.
///
/// Repeatedly picks the undecided variable with the largest
/// `λ(i) = |Sᵀ(i) ∩ U| + 2 |Sᵀ(i) ∩ F|` (ties go to the lowest index), makes
/// it coarse and every undecided variable that strongly depends on it fine.
/// When all remaining `λ` vanish, leftover variables become coarse if their
/// matrix row has no off-diagonal entries and fine otherwise.
pub fn standard_coarsening(a: &SparseMatrix, strength: &StrengthGraph) -> CFSplitting {
    let n = strength.len();
    let mut state = vec![State::Undecided; n];
    let lambda_of = |i: usize, state: &[State]| -> usize {
        strength.transposed[i]
            .iter()
            .map(|&k| match state[k] {
                State::Undecided => 1,
                State::Fine => 2,
                State::Coarse => 0,
            })
            .sum()
    };

    let mut lambda: Vec<usize> = (0..n).map(|i| lambda_of(i, &state)).collect();
    // Ordered by λ, then by lowest index, so the last element is the argmax.
    let mut queue: BTreeSet<(usize, Reverse<usize>)> =
        (0..n).map(|i| (lambda[i], Reverse(i))).collect();

    let mut affected: Vec<usize> = Vec::new();
    while let Some(&(lmax, Reverse(imax))) = queue.last() {
        if lmax == 0 {
            break;
        }
        queue.remove(&(lmax, Reverse(imax)));
        state[imax] = State::Coarse;
        affected.clear();
        affected.extend_from_slice(&strength.strong[imax]);
        for &j in &strength.transposed[imax] {
            if state[j] == State::Undecided {
                queue.remove(&(lambda[j], Reverse(j)));
                state[j] = State::Fine;
                affected.extend_from_slice(&strength.strong[j]);
            }
        }
        // Only variables whose Sᵀ contains a newly decided variable change λ.
        affected.sort_unstable();
        affected.dedup();
        for &k in &affected {
            if state[k] != State::Undecided {
                continue;
            }
            let new = lambda_of(k, &state);
            if new != lambda[k] {
                queue.remove(&(lambda[k], Reverse(k)));
                lambda[k] = new;
                queue.insert((new, Reverse(k)));
            }
        }
    }

    let is_coarse = state
        .iter()
        .enumerate()
        .map(|(i, s)| match s {
            State::Coarse => true,
            State::Fine => false,
            State::Undecided => a.row(i).0.iter().all(|&k| k == i),
        })
        .collect();
    CFSplitting::from_flags(is_coarse)
}

/// Classical second pass: a fine `i` with a strong fine neighbour `j` that
/// shares no strong coarse variable with `i` gets `j` promoted to coarse, or
/// becomes coarse itself when that happens for a second neighbour.
pub fn second_pass(strength: &StrengthGraph, split: &CFSplitting) -> CFSplitting {
    let n = strength.len();
    let mut coarse: Vec<bool> = (0..n).map(|i| split.is_coarse(i)).collect();
    let mut mark = vec![usize::MAX; n];
    for i in 0..n {
        if coarse[i] {
            continue;
        }
        for &k in &strength.strong[i] {
            if coarse[k] {
                mark[k] = i;
            }
        }
        let mut tentative: Option<usize> = None;
        for &j in &strength.strong[i] {
            if coarse[j] {
                continue;
            }
            if strength.strong[j].iter().any(|&k| mark[k] == i) {
                continue;
            }
            if tentative.is_some() {
                coarse[i] = true;
                tentative = None;
                break;
            }
            tentative = Some(j);
            mark[j] = i;
        }
        if let Some(j) = tentative {
            coarse[j] = true;
        }
    }
    CFSplitting::from_flags(coarse)
}
