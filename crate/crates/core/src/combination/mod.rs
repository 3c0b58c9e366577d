//! Sparse grid combination technique on top of an algebraic hierarchy.
//!
//! Subproblems `(A_j ⊗ A_j') U = R_j F R_j'ᵀ` are solved for every index
//! pair with `j + j' = L` (weight `+1`) and `j + j' = L - 1` (weight `-1`),
//! where `R_j` restricts from the finest level `L` to level `j`. Combined
//! values are only ever formed at sampled pairs of fine nodes.

mod loads;
mod reference;

pub use loads::{
    constant_load_vector, pivoted_cholesky, tensor_load_constant, tensor_load_kernel, GaussianKernel,
    LowRankFactor, TensorLoad, DENSE_KERNEL_LIMIT,
};
pub use reference::{
    disk_poisson_constant, lowrank_solutions, reference_disk, reference_lowrank, reference_square,
    square_poisson_constant, REFERENCE_TOL,
};

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::amg::{compose_prolongation, Hierarchy};
use crate::error::{Error, Result};
use crate::sparse::{DenseGrid, SparseMatrix};
use crate::tensor::{tensor_solve_with, AmgCycleConfig, LevelView, SolveStats, TensorProblem, VCycle};

pub type LevelPair = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    pub level: usize,
    pub plus: Vec<LevelPair>,
    pub minus: Vec<LevelPair>,
}

impl MultiIndexSet {
    /// `(sign, pair)` for every term, plus terms first.
    pub fn terms(&self) -> impl Iterator<Item = (i32, LevelPair)> + '_ {
        self.plus
            .iter()
            .map(|&p| (1, p))
            .chain(self.minus.iter().map(|&p| (-1, p)))
    }

    pub fn len(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }
}

/// All pairs with `j + j' = level` and, for `level ≥ 1`, `j + j' = level - 1`.
pub fn enumerate_indices(level: usize) -> MultiIndexSet {
    let plus = (0..=level).map(|j| (j, level - j)).collect();
    let minus = match level {
        0 => Vec::new(),
        _ => (0..level).map(|j| (j, level - 1 - j)).collect(),
    };
    MultiIndexSet { level, plus, minus }
}

/// Composed prolongations `P_j^L` to the finest level and their transposes.
#[derive(Debug, Clone)]
pub struct Transfers {
    to_fine: Vec<SparseMatrix>,
    from_fine: Vec<SparseMatrix>,
}

impl Transfers {
    pub fn new(h: &Hierarchy) -> Result<Self> {
        let top = h.finest_level();
        let mut to_fine = vec![SparseMatrix::identity(h.size(top))];
        for j in (0..top).rev() {
            let next = to_fine.last().unwrap().matmul(h.prolongation(j))?;
            to_fine.push(next);
        }
        to_fine.reverse();
        let from_fine = to_fine.iter().map(SparseMatrix::transpose).collect();
        Ok(Self { to_fine, from_fine })
    }

    /// `P_j^L`.
    pub fn prolongation(&self, j: usize) -> &SparseMatrix {
        &self.to_fine[j]
    }

    /// `(P_j^L)ᵀ`.
    pub fn restriction(&self, j: usize) -> &SparseMatrix {
        &self.from_fine[j]
    }

    fn check(&self, j: usize) -> Result<()> {
        if j >= self.to_fine.len() {
            return Err(Error::LevelOutOfRange {
                level: j,
                levels: self.to_fine.len(),
            });
        }
        Ok(())
    }

    pub fn restrict_load(&self, load: &TensorLoad, (j, jp): LevelPair) -> Result<DenseGrid> {
        self.check(j)?;
        self.check(jp)?;
        let n = self.to_fine[0].n_rows();
        if load.size().is_some_and(|s| s != n) {
            return Err(Error::dims("restrict_load", n, load.size().unwrap_or(0)));
        }
        let (rj, rjp) = (self.restriction(j), self.restriction(jp));
        Ok(match load {
            TensorLoad::Dense(f) => f.sandwich(rj, rjp),
            TensorLoad::Factored(factors) => {
                let mut out = DenseGrid::zeros(rj.n_rows(), rjp.n_rows());
                for a in factors {
                    out.axpy(1.0, &DenseGrid::outer(&rj.spmv(a)?, &rjp.spmv(a)?));
                }
                out
            }
        })
    }
}

/// `F_{(j, j')} = R_j F R_j'ᵀ`, applied direction-wise.
pub fn subproblem_rhs(f: &DenseGrid, h: &Hierarchy, (j, jp): LevelPair) -> Result<DenseGrid> {
    let top = h.finest_level();
    if f.shape() != (h.size(top), h.size(top)) {
        return Err(Error::dims("subproblem_rhs", h.size(top), f.n_rows()));
    }
    let rj = compose_prolongation(h, j, top)?.transpose();
    let rjp = compose_prolongation(h, jp, top)?.transpose();
    Ok(f.sandwich(&rj, &rjp))
}

#[derive(Debug, Clone)]
pub struct Term {
    pub sign: i32,
    pub pair: LevelPair,
    pub solution: DenseGrid,
    pub stats: SolveStats,
}

#[derive(Debug, Clone)]
pub struct CombinedSolution<'a> {
    pub hierarchy: &'a Hierarchy,
    pub transfers: Transfers,
    /// Sorted by level pair.
    pub terms: Vec<Term>,
    /// Wall-clock time of the subproblem solves.
    pub solve_time: Duration,
}

impl CombinedSolution<'_> {
    pub fn all_converged(&self) -> bool {
        self.terms.iter().all(|t| t.stats.converged)
    }

    pub fn total_iterations(&self) -> usize {
        self.terms.iter().map(|t| t.stats.iterations).sum()
    }

    /// Full fine-level grid `Σ sign · P_j X (P_j')ᵀ`; only sensible for small
    /// problems.
    pub fn materialize(&self) -> DenseGrid {
        let n = self.hierarchy.size(self.hierarchy.finest_level());
        let mut out = DenseGrid::zeros(n, n);
        for t in &self.terms {
            let fine = t
                .solution
                .sandwich(self.transfers.prolongation(t.pair.0), self.transfers.prolongation(t.pair.1));
            out.axpy(f64::from(t.sign), &fine);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_it: usize,
    pub cycle: AmgCycleConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_it: 200,
            cycle: AmgCycleConfig::default(),
        }
    }
}

/// Solves every subproblem of `idx`, in parallel on the current rayon pool.
/// Non-convergence is recorded per term and does not abort the others.
pub fn solve_all<'a>(
    load: &TensorLoad,
    h: &'a Hierarchy,
    idx: &MultiIndexSet,
    opts: SolveOptions,
) -> Result<CombinedSolution<'a>> {
    if idx.level > h.finest_level() {
        return Err(Error::LevelOutOfRange {
            level: idx.level,
            levels: h.n_levels(),
        });
    }
    let transfers = Transfers::new(h)?;
    let cycle = VCycle::new(h, opts.cycle)?;
    let start = Instant::now();
    let pairs: Vec<(i32, LevelPair)> = idx.terms().collect();
    let mut terms = pairs
        .par_iter()
        .map(|&(sign, pair)| {
            let rhs = transfers.restrict_load(load, pair)?;
            let problem = TensorProblem::new(LevelView::new(h, pair.0)?, LevelView::new(h, pair.1)?, rhs)?;
            let (solution, stats) = tensor_solve_with(&problem, &cycle, &cycle, opts.tol, opts.max_it)?;
            Ok(Term {
                sign,
                pair,
                solution,
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let solve_time = start.elapsed();
    terms.sort_by_key(|t| t.pair);
    Ok(CombinedSolution {
        hierarchy: h,
        transfers,
        terms,
        solve_time,
    })
}

/// The full tensor-product solve on the finest level, as a one-term combination.
pub fn solve_full<'a>(load: &TensorLoad, h: &'a Hierarchy, opts: SolveOptions) -> Result<CombinedSolution<'a>> {
    let top = h.finest_level();
    let idx = MultiIndexSet {
        level: top,
        plus: vec![(top, top)],
        minus: Vec::new(),
    };
    solve_all(load, h, &idx, opts)
}

/// Pairs of interior fine-level unknowns at which solutions are compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationSample {
    pub pairs: Vec<(usize, usize)>,
    pub seed: u64,
}

impl EvaluationSample {
    /// `count` pairs drawn uniformly with replacement from `0..n` squared.
    pub fn uniform(n: usize, count: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("cannot sample from an empty grid".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = (0..count)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect();
        Ok(Self { pairs, seed })
    }

    /// Every pair, row by row.
    pub fn all_pairs(n: usize) -> Self {
        Self {
            pairs: (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect(),
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `Σ_terms sign · (P_j^L)_{a,:} X (P_j'^L)_{b,:}ᵀ` at every sampled `(a, b)`.
pub fn evaluate_combined(c: &CombinedSolution, sample: &EvaluationSample) -> Result<Vec<f64>> {
    let n = c.hierarchy.size(c.hierarchy.finest_level());
    if let Some(&(a, b)) = sample.pairs.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(Error::dims("evaluate_combined sample index", n, a.max(b) + 1));
    }
    Ok(sample
        .pairs
        .par_iter()
        .map(|&(a, b)| {
            c.terms
                .iter()
                .map(|t| {
                    let (ca, va) = c.transfers.prolongation(t.pair.0).row(a);
                    let (cb, vb) = c.transfers.prolongation(t.pair.1).row(b);
                    let mut s = 0.0;
                    for (&k, &u) in ca.iter().zip(va) {
                        let row = t.solution.row(k);
                        let inner: f64 = cb.iter().zip(vb).map(|(&l, &v)| row[l] * v).sum();
                        s += u * inner;
                    }
                    f64::from(t.sign) * s
                })
                .sum()
        })
        .collect())
}

/// `‖approx - reference‖ / ‖reference‖`.
pub fn relative_error(approx: &[f64], reference: &[f64]) -> Result<f64> {
    if approx.len() != reference.len() {
        return Err(Error::dims("relative_error", reference.len(), approx.len()));
    }
    let norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff = approx
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}
