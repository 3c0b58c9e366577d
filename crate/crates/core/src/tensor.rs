//! Direction-wise multigrid for Kronecker systems `(A_j ⊗ A_j') U = F`.
//!
//! A grid `U` of shape `N_j × N_j'` stands for `vec(U)`, and the operator acts
//! as `U ↦ A_j U A_j'ᵀ`. Each iteration applies one V-cycle of the row
//! hierarchy to every column of the residual and then one V-cycle of the
//! column hierarchy to every row.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use crate::amg::Hierarchy;
use crate::error::{Error, Result};
use crate::sparse::{DenseGrid, SparseMatrix};

/// Largest coarsest level the V-cycle factorises densely.
const COARSE_DIRECT_LIMIT: usize = 4000;
/// Largest `N_A · N_B` accepted by [`dense_kron_solve`].
pub const DENSE_KRON_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmgCycleConfig {
    /// Forward Gauss-Seidel sweeps before the coarse correction.
    pub pre_smooth: usize,
    /// Backward Gauss-Seidel sweeps after it, which keeps the cycle symmetric
    /// when `pre_smooth == post_smooth`.
    pub post_smooth: usize,
}

impl Default for AmgCycleConfig {
    fn default() -> Self {
        Self {
            pre_smooth: 1,
            post_smooth: 1,
        }
    }
}

impl AmgCycleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pre_smooth + self.post_smooth == 0 {
            return Err(Error::InvalidParameter(
                "a cycle needs at least one smoothing step".into(),
            ));
        }
        Ok(())
    }
}

fn dense_lu(a: &SparseMatrix) -> Result<LU<f64, Dyn, Dyn>> {
    let n = a.n_rows();
    let mut m = DMatrix::zeros(n, a.n_cols());
    for (i, j, v) in a.triplets() {
        m[(i, j)] = v;
    }
    let lu = m.lu();
    if !lu.is_invertible() {
        return Err(Error::Singular(format!("{n}x{n} matrix is singular")));
    }
    Ok(lu)
}

/// V-cycle over the levels `0..=top` of a hierarchy, with the coarsest level
/// `0` factorised once.
pub struct VCycle<'a> {
    hierarchy: &'a Hierarchy,
    diagonals: Vec<Vec<f64>>,
    coarse: LU<f64, Dyn, Dyn>,
    cfg: AmgCycleConfig,
}

impl<'a> VCycle<'a> {
    pub fn new(hierarchy: &'a Hierarchy, cfg: AmgCycleConfig) -> Result<Self> {
        cfg.validate()?;
        let coarse_matrix = hierarchy.matrix(0);
        if coarse_matrix.n_rows() > COARSE_DIRECT_LIMIT {
            return Err(Error::SizeGuard {
                size: coarse_matrix.n_rows(),
                limit: COARSE_DIRECT_LIMIT,
            });
        }
        let coarse = dense_lu(coarse_matrix)?;
        let mut diagonals = Vec::with_capacity(hierarchy.n_levels());
        for j in 0..hierarchy.n_levels() {
            let d = hierarchy.matrix(j).diagonal();
            if j > 0 {
                if let Some(row) = d.iter().position(|&v| v == 0.0) {
                    return Err(Error::ZeroDiagonal { row });
                }
            }
            diagonals.push(d);
        }
        Ok(Self {
            hierarchy,
            diagonals,
            coarse,
            cfg,
        })
    }

    pub fn hierarchy(&self) -> &'a Hierarchy {
        self.hierarchy
    }

    /// One cycle for `A_top x = b`, improving `x` in place.
    pub fn apply(&self, top: usize, b: &[f64], x: &mut [f64]) {
        debug_assert_eq!(b.len(), self.hierarchy.size(top));
        if top == 0 {
            let sol = self
                .coarse
                .solve(&DVector::from_column_slice(b))
                .expect("factor checked invertible");
            x.copy_from_slice(sol.as_slice());
            return;
        }
        let a = self.hierarchy.matrix(top);
        let d = &self.diagonals[top];
        for _ in 0..self.cfg.pre_smooth {
            gauss_seidel(a, d, b, x, false);
        }
        let mut r = b.to_vec();
        a.spmv_add(-1.0, x, &mut r);
        let rc = self.hierarchy.restriction(top - 1).spmv(&r).expect("level sizes agree");
        let mut ec = vec![0.0; rc.len()];
        self.apply(top - 1, &rc, &mut ec);
        self.hierarchy.prolongation(top - 1).spmv_add(1.0, &ec, x);
        for _ in 0..self.cfg.post_smooth {
            gauss_seidel(a, d, b, x, true);
        }
    }

    /// One cycle from a zero initial guess: an approximation of `A_top⁻¹ b`.
    pub fn precondition(&self, top: usize, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.apply(top, b, &mut x);
        x
    }
}

fn gauss_seidel(a: &SparseMatrix, diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let n = b.len();
    let mut sweep = |i: usize| {
        let (cols, vals) = a.row(i);
        let mut s = b[i];
        for (&k, &v) in cols.iter().zip(vals) {
            if k != i {
                s -= v * x[k];
            }
        }
        x[i] = s / diag[i];
    };
    if backward {
        (0..n).rev().for_each(&mut sweep);
    } else {
        (0..n).for_each(&mut sweep);
    }
}

/// One V-cycle for `A_level x = b` starting from `x0`.
pub fn amg_vcycle(
    h: &Hierarchy,
    level: usize,
    b: &[f64],
    x0: &[f64],
    cfg: AmgCycleConfig,
) -> Result<Vec<f64>> {
    h.check_level(level)?;
    let n = h.size(level);
    if b.len() != n {
        return Err(Error::dims("amg_vcycle (b)", n, b.len()));
    }
    if x0.len() != n {
        return Err(Error::dims("amg_vcycle (x0)", n, x0.len()));
    }
    let cycle = VCycle::new(h, cfg)?;
    let mut x = x0.to_vec();
    cycle.apply(level, b, &mut x);
    Ok(x)
}

/// A hierarchy truncated at `level`, whose top matrix is `A_level`.
#[derive(Debug, Clone, Copy)]
pub struct LevelView<'a> {
    pub hierarchy: &'a Hierarchy,
    pub level: usize,
}

impl<'a> LevelView<'a> {
    pub fn new(hierarchy: &'a Hierarchy, level: usize) -> Result<Self> {
        hierarchy.check_level(level)?;
        Ok(Self { hierarchy, level })
    }

    pub fn matrix(&self) -> &'a SparseMatrix {
        self.hierarchy.matrix(self.level)
    }

    pub fn size(&self) -> usize {
        self.hierarchy.size(self.level)
    }
}

#[derive(Debug, Clone)]
pub struct TensorProblem<'a> {
    pub rows: LevelView<'a>,
    pub cols: LevelView<'a>,
    pub rhs: DenseGrid,
}

impl<'a> TensorProblem<'a> {
    pub fn new(rows: LevelView<'a>, cols: LevelView<'a>, rhs: DenseGrid) -> Result<Self> {
        if rhs.n_rows() != rows.size() {
            return Err(Error::dims("TensorProblem rows", rows.size(), rhs.n_rows()));
        }
        if rhs.n_cols() != cols.size() {
            return Err(Error::dims("TensorProblem cols", cols.size(), rhs.n_cols()));
        }
        Ok(Self { rows, cols, rhs })
    }

    /// `F - A_j X A_j'ᵀ`.
    pub fn residual(&self, x: &DenseGrid) -> DenseGrid {
        let mut r = self.rhs.clone();
        r.axpy(-1.0, &x.sandwich(self.rows.matrix(), self.cols.matrix()));
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub wall_time: Duration,
    pub converged: bool,
    /// Iterations whose residual grew by more than 10% over the previous one.
    pub non_monotone_steps: usize,
    pub residual_history: Vec<f64>,
}

/// Applies the direction-wise preconditioner to a residual grid.
fn tensor_precondition(
    rows: &VCycle,
    row_level: usize,
    cols: &VCycle,
    col_level: usize,
    r: &DenseGrid,
) -> DenseGrid {
    let sweep = |cycle: &VCycle, level: usize, grid: &DenseGrid| {
        let width = grid.n_cols();
        let mut out = DenseGrid::zeros(grid.n_rows(), width);
        if width > 0 {
            out.values_mut()
                .par_chunks_mut(width)
                .zip(grid.values().par_chunks(width))
                .for_each(|(dst, src)| cycle.apply(level, src, dst));
        }
        out
    };
    // Columns of R are the rows of Rᵀ.
    let z = sweep(rows, row_level, &r.transpose()).transpose();
    sweep(cols, col_level, &z)
}

/// Iterative refinement `X ← X + M (F - A_j X A_j'ᵀ)` until
/// `‖R‖_F / ‖F‖_F ≤ tol`. Without convergence the best iterate is returned
/// and `stats.converged` is false.
pub fn tensor_solve(
    p: &TensorProblem,
    tol: f64,
    max_it: usize,
    cfg: AmgCycleConfig,
) -> Result<(DenseGrid, SolveStats)> {
    let rows = VCycle::new(p.rows.hierarchy, cfg)?;
    let cols = VCycle::new(p.cols.hierarchy, cfg)?;
    tensor_solve_with(p, &rows, &cols, tol, max_it)
}

/// [`tensor_solve`] with prebuilt cycles for the two hierarchies.
pub fn tensor_solve_with(
    p: &TensorProblem,
    rows: &VCycle,
    cols: &VCycle,
    tol: f64,
    max_it: usize,
) -> Result<(DenseGrid, SolveStats)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if !std::ptr::eq(rows.hierarchy(), p.rows.hierarchy) || !std::ptr::eq(cols.hierarchy(), p.cols.hierarchy) {
        return Err(Error::InvalidParameter("cycles were built for other hierarchies".into()));
    }
    let start = Instant::now();
    let (m, n) = p.rhs.shape();
    let f_norm = p.rhs.frobenius_norm();
    let mut stats = SolveStats {
        iterations: 0,
        final_relative_residual: 0.0,
        wall_time: Duration::ZERO,
        converged: true,
        non_monotone_steps: 0,
        residual_history: Vec::new(),
    };
    if f_norm == 0.0 {
        stats.wall_time = start.elapsed();
        return Ok((DenseGrid::zeros(m, n), stats));
    }

    let mut x = DenseGrid::zeros(m, n);
    let mut r = p.rhs.clone();
    let mut best: Option<(f64, DenseGrid)> = None;
    let mut prev = 1.0;
    let mut rel = 1.0;
    stats.converged = false;
    for it in 1..=max_it {
        let y = tensor_precondition(rows, p.rows.level, cols, p.cols.level, &r);
        x.axpy(1.0, &y);
        r = p.residual(&x);
        rel = r.frobenius_norm() / f_norm;
        stats.iterations = it;
        stats.residual_history.push(rel);
        if it > 1 && rel > 1.1 * prev {
            stats.non_monotone_steps += 1;
            if best.as_ref().is_none_or(|(b, _)| prev < *b) {
                let mut previous = x.clone();
                previous.axpy(-1.0, &y);
                best = Some((prev, previous));
            }
        }
        prev = rel;
        if !rel.is_finite() {
            break;
        }
        if rel <= tol {
            stats.converged = true;
            break;
        }
    }
    stats.final_relative_residual = rel;
    if !stats.converged {
        if let Some((b, grid)) = best {
            if b < rel || !rel.is_finite() {
                x = grid;
                stats.final_relative_residual = b;
            }
        }
    }
    stats.wall_time = start.elapsed();
    Ok((x, stats))
}

/// Exact `X = A⁻¹ F B⁻ᵀ`, the solution of `(A ⊗ B) vec(X) = vec(F)`, by dense
/// LU of each factor. Refuses problems with `N_A · N_B > 10⁴`.
pub fn dense_kron_solve(a: &SparseMatrix, b: &SparseMatrix, f: &DenseGrid) -> Result<DenseGrid> {
    let size = a.n_rows() * b.n_rows();
    if size > DENSE_KRON_LIMIT {
        return Err(Error::SizeGuard {
            size,
            limit: DENSE_KRON_LIMIT,
        });
    }
    dense_kron_solve_unguarded(a, b, f)
}

pub(crate) fn dense_kron_solve_unguarded(a: &SparseMatrix, b: &SparseMatrix, f: &DenseGrid) -> Result<DenseGrid> {
    let (na, nb) = (a.n_rows(), b.n_rows());
    if !a.is_square() || !b.is_square() {
        return Err(Error::InvalidMatrix("dense_kron_solve needs square factors".into()));
    }
    if f.shape() != (na, nb) {
        return Err(Error::dims("dense_kron_solve", na * nb, f.n_rows() * f.n_cols()));
    }
    let (lu_a, lu_b) = (dense_lu(a)?, dense_lu(b)?);
    // nalgebra is column-major: the row-major F of shape na×nb reads as Fᵀ.
    let ft = DMatrix::from_column_slice(nb, na, f.values());
    // Xᵀ = B⁻¹ Fᵀ A⁻ᵀ = B⁻¹ (A⁻¹ F)ᵀ.
    let y = lu_b.solve(&ft).ok_or_else(|| Error::Singular("B".into()))?;
    let xt = lu_a
        .solve(&y.transpose())
        .ok_or_else(|| Error::Singular("A".into()))?
        .transpose();
    DenseGrid::from_vec(na, nb, xt.as_slice().to_vec())
}
