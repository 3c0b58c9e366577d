//! The multilevel frame system over all levels of one hierarchy.
//!
//! With `𝒫 = [P_0^L, …, P_L^L]` the frame matrix is `𝒫ᵀ A_L 𝒫`, whose block
//! `(j₁, j₂)` is `(P_{j₁}^L)ᵀ A_L P_{j₂}^L`. It is singular but consistent, and
//! `𝒫 u` solves the fine system whenever `u` solves the frame system.

use crate::amg::{compose_prolongation, Hierarchy};
use crate::error::{Error, Result};
use crate::krylov::pcg;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone)]
pub struct FrameSystem {
    /// `blocks[j1][j2]`, levels numbered from the coarsest.
    pub blocks: Vec<Vec<SparseMatrix>>,
    pub level_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameVector {
    pub parts: Vec<Vec<f64>>,
}

impl FrameVector {
    pub fn zeros(level_sizes: &[usize]) -> Self {
        Self {
            parts: level_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn flatten(&self) -> Vec<f64> {
        self.parts.concat()
    }

    fn unflatten(flat: &[f64], level_sizes: &[usize]) -> Self {
        let mut parts = Vec::with_capacity(level_sizes.len());
        let mut at = 0;
        for &n in level_sizes {
            parts.push(flat[at..at + n].to_vec());
            at += n;
        }
        Self { parts }
    }

    pub fn dot(&self, other: &FrameVector) -> f64 {
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| crate::krylov::dot(a, b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Blocks on and above the diagonal are `(P_{j₁}^{j₂})ᵀ A_{j₂}`, which equals
/// `(P_{j₁}^L)ᵀ A_L P_{j₂}^L` by the Galerkin relation; the diagonal blocks are
/// the hierarchy matrices and the lower blocks are transposes.
pub fn build_frame(h: &Hierarchy) -> Result<FrameSystem> {
    let levels = h.n_levels();
    let mut blocks: Vec<Vec<SparseMatrix>> = (0..levels)
        .map(|_| vec![SparseMatrix::zeros(0, 0); levels])
        .collect();
    for j2 in 0..levels {
        blocks[j2][j2] = h.matrix(j2).clone();
        for j1 in 0..j2 {
            let p = compose_prolongation(h, j1, j2)?;
            let upper = p.transpose().matmul(h.matrix(j2))?;
            blocks[j2][j1] = upper.transpose();
            blocks[j1][j2] = upper;
        }
    }
    Ok(FrameSystem {
        blocks,
        level_sizes: h.level_sizes(),
    })
}

impl FrameSystem {
    pub fn n_levels(&self) -> usize {
        self.level_sizes.len()
    }

    pub fn total_size(&self) -> usize {
        self.level_sizes.iter().sum()
    }

    fn check(&self, u: &FrameVector) -> Result<()> {
        if u.parts.len() != self.n_levels() {
            return Err(Error::dims("frame vector levels", self.n_levels(), u.parts.len()));
        }
        for (part, &n) in u.parts.iter().zip(&self.level_sizes) {
            if part.len() != n {
                return Err(Error::dims("frame vector part", n, part.len()));
            }
        }
        Ok(())
    }

    pub fn apply(&self, u: &FrameVector) -> Result<FrameVector> {
        self.check(u)?;
        let mut out = FrameVector::zeros(&self.level_sizes);
        for (j1, row) in self.blocks.iter().enumerate() {
            for (block, part) in row.iter().zip(&u.parts) {
                block.spmv_add(1.0, part, &mut out.parts[j1]);
            }
        }
        Ok(out)
    }

    pub fn diagonal(&self) -> FrameVector {
        FrameVector {
            parts: (0..self.n_levels()).map(|j| self.blocks[j][j].diagonal()).collect(),
        }
    }
}

/// `parts[j] = (P_j^L)ᵀ f`, restricted one level at a time.
pub fn frame_rhs(h: &Hierarchy, f: &[f64]) -> Result<FrameVector> {
    let top = h.finest_level();
    if f.len() != h.size(top) {
        return Err(Error::dims("frame_rhs", h.size(top), f.len()));
    }
    let mut parts = vec![Vec::new(); h.n_levels()];
    parts[top] = f.to_vec();
    for j in (0..top).rev() {
        parts[j] = h.restriction(j).spmv(&parts[j + 1])?;
    }
    Ok(FrameVector { parts })
}

/// `𝒫 u = Σ_j P_j^L u_j`, accumulated from the coarsest level upwards.
pub fn project_to_fine(h: &Hierarchy, u: &FrameVector) -> Result<Vec<f64>> {
    if u.parts.len() != h.n_levels() {
        return Err(Error::dims("project_to_fine levels", h.n_levels(), u.parts.len()));
    }
    for (j, part) in u.parts.iter().enumerate() {
        if part.len() != h.size(j) {
            return Err(Error::dims("project_to_fine part", h.size(j), part.len()));
        }
    }
    let mut acc = u.parts[0].clone();
    for j in 1..h.n_levels() {
        let mut next = u.parts[j].clone();
        h.prolongation(j - 1).spmv_add(1.0, &acc, &mut next);
        acc = next;
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct FrameSolveOutcome {
    pub solution: FrameVector,
    pub iterations: usize,
    /// Frame residual norm relative to the frame right-hand side.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned CG on the frame system.
pub fn frame_solve(fs: &FrameSystem, rhs: &FrameVector, tol: f64, max_it: usize) -> Result<FrameSolveOutcome> {
    fs.check(rhs)?;
    let inv_diag: Vec<f64> = fs
        .diagonal()
        .flatten()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let sizes = &fs.level_sizes;
    let apply = |x: &[f64], y: &mut [f64]| {
        let out = fs
            .apply(&FrameVector::unflatten(x, sizes))
            .expect("sizes fixed by construction");
        y.copy_from_slice(&out.flatten());
    };
    let precond = |r: &[f64], z: &mut [f64]| {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&inv_diag) {
            *zi = ri * di;
        }
    };
    let out = pcg(apply, precond, &rhs.flatten(), tol, max_it);
    Ok(FrameSolveOutcome {
        solution: FrameVector::unflatten(&out.x, sizes),
        iterations: out.iterations,
        relative_residual: out.relative_residual,
        converged: out.converged,
    })
}
