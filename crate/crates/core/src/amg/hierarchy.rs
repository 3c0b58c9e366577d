use std::fs;
use std::path::Path;

use super::{
    jacobi_prolongation_smoothing, second_pass, standard_coarsening, standard_interpolation, strength_sets,
    CFSplitting, CoarseningParams,
};
use crate::error::{Error, Result};
use crate::mm::write_matrix_market;
use crate::sparse::{triple_product, SparseMatrix};

/// Coarsening stops when a level keeps more than this fraction of variables.
const STAGNATION_RATIO: f64 = 0.9;

/// Galerkin hierarchy `A_0, …, A_L` with prolongations `P_j^{j+1}`.
///
/// Levels are numbered from the coarsest (`0`) to the finest (`L`), so
/// `matrix(finest_level())` is the input matrix and
/// `prolongation(j)` maps level `j` to level `j + 1`.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    matrices: Vec<SparseMatrix>,
    prolongations: Vec<SparseMatrix>,
    restrictions: Vec<SparseMatrix>,
    splittings: Vec<CFSplitting>,
    pub warnings: Vec<String>,
}

impl Hierarchy {
    /// Assembles a hierarchy from explicit pieces (coarsest first); the coarse
    /// matrices are recomputed by Galerkin products.
    pub fn from_prolongations(fine: SparseMatrix, prolongations_coarse_first: Vec<SparseMatrix>) -> Result<Self> {
        let mut matrices = vec![fine];
        for p in prolongations_coarse_first.iter().rev() {
            let a = matrices.last().unwrap();
            if p.n_rows() != a.n_rows() {
                return Err(Error::dims("Hierarchy::from_prolongations", a.n_rows(), p.n_rows()));
            }
            let coarse = triple_product(&p.transpose(), a, p)?;
            matrices.push(coarse);
        }
        matrices.reverse();
        let restrictions = prolongations_coarse_first.iter().map(SparseMatrix::transpose).collect();
        Ok(Self {
            matrices,
            prolongations: prolongations_coarse_first,
            restrictions,
            splittings: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn n_levels(&self) -> usize {
        self.matrices.len()
    }

    pub fn finest_level(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn matrix(&self, level: usize) -> &SparseMatrix {
        &self.matrices[level]
    }

    pub fn fine_matrix(&self) -> &SparseMatrix {
        self.matrices.last().unwrap()
    }

    /// `P_level^{level+1}`.
    pub fn prolongation(&self, level: usize) -> &SparseMatrix {
        &self.prolongations[level]
    }

    /// `(P_level^{level+1})ᵀ`.
    pub fn restriction(&self, level: usize) -> &SparseMatrix {
        &self.restrictions[level]
    }

    /// Splitting of level `level + 1` whose coarse variables form level `level`.
    /// Empty for hierarchies assembled from explicit prolongations.
    pub fn splitting(&self, level: usize) -> Option<&CFSplitting> {
        self.splittings.get(level)
    }

    /// `N_j` indexed by level, coarsest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.matrices.iter().map(SparseMatrix::n_rows).collect()
    }

    /// Level sizes finest first.
    pub fn sizes(&self) -> Vec<usize> {
        self.level_sizes().into_iter().rev().collect()
    }

    pub fn size(&self, level: usize) -> usize {
        self.matrices[level].n_rows()
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.n_levels() {
            return Err(Error::LevelOutOfRange {
                level,
                levels: self.n_levels(),
            });
        }
        Ok(())
    }

    /// Writes `level_<j>_A.mtx` for every level, `level_<j>_P.mtx` for every
    /// prolongation `P_j^{j+1}` and a `manifest.txt` summary.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (j, a) in self.matrices.iter().enumerate() {
            write_matrix_market(a, dir.join(format!("level_{j}_A.mtx")))?;
        }
        for (j, p) in self.prolongations.iter().enumerate() {
            write_matrix_market(p, dir.join(format!("level_{j}_P.mtx")))?;
        }
        let path = dir.join("manifest.txt");
        fs::write(&path, self.manifest()).map_err(|e| Error::io(&path, e))
    }

    pub fn manifest(&self) -> String {
        let join = |v: Vec<usize>| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let nnz: Vec<usize> = self.matrices.iter().rev().map(SparseMatrix::nnz).collect();
        let mut s = String::new();
        s.push_str(&format!("levels {}\n", self.n_levels()));
        s.push_str(&format!("sizes {}\n", join(self.sizes())));
        s.push_str(&format!("nnz {}\n", join(nnz)));
        s.push_str(&format!("operator_complexity {:.6}\n", operator_complexity(self)));
        for w in &self.warnings {
            s.push_str(&format!("warning {w}\n"));
        }
        s
    }
}

pub fn build_hierarchy(fine: &SparseMatrix, params: &CoarseningParams) -> Result<Hierarchy> {
    params.validate()?;
    if !fine.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "hierarchy needs a square matrix, got {}x{}",
            fine.n_rows(),
            fine.n_cols()
        )));
    }
    let mut warnings = Vec::new();
    let positive = fine.triplets().filter(|&(i, j, v)| i != j && v > 0.0).count();
    if positive > 0 {
        warnings.push(format!("fine matrix has {positive} positive off-diagonal entries"));
    }

    // Built finest first, reversed at the end.
    let mut matrices = vec![fine.clone()];
    let mut prolongations = Vec::new();
    let mut splittings = Vec::new();
    while matrices.len() < params.max_levels {
        let a = matrices.last().unwrap();
        let n = a.n_rows();
        if n <= params.min_coarse_size {
            break;
        }
        let strength = strength_sets(a, params.eps_str);
        let mut split = standard_coarsening(a, &strength);
        if params.second_pass {
            split = second_pass(&strength, &split);
        }
        let nc = split.n_coarse();
        if nc == 0 || nc as f64 > STAGNATION_RATIO * n as f64 {
            break;
        }
        let p = standard_interpolation(a, &split, &strength, params.interpolatory_set)?;
        let p = jacobi_prolongation_smoothing(a, &p, &split, params.jacobi_passes, params.truncation)?;
        let coarse = triple_product(&p.transpose(), a, &p)?;
        matrices.push(coarse);
        prolongations.push(p);
        splittings.push(split);
    }
    matrices.reverse();
    prolongations.reverse();
    splittings.reverse();
    let restrictions = prolongations.iter().map(SparseMatrix::transpose).collect();
    Ok(Hierarchy {
        matrices,
        prolongations,
        restrictions,
        splittings,
        warnings,
    })
}

/// `Σ_j nnz(A_j) / nnz(A_L)`.
pub fn operator_complexity(h: &Hierarchy) -> f64 {
    let total: usize = h.matrices.iter().map(SparseMatrix::nnz).sum();
    total as f64 / h.fine_matrix().nnz() as f64
}

/// `P_from^to = P_{to-1}^{to} ⋯ P_from^{from+1}`; the identity when `from == to`.
pub fn compose_prolongation(h: &Hierarchy, from: usize, to: usize) -> Result<SparseMatrix> {
    h.check_level(from)?;
    h.check_level(to)?;
    if from > to {
        return Err(Error::InvalidParameter(format!(
            "cannot prolongate from level {from} down to level {to}"
        )));
    }
    let mut p = SparseMatrix::identity(h.size(from));
    for j in from..to {
        p = h.prolongation(j).matmul(&p)?;
    }
    Ok(p)
}
