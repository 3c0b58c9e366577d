//! Right-hand sides on `Ω × Ω` and the pivoted Cholesky factorisation used to
//! compress kernel loads.

use crate::error::{Error, Result};
use crate::fem::AssembledProblem;
use crate::mesh::Point;
use crate::sparse::DenseGrid;

/// Largest node count for which a kernel matrix is formed densely.
pub const DENSE_KERNEL_LIMIT: usize = 4000;

/// `k(x, y) = exp(-‖x - y‖² / ℓ)` on a fixed point set.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    pub points: Vec<Point>,
    pub corr_length: f64,
}

impl GaussianKernel {
    pub fn new(points: Vec<Point>, corr_length: f64) -> Result<Self> {
        if !(corr_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "correlation length must be positive, got {corr_length}"
            )));
        }
        Ok(Self { points, corr_length })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn eval(&self, x: Point, y: Point) -> f64 {
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        (-d2 / self.corr_length).exp()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        let x = self.points[i];
        self.points.iter().map(|&y| self.eval(x, y)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        vec![1.0; self.points.len()]
    }

    pub fn dense(&self) -> Result<DenseGrid> {
        let n = self.len();
        if n > DENSE_KERNEL_LIMIT {
            return Err(Error::SizeGuard {
                size: n,
                limit: DENSE_KERNEL_LIMIT,
            });
        }
        let values = (0..n).flat_map(|i| self.row(i)).collect();
        DenseGrid::from_vec(n, n, values)
    }
}

/// `K ≈ Σ_r L_r L_rᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor {
    pub columns: Vec<Vec<f64>>,
    pub pivots: Vec<usize>,
    /// Trace of the remainder `K - Σ_r L_r L_rᵀ`.
    pub trace_error: f64,
    pub initial_trace: f64,
    /// True when `max_rank` stopped the factorisation before the tolerance was met.
    pub rank_limited: bool,
}

impl LowRankFactor {
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn to_dense(&self, n: usize) -> DenseGrid {
        let mut out = DenseGrid::zeros(n, n);
        for c in &self.columns {
            out.axpy(1.0, &DenseGrid::outer(c, c));
        }
        out
    }
}

/// Greedy pivoted Cholesky of a symmetric positive semidefinite matrix given
/// by its diagonal and a row evaluator.
///
/// Each step pivots on the largest remaining diagonal entry (lowest index on
/// ties) and stops once the remaining trace is at most `tol_trace` times the
/// initial trace.
pub fn pivoted_cholesky(
    diag: &[f64],
    mut kernel_row: impl FnMut(usize) -> Vec<f64>,
    tol_trace: f64,
    max_rank: usize,
) -> Result<LowRankFactor> {
    if !(tol_trace >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trace tolerance must be non-negative, got {tol_trace}"
        )));
    }
    let n = diag.len();
    let mut d = diag.to_vec();
    let initial_trace: f64 = d.iter().sum();
    if let Some((index, &value)) = d.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NotPsd { index, value });
    }
    let floor = -1e-12 * initial_trace;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let mut is_pivot = vec![false; n];
    let mut trace_error = initial_trace;

    while trace_error > tol_trace * initial_trace && columns.len() < max_rank {
        let (p, &dp) = d
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if dp <= 0.0 {
            break;
        }
        let row = kernel_row(p);
        if row.len() != n {
            return Err(Error::dims("pivoted_cholesky row", n, row.len()));
        }
        let root = dp.sqrt();
        let mut col = row;
        for c in &columns {
            let cp = c[p];
            for (x, y) in col.iter_mut().zip(c) {
                *x -= cp * y;
            }
        }
        for (i, x) in col.iter_mut().enumerate() {
            *x = if is_pivot[i] { 0.0 } else { *x / root };
        }
        col[p] = root;
        is_pivot[p] = true;
        for i in 0..n {
            if is_pivot[i] {
                d[i] = 0.0;
                continue;
            }
            d[i] -= col[i] * col[i];
            if d[i] < floor {
                return Err(Error::NotPsd { index: i, value: d[i] });
            }
            d[i] = d[i].max(0.0);
        }
        columns.push(col);
        pivots.push(p);
        trace_error = d.iter().sum();
    }
    let rank_limited = trace_error > tol_trace * initial_trace;
    Ok(LowRankFactor {
        columns,
        pivots,
        trace_error,
        initial_trace,
        rank_limited,
    })
}

/// Load vector `M_load · 1`, the integral of every interior hat function.
pub fn constant_load_vector(problem: &AssembledProblem) -> Vec<f64> {
    problem
        .load_mass
        .spmv(&vec![1.0; problem.n_nodes()])
        .expect("load mass has one column per node")
}

/// `F = (M 1)(M 1)ᵀ` for `f(x, y) = 1`.
pub fn tensor_load_constant(problem: &AssembledProblem) -> DenseGrid {
    let m1 = constant_load_vector(problem);
    DenseGrid::outer(&m1, &m1)
}

/// `F = M K Mᵀ` with `K` the Gaussian kernel sampled at all mesh nodes, so
/// that the kernel is interpolated like any other load.
pub fn tensor_load_kernel(problem: &AssembledProblem, corr_length: f64) -> Result<DenseGrid> {
    let kernel = GaussianKernel::new(problem.node_coords.clone(), corr_length)?;
    let k = kernel.dense()?;
    Ok(k.sandwich(&problem.load_mass, &problem.load_mass))
}

/// A symmetric load on `Ω × Ω`, either as a dense grid or as `Σ_r a_r a_rᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorLoad {
    Dense(DenseGrid),
    Factored(Vec<Vec<f64>>),
}

impl TensorLoad {
    pub fn constant(problem: &AssembledProblem) -> Self {
        TensorLoad::Factored(vec![constant_load_vector(problem)])
    }

    /// `Σ_r (M L_r)(M L_r)ᵀ` for a factor of a kernel sampled at all nodes.
    pub fn from_kernel_factor(problem: &AssembledProblem, lr: &LowRankFactor) -> Result<Self> {
        let factors = lr
            .columns
            .iter()
            .map(|c| problem.load_mass.spmv(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorLoad::Factored(factors))
    }

    pub fn size(&self) -> Option<usize> {
        match self {
            TensorLoad::Dense(f) => Some(f.n_rows()),
            TensorLoad::Factored(fs) => fs.first().map(Vec::len),
        }
    }

    pub fn to_dense(&self, n: usize) -> DenseGrid {
        match self {
            TensorLoad::Dense(f) => f.clone(),
            TensorLoad::Factored(fs) => {
                let mut out = DenseGrid::zeros(n, n);
                for a in fs {
                    out.axpy(1.0, &DenseGrid::outer(a, a));
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::mesh::{generate_disk_mesh, generate_square_mesh};
    use nalgebra::DMatrix;

    #[test]
    fn constant_load_examples() {
        let p = assemble(&generate_square_mesh(1)).unwrap();
        let f = tensor_load_constant(&p);
        assert_eq!(f.shape(), (1, 1));
        assert!((f.get(0, 0) - 0.0625).abs() < 1e-15);
        let p = assemble(&generate_square_mesh(3)).unwrap();
        let f = tensor_load_constant(&p);
        assert_eq!(f, f.transpose());
        assert!(f.values().iter().all(|&v| v > 0.0));
        assert_eq!(TensorLoad::constant(&p).to_dense(p.n_interior()), f);
    }

    #[test]
    fn kernel_properties() {
        let p = assemble(&generate_square_mesh(2)).unwrap();
        let kernel = GaussianKernel::new(p.node_coords.clone(), 0.3).unwrap();
        let k = kernel.dense().unwrap();
        assert!((0..k.n_rows()).all(|i| k.get(i, i) == 1.0));
        assert_eq!(k, k.transpose());
        let sub: Vec<usize> = (0..20).collect();
        let m = DMatrix::from_fn(20, 20, |i, j| k.get(sub[i], sub[j]));
        assert!(m.symmetric_eigen().eigenvalues.min() > -1e-12);
        assert!(GaussianKernel::new(vec![], 0.0).is_err());
    }

    #[test]
    fn kernel_load_tends_to_constant_load() {
        let p = assemble(&generate_square_mesh(2)).unwrap();
        let f = tensor_load_kernel(&p, 1e12).unwrap();
        let c = tensor_load_constant(&p);
        let mut d = f.clone();
        d.axpy(-1.0, &c);
        assert!(d.frobenius_norm() <= 1e-10 * c.frobenius_norm());
    }

    #[test]
    fn cholesky_of_identity() {
        let id = |i: usize| {
            let mut r = vec![0.0; 3];
            r[i] = 1.0;
            r
        };
        let lr = pivoted_cholesky(&[1.0; 3], id, 0.0, 10).unwrap();
        assert_eq!(lr.rank(), 3);
        assert_eq!(lr.pivots, vec![0, 1, 2]);
        for (r, c) in lr.columns.iter().enumerate() {
            assert_eq!(c, &id(r));
        }
        assert_eq!(lr.trace_error, 0.0);
    }

    #[test]
    fn cholesky_of_rank_one() {
        let v = [1.0, -3.0, 2.0];
        let lr = pivoted_cholesky(&v.map(|x| x * x), |i| v.iter().map(|y| v[i] * y).collect(), 0.0, 10).unwrap();
        assert_eq!(lr.rank(), 1);
        assert_eq!(lr.pivots, vec![1]);
        // Positive root at the pivot fixes the sign to that of v[1].
        for (x, y) in lr.columns[0].iter().zip(&v) {
            assert!((x + y).abs() < 1e-15);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_and_flags_rank_limit() {
        let rows = [vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(
            pivoted_cholesky(&[1.0, 1.0], |i| rows[i].clone(), 0.0, 5),
            Err(Error::NotPsd { .. })
        ));
        let lr = pivoted_cholesky(&[1.0; 4], |i| (0..4).map(|k| f64::from(u8::from(k == i))).collect(), 1e-8, 2).unwrap();
        assert!(lr.rank_limited);
        assert_eq!(lr.rank(), 2);
    }

    #[test]
    fn gaussian_kernel_rank_on_disk() {
        let p = assemble(&generate_disk_mesh(4)).unwrap();
        let kernel = GaussianKernel::new(p.interior_coords(), 1.0).unwrap();
        let lr = pivoted_cholesky(&kernel.diagonal(), |i| kernel.row(i), 1e-8, 200).unwrap();
        assert!((10..=40).contains(&lr.rank()), "rank {}", lr.rank());
        assert!(lr.trace_error <= 1e-8 * lr.initial_trace);
        let k = kernel.dense().unwrap();
        let mut d = lr.to_dense(kernel.len());
        d.axpy(-1.0, &k);
        assert!(d.values().iter().all(|v| v.abs() <= 1e-6));
    }
}
