//! Linear (P1) finite elements for `-Δu = f` with homogeneous Dirichlet data.
//!
//! Boundary conditions are imposed by elimination: rows and columns of
//! boundary nodes are removed and only interior unknowns remain.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, AREA_FLOOR};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone)]
pub struct AssembledProblem {
    /// Stiffness matrix on interior unknowns.
    pub stiffness: SparseMatrix,
    /// Mass matrix on interior unknowns.
    pub mass: SparseMatrix,
    /// Mass matrix rows of interior nodes against all mesh nodes. Loads are
    /// formed with this matrix so that boundary nodal values of `f` count.
    pub load_mass: SparseMatrix,
    pub interior_to_node: Vec<usize>,
    /// Coordinates of all mesh nodes.
    pub node_coords: Vec<Point>,
    pub level: Option<u32>,
}

impl AssembledProblem {
    pub fn n_interior(&self) -> usize {
        self.interior_to_node.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn interior_coords(&self) -> Vec<Point> {
        self.interior_to_node
            .iter()
            .map(|&n| self.node_coords[n])
            .collect()
    }

    /// Positive off-diagonal stiffness entries `(row, col, value)`: places
    /// where the discrete operator is not an M-matrix.
    pub fn m_matrix_violations(&self) -> Vec<(usize, usize, f64)> {
        self.stiffness
            .triplets()
            .filter(|&(i, j, v)| i != j && v > 0.0)
            .collect()
    }
}

/// Element stiffness and mass for one triangle, or an error if it is degenerate.
fn element_matrices(p: [Point; 3], index: usize, floor: f64) -> Result<([[f64; 3]; 3], [[f64; 3]; 3])> {
    let area = crate::mesh::signed_area(p[0], p[1], p[2]);
    if area.abs() <= floor {
        return Err(Error::DegenerateTriangle { index, area });
    }
    // Gradients of the barycentric coordinates are (b_k, c_k) / (2 area).
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    let a = area.abs();
    for r in 0..3 {
        for s in 0..3 {
            k[r][s] = (b[r] * b[s] + c[r] * c[s]) / (4.0 * a);
            m[r][s] = if r == s { a / 6.0 } else { a / 12.0 };
        }
    }
    Ok((k, m))
}

/// Stiffness and mass matrices on all mesh nodes, before boundary elimination.
pub fn assemble_full(mesh: &Mesh) -> Result<(SparseMatrix, SparseMatrix)> {
    let n = mesh.n_nodes();
    let floor = AREA_FLOOR * bbox_area(&mesh.nodes);
    let mut kt = Vec::with_capacity(9 * mesh.n_triangles());
    let mut mt = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let (k, m) = element_matrices(p, t, floor)?;
        for r in 0..3 {
            for s in 0..3 {
                kt.push((tri[r], tri[s], k[r][s]));
                mt.push((tri[r], tri[s], m[r][s]));
            }
        }
    }
    Ok((
        SparseMatrix::from_triplets(n, n, kt)?,
        SparseMatrix::from_triplets(n, n, mt)?,
    ))
}

fn bbox_area(nodes: &[Point]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in nodes {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (hi[0] - lo[0]) * (hi[1] - lo[1])
}

pub fn assemble(mesh: &Mesh) -> Result<AssembledProblem> {
    let (k, m) = assemble_full(mesh)?;
    let n = mesh.n_nodes();
    let mut node_to_interior = vec![usize::MAX; n];
    let mut interior_to_node = Vec::new();
    for node in 0..n {
        if !mesh.is_boundary(node) {
            node_to_interior[node] = interior_to_node.len();
            interior_to_node.push(node);
        }
    }
    let ni = interior_to_node.len();
    let restrict = |a: &SparseMatrix, keep_cols: bool| {
        let triplets = a.triplets().filter_map(|(i, j, v)| {
            let r = node_to_interior[i];
            if r == usize::MAX {
                return None;
            }
            if keep_cols {
                return Some((r, j, v));
            }
            let c = node_to_interior[j];
            (c != usize::MAX).then_some((r, c, v))
        });
        SparseMatrix::from_triplets(ni, if keep_cols { n } else { ni }, triplets)
    };
    Ok(AssembledProblem {
        stiffness: restrict(&k, false)?,
        mass: restrict(&m, false)?,
        load_mass: restrict(&m, true)?,
        interior_to_node,
        node_coords: mesh.nodes.clone(),
        level: None,
    })
}

/// Load vector `∫ g_h φ_i` for the nodal interpolant `g_h` of `g`.
///
/// `g` holds one sample per mesh node (boundary nodes included); the result
/// has one entry per interior unknown.
pub fn load_vector(problem: &AssembledProblem, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != problem.n_nodes() {
        return Err(Error::dims("load_vector", problem.n_nodes(), g.len()));
    }
    problem.load_mass.spmv(g)
}

/// Samples `f` at every mesh node.
pub fn sample_nodes(problem: &AssembledProblem, f: impl Fn(Point) -> f64) -> Vec<f64> {
    problem.node_coords.iter().map(|&p| f(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk_mesh, generate_square_mesh};
    use nalgebra::{DMatrix, DVector};

    fn dense(a: &SparseMatrix) -> DMatrix<f64> {
        let d = a.to_dense();
        DMatrix::from_fn(a.n_rows(), a.n_cols(), |i, j| d[i][j])
    }

    #[test]
    fn single_interior_node_stiffness() {
        let p = assemble(&generate_square_mesh(1)).unwrap();
        assert_eq!(p.n_interior(), 1);
        assert!((p.stiffness.get(0, 0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn full_stiffness_annihilates_constants() {
        for mesh in [generate_square_mesh(3), generate_disk_mesh(3)] {
            let (k, _) = assemble_full(&mesh).unwrap();
            let y = k.spmv(&vec![1.0; mesh.n_nodes()]).unwrap();
            assert!(y.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn mass_total_bounded_by_area() {
        for mesh in [generate_square_mesh(3), generate_disk_mesh(4)] {
            let p = assemble(&mesh).unwrap();
            let total: f64 = p.mass.values().iter().sum();
            assert!(total > 0.0 && total <= mesh.total_area() + 1e-14);
            let (_, m) = assemble_full(&mesh).unwrap();
            let full: f64 = m.values().iter().sum();
            assert!((full - mesh.total_area()).abs() < 1e-13);
        }
    }

    #[test]
    fn stiffness_symmetric_with_positive_diagonal() {
        let p = assemble(&generate_disk_mesh(4)).unwrap();
        assert!(p.stiffness.symmetry_defect() < 1e-12);
        assert!(p.stiffness.diagonal().iter().all(|&d| d > 0.0));
        assert!(p.m_matrix_violations().is_empty());
    }

    #[test]
    fn stiffness_positive_definite() {
        let p = assemble(&generate_square_mesh(2)).unwrap();
        let eig = dense(&p.stiffness).symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn load_vector_examples() {
        let p = assemble(&generate_square_mesh(1)).unwrap();
        assert_eq!(load_vector(&p, &[0.0; 9]).unwrap(), vec![0.0]);
        let f = load_vector(&p, &[1.0; 9]).unwrap();
        assert!((f[0] - 0.25).abs() < 1e-15);
        assert!(load_vector(&p, &[1.0]).is_err());
    }

    #[test]
    fn load_vector_matches_vertex_quadrature() {
        // Σ_T |T|/3 Σ_{v∈T} g(v) φ_i(v) = |supp|/3 · g(x_i) per element; for smooth g
        // the consistent load agrees to O(h²) relative per entry.
        let g = |p: Point| (p[0] + 0.5 * p[1]).exp();
        for level in [3u32, 4, 5] {
            let mesh = generate_square_mesh(level);
            let p = assemble(&mesh).unwrap();
            let f = load_vector(&p, &sample_nodes(&p, g)).unwrap();
            let mut lumped = vec![0.0; p.n_interior()];
            let mut node_to_int = vec![usize::MAX; mesh.n_nodes()];
            for (k, &n) in p.interior_to_node.iter().enumerate() {
                node_to_int[n] = k;
            }
            for t in 0..mesh.n_triangles() {
                let a = mesh.triangle_area(t);
                for &v in &mesh.triangles[t] {
                    if node_to_int[v] != usize::MAX {
                        lumped[node_to_int[v]] += a / 3.0 * g(mesh.nodes[v]);
                    }
                }
            }
            let h2 = 0.25f64.powi(level as i32);
            for (x, y) in f.iter().zip(&lumped) {
                assert!((x - y).abs() <= 4.0 * h2 * y.abs().max(1e-300) + 1e-15);
            }
        }
    }

    #[test]
    fn poisson_converges_quadratically() {
        // -Δu = 1 on the unit square; compare at the J=3 nodes against J=6.
        let solve = |level: u32| {
            let mesh = generate_square_mesh(level);
            let p = assemble(&mesh).unwrap();
            let f = load_vector(&p, &vec![1.0; mesh.n_nodes()]).unwrap();
            let u = dense(&p.stiffness).lu().solve(&DVector::from_vec(f)).unwrap();
            let n = 1usize << level;
            let mut grid = vec![vec![0.0; n + 1]; n + 1];
            for (k, &node) in p.interior_to_node.iter().enumerate() {
                grid[node / (n + 1)][node % (n + 1)] = u[k];
            }
            grid
        };
        let fine = solve(6);
        let err = |level: u32| {
            let g = solve(level);
            let stride = 1usize << (6 - level);
            let n = 1usize << level;
            let mut e = 0.0f64;
            for j in 0..=n {
                for i in 0..=n {
                    e = e.max((g[j][i] - fine[j * stride][i * stride]).abs());
                }
            }
            e
        };
        let (e3, e4, e5) = (err(3), err(4), err(5));
        assert!(e3 / e4 >= 3.0, "{e3} {e4}");
        assert!(e4 / e5 >= 3.0, "{e4} {e5}");
    }
}
