use super::coarsening::CFSplitting;
use super::strength::StrengthGraph;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// How the interpolatory set `C_i` of a fine variable is formed from its
/// strong coarse neighbours and those of its strong fine neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterpolatorySet {
    /// `(C ∩ S(i)) ∪ ⋃_{j ∈ F ∩ S(i)} (C ∩ S(j))`.
    #[default]
    Union,
    /// `(C ∩ S(i)) ∩ ⋃_{j ∈ F ∩ S(i)} (C ∩ S(j))`, reducing to `C ∩ S(i)` when
    /// `i` has no strong fine neighbours.
    Intersection,
    /// `C ∩ S(i)` only.
    Direct,
}

/// Classical Ruge-Stüben interpolation `P` of size `n × n_coarse`.
///
/// Coarse rows inject. For a fine `i` with interpolatory set `C_i`,
///
/// ```text
/// w_ik = -(a_ik + Σ_{j ∈ F_i^s} a_ij a_jk / Σ_{m ∈ C_i} a_jm) / (a_ii + Σ_{n ∈ N_i^w} a_in)
/// ```
///
/// where `F_i^s` are the strong fine neighbours and `N_i^w` all remaining
/// neighbours outside `C_i`. A strong fine neighbour with
/// `Σ_{m ∈ C_i} a_jm = 0` is lumped to the diagonal like a weak one.
pub fn standard_interpolation(
    a: &SparseMatrix,
    split: &CFSplitting,
    strength: &StrengthGraph,
    set: InterpolatorySet,
) -> Result<SparseMatrix> {
    let n = a.n_rows();
    let mut triplets = Vec::new();
    // marker[k] == i means k ∈ C_i; position gives its slot in `num`.
    let mut marker = vec![usize::MAX; n];
    let mut slot = vec![0usize; n];
    let mut interp: Vec<usize> = Vec::new();
    let mut num: Vec<f64> = Vec::new();
    let mut strong_fine: Vec<usize> = Vec::new();
    let mut from_fine: Vec<usize> = Vec::new();

    for i in 0..n {
        if let Some(ci) = split.coarse_index(i) {
            triplets.push((i, ci, 1.0));
            continue;
        }
        let s_i = &strength.strong[i];
        if s_i.is_empty() {
            continue;
        }
        strong_fine.clear();
        strong_fine.extend(s_i.iter().copied().filter(|&j| !split.is_coarse(j)));
        let strong_coarse = s_i.iter().copied().filter(|&k| split.is_coarse(k));

        from_fine.clear();
        for &j in &strong_fine {
            from_fine.extend(strength.strong[j].iter().copied().filter(|&k| split.is_coarse(k)));
        }
        from_fine.sort_unstable();
        from_fine.dedup();

        interp.clear();
        match set {
            InterpolatorySet::Union => {
                interp.extend(strong_coarse);
                interp.extend_from_slice(&from_fine);
                interp.sort_unstable();
                interp.dedup();
            }
            InterpolatorySet::Direct => interp.extend(strong_coarse),
            InterpolatorySet::Intersection if strong_fine.is_empty() => interp.extend(strong_coarse),
            InterpolatorySet::Intersection => {
                interp.extend(strong_coarse.filter(|k| from_fine.binary_search(k).is_ok()))
            }
        }
        if interp.is_empty() {
            return Err(Error::EmptyInterpolation { index: i });
        }
        num.clear();
        num.resize(interp.len(), 0.0);
        for (p, &k) in interp.iter().enumerate() {
            marker[k] = i;
            slot[k] = p;
        }

        let (cols, vals) = a.row(i);
        let mut diag = 0.0;
        let mut weak = 0.0;
        for (&k, &v) in cols.iter().zip(vals) {
            if k == i {
                diag += v;
            } else if marker[k] == i {
                num[slot[k]] += v;
            } else if strong_fine.binary_search(&k).is_ok() {
                let (jc, jv) = a.row(k);
                let denom: f64 = jc
                    .iter()
                    .zip(jv)
                    .filter(|&(&m, _)| marker[m] == i)
                    .map(|(_, &x)| x)
                    .sum();
                if denom == 0.0 {
                    weak += v;
                    continue;
                }
                for (&m, &x) in jc.iter().zip(jv) {
                    if marker[m] == i {
                        num[slot[m]] += v * x / denom;
                    }
                }
            } else {
                weak += v;
            }
        }
        let denom = diag + weak;
        if denom == 0.0 {
            return Err(Error::ZeroDiagonal { row: i });
        }
        for (p, &k) in interp.iter().enumerate() {
            let w = -num[p] / denom;
            if w != 0.0 {
                let ck = split.coarse_index(k).expect("interpolatory variables are coarse");
                triplets.push((i, ck, w));
            }
        }
    }
    SparseMatrix::from_triplets(n, split.n_coarse(), triplets)
}

/// Jacobi relaxation of the fine rows of an interpolation operator.
///
/// Each pass replaces every fine row of `P` by the same row of
/// `(I - D⁻¹A) P`, then drops entries below `truncation · max_k |w_ik|` and
/// rescales the survivors so that the row sum is unchanged by the dropping.
pub fn jacobi_prolongation_smoothing(
    a: &SparseMatrix,
    p: &SparseMatrix,
    split: &CFSplitting,
    passes: usize,
    truncation: f64,
) -> Result<SparseMatrix> {
    if passes == 0 {
        return Ok(p.clone());
    }
    let diag = a.diagonal();
    if let Some(row) = diag.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDiagonal { row });
    }
    let n = a.n_rows();
    let nc = p.n_cols();
    let mut current = p.clone();
    let mut acc = vec![0.0; nc];
    let mut marker = vec![usize::MAX; nc];
    let mut touched: Vec<usize> = Vec::new();

    for _ in 0..passes {
        marker.fill(usize::MAX);
        let mut triplets = Vec::with_capacity(current.nnz() * 2);
        for i in 0..n {
            if split.is_coarse(i) {
                let (cols, vals) = current.row(i);
                triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (i, c, v)));
                continue;
            }
            touched.clear();
            let (ac, av) = a.row(i);
            for (&k, &aik) in ac.iter().zip(av) {
                if k == i {
                    continue;
                }
                let scale = -aik / diag[i];
                let (pc, pv) = current.row(k);
                for (&c, &w) in pc.iter().zip(pv) {
                    if marker[c] != i {
                        marker[c] = i;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += scale * w;
                }
            }
            touched.sort_unstable();
            let row_sum: f64 = touched.iter().map(|&c| acc[c]).sum();
            let max = touched.iter().fold(0.0f64, |m, &c| m.max(acc[c].abs()));
            let cut = truncation * max;
            let kept_sum: f64 = touched
                .iter()
                .filter(|&&c| acc[c].abs() >= cut)
                .map(|&c| acc[c])
                .sum();
            let dropped = touched.iter().any(|&c| acc[c].abs() < cut);
            let rescale = if dropped && kept_sum != 0.0 {
                row_sum / kept_sum
            } else {
                1.0
            };
            for &c in &touched {
                let w = acc[c];
                if w != 0.0 && w.abs() >= cut {
                    triplets.push((i, c, w * rescale));
                }
            }
        }
        current = SparseMatrix::from_triplets(n, nc, triplets)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amg::coarsening::standard_coarsening;
    use crate::amg::strength::strength_sets;

    fn path_laplacian(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let mut deg = 0.0;
            if i > 0 {
                t.push((i, i - 1, -1.0));
                deg += 1.0;
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                deg += 1.0;
            }
            t.push((i, i, deg));
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    fn build(a: &SparseMatrix) -> (CFSplitting, StrengthGraph, SparseMatrix) {
        let s = strength_sets(a, 0.25);
        let split = standard_coarsening(a, &s);
        let p = standard_interpolation(a, &split, &s, InterpolatorySet::Union).unwrap();
        (split, s, p)
    }

    #[test]
    fn tridiagonal_weights() {
        let a = SparseMatrix::tridiagonal(5, -1.0, 2.0, -1.0);
        let (_, _, p) = build(&a);
        assert_eq!(
            p.to_dense(),
            vec![
                vec![0.5, 0.0],
                vec![1.0, 0.0],
                vec![0.5, 0.5],
                vec![0.0, 1.0],
                vec![0.0, 0.5],
            ]
        );
    }

    #[test]
    fn path_laplacian_rows_sum_to_one() {
        let a = path_laplacian(5);
        let (_, _, p) = build(&a);
        for s in p.row_sums() {
            assert_eq!(s, 1.0);
        }
    }

    #[test]
    fn empty_interpolatory_set_is_reported() {
        // Fine variable 0 depends strongly on 1, which is fine and has no
        // strong coarse neighbour in the hand-made splitting.
        let a = SparseMatrix::tridiagonal(3, -1.0, 2.0, -1.0);
        let s = strength_sets(&a, 0.25);
        let split = CFSplitting::from_flags(vec![false, false, true]);
        let mut s_mod = s.clone();
        s_mod.strong[1] = vec![0];
        let e = standard_interpolation(&a, &split, &s_mod, InterpolatorySet::Union).unwrap_err();
        assert!(matches!(e, Error::EmptyInterpolation { index: 0 }));
    }

    #[test]
    fn strong_fine_neighbour_distributes_onto_common_coarse() {
        // Splitting C={0,3} on tridiag(6): fine 1 has strong fine neighbour 2.
        let a = SparseMatrix::tridiagonal(6, -1.0, 2.0, -1.0);
        let s = strength_sets(&a, 0.25);
        let split = CFSplitting::from_flags(vec![true, false, false, true, false, true]);
        let p = standard_interpolation(&a, &split, &s, InterpolatorySet::Union).unwrap();
        // Row 1: C_1 = {0} ∪ {3}; a_12 a_23 / a_23 = -1 goes to coarse 3.
        // w_10 = -(-1)/2 = 1/2, w_13 = -(0 + (-1)(-1)/(-1))/2 = 1/2.
        assert_eq!(p.get(1, 0), 0.5);
        assert_eq!(p.get(1, 1), 0.5);
        let i = standard_interpolation(&a, &split, &s, InterpolatorySet::Intersection);
        // C ∩ S(1) = {0}; strong fine 2 reaches only 3, so the intersection is empty.
        assert!(matches!(i, Err(Error::EmptyInterpolation { index: 1 })));
    }

    #[test]
    fn jacobi_zero_passes_is_identity() {
        let a = SparseMatrix::tridiagonal(5, -1.0, 2.0, -1.0);
        let (split, _, p) = build(&a);
        assert_eq!(jacobi_prolongation_smoothing(&a, &p, &split, 0, 0.1).unwrap(), p);
    }

    #[test]
    fn jacobi_matches_dense_oracle() {
        let a = SparseMatrix::tridiagonal(5, -1.0, 2.0, -1.0);
        let (split, _, p) = build(&a);
        let smoothed = jacobi_prolongation_smoothing(&a, &p, &split, 1, 0.0).unwrap();
        let ad = a.to_dense();
        let pd = p.to_dense();
        for i in 0..5 {
            for c in 0..2 {
                let expected = if split.is_coarse(i) {
                    pd[i][c]
                } else {
                    pd[i][c] - (0..5).map(|k| ad[i][k] * pd[k][c]).sum::<f64>() / ad[i][i]
                };
                assert!((smoothed.get(i, c) - expected).abs() < 1e-15, "({i},{c})");
            }
        }
        // In 1D the standard weights are already exact, so interior rows are unchanged.
        assert_eq!(smoothed.get(2, 0), 0.5);
        assert_eq!(smoothed.get(2, 1), 0.5);
    }

    #[test]
    fn repeated_jacobi_matches_dense_oracle() {
        let mesh = crate::mesh::generate_disk_mesh(3);
        let a = crate::fem::assemble(&mesh).unwrap().stiffness;
        let (split, _, p) = build(&a);
        let ad = a.to_dense();
        let n = ad.len();
        let mut expected = p.to_dense();
        for passes in 1..=3 {
            let prev = expected.clone();
            for i in (0..n).filter(|&i| !split.is_coarse(i)) {
                for c in 0..p.n_cols() {
                    let ap: f64 = (0..n).map(|k| ad[i][k] * prev[k][c]).sum();
                    expected[i][c] = prev[i][c] - ap / ad[i][i];
                }
            }
            let q = jacobi_prolongation_smoothing(&a, &p, &split, passes, 0.0).unwrap();
            for (i, row) in expected.iter().enumerate() {
                for (c, &e) in row.iter().enumerate() {
                    assert!((q.get(i, c) - e).abs() < 1e-14, "passes {passes} ({i},{c})");
                }
            }
        }
    }

    #[test]
    fn jacobi_second_pass_keeps_columns_seen_by_one_row() {
        let a = SparseMatrix::tridiagonal(2, -1.0, 2.0, -1.0);
        let split = CFSplitting::from_flags(vec![false, true]);
        let p = SparseMatrix::from_dense(&[vec![0.5], vec![1.0]]);
        let q = jacobi_prolongation_smoothing(&a, &p, &split, 2, 0.0).unwrap();
        assert_eq!(q.get(0, 0), 0.5);
    }

    #[test]
    fn jacobi_preserves_constants_on_singular_laplacian() {
        let a = path_laplacian(9);
        let (split, _, p) = build(&a);
        for trunc in [0.0, 0.3] {
            let q = jacobi_prolongation_smoothing(&a, &p, &split, 2, trunc).unwrap();
            for s in q.row_sums() {
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_rejects_zero_diagonal() {
        let a = SparseMatrix::from_dense(&[vec![0.0, -1.0], vec![-1.0, 2.0]]);
        let split = CFSplitting::from_flags(vec![false, true]);
        let p = SparseMatrix::from_dense(&[vec![1.0], vec![1.0]]);
        assert!(matches!(
            jacobi_prolongation_smoothing(&a, &p, &split, 1, 0.0),
            Err(Error::ZeroDiagonal { row: 0 })
        ));
    }
}
