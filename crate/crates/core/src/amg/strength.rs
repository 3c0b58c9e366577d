use crate::sparse::SparseMatrix;

/// Strong negative couplings of every variable and their transpose.
///
/// `strong[i]` holds `S(i) = { k ≠ i : -a_ik ≥ ε · max_{l≠i} |a_il| }` and
/// `transposed[i]` holds `Sᵀ(i) = { k : i ∈ S(k) }`, both sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrengthGraph {
    pub strong: Vec<Vec<usize>>,
    pub transposed: Vec<Vec<usize>>,
}

impl StrengthGraph {
    pub fn len(&self) -> usize {
        self.strong.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strong.is_empty()
    }

    pub fn is_strong(&self, i: usize, k: usize) -> bool {
        self.strong[i].binary_search(&k).is_ok()
    }
}

/// The diagonal is excluded from the row maximum.
pub fn strength_sets(a: &SparseMatrix, eps_str: f64) -> StrengthGraph {
    let n = a.n_rows();
    let mut strong = vec![Vec::new(); n];
    for (i, s) in strong.iter_mut().enumerate() {
        let (cols, vals) = a.row(i);
        let max_off = cols
            .iter()
            .zip(vals)
            .filter(|&(&k, _)| k != i)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if max_off == 0.0 {
            continue;
        }
        let threshold = eps_str * max_off;
        s.extend(
            cols.iter()
                .zip(vals)
                .filter(|&(&k, &v)| k != i && v != 0.0 && -v >= threshold)
                .map(|(&k, _)| k),
        );
    }
    let mut transposed = vec![Vec::new(); n];
    for (i, s) in strong.iter().enumerate() {
        for &k in s {
            transposed[k].push(i);
        }
    }
    StrengthGraph { strong, transposed }
}
