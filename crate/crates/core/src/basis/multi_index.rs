use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Per-dimension polynomial degrees of one basis function.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn degrees(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    /// Hyperbolic q-norm `(Σ α_i^q)^{1/q}` with `0^q = 0`.
    pub fn q_norm(&self, q: f64) -> f64 {
        let s: f64 = self.0.iter().filter(|&&a| a > 0).map(|&a| (a as f64).powf(q)).sum();
        if s == 0.0 {
            0.0
        } else {
            s.powf(1.0 / q)
        }
    }
}

/// Canonical ordering: total degree first, then descending lexicographic
/// order so that `(1, 0)` precedes `(0, 1)`.
pub fn canonical_cmp(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    a.total_degree()
        .cmp(&b.total_degree())
        .then_with(|| b.0.cmp(&a.0))
}

/// Retained multi-indices of a truncated basis, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    dim: usize,
    indices: Vec<MultiIndex>,
}

impl MultiIndexSet {
    /// Wraps an explicit list, validating dimensions and sorting canonically.
    pub fn from_indices(dim: usize, mut indices: Vec<MultiIndex>) -> Result<Self> {
        if let Some(bad) = indices.iter().find(|a| a.dim() != dim) {
            return Err(Error::DimensionMismatch {
                what: "multi-index",
                expected: dim,
                found: bad.dim(),
            });
        }
        indices.sort_by(canonical_cmp);
        indices.dedup();
        Ok(Self { dim, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn get(&self, k: usize) -> &MultiIndex {
        &self.indices[k]
    }

    /// Largest degree appearing in dimension `dim`.
    pub fn max_degree(&self, dim: usize) -> usize {
        self.indices.iter().map(|a| a.0[dim]).max().unwrap_or(0)
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.indices.binary_search_by(|a| canonical_cmp(a, alpha)).is_ok()
    }
}

impl<'a> IntoIterator for &'a MultiIndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

/// Every multi-index with `‖α‖_q ≤ p` (plus a `1e-12·p` tie tolerance).
pub fn gen_multi_indices(dim: usize, order: usize, q: f64) -> Result<MultiIndexSet> {
    if dim == 0 {
        return Err(Error::InvalidInput("multi-index dimension must be at least 1".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidInput(format!("hyperbolic exponent must lie in (0, 1], got {q}")));
    }
    let limit = order as f64 * (1.0 + 1e-12);
    // Pruning bound on the partial sum of α_i^q; the exact filter runs at the leaves.
    let budget = limit.powf(q) * (1.0 + 1e-9);

    let mut out = Vec::new();
    let mut current = vec![0usize; dim];
    enumerate(0, 0.0, order, q, budget, limit, &mut current, &mut out);
    MultiIndexSet::from_indices(dim, out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    pos: usize,
    partial: f64,
    order: usize,
    q: f64,
    budget: f64,
    limit: f64,
    current: &mut Vec<usize>,
    out: &mut Vec<MultiIndex>,
) {
    if pos == current.len() {
        let alpha = MultiIndex(current.clone());
        if alpha.q_norm(q) <= limit {
            out.push(alpha);
        }
        return;
    }
    for a in 0..=order {
        let term = if a == 0 { 0.0 } else { (a as f64).powf(q) };
        if partial + term > budget {
            break;
        }
        current[pos] = a;
        enumerate(pos + 1, partial + term, order, q, budget, limit, current, out);
    }
    current[pos] = 0;
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn as_vecs(set: &MultiIndexSet) -> Vec<Vec<usize>> {
        set.iter().map(|a| a.0.clone()).collect()
    }

    #[test]
    fn total_degree_two_dims() {
        let set = gen_multi_indices(2, 2, 1.0).unwrap();
        assert_eq!(
            as_vecs(&set),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn hyperbolic_drops_interaction() {
        let set = gen_multi_indices(2, 2, 0.5).unwrap();
        assert_eq!(set.len(), 5);
        assert!(!set.contains(&MultiIndex(vec![1, 1])));
    }

    #[test]
    fn constant_only() {
        let set = gen_multi_indices(1, 0, 1.0).unwrap();
        assert_eq!(as_vecs(&set), vec![vec![0]]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gen_multi_indices(0, 2, 1.0).is_err());
        assert!(gen_multi_indices(2, 2, 0.0).is_err());
        assert!(gen_multi_indices(2, 2, 1.5).is_err());
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(14, 4), 1001);
        assert_eq!(binomial(5, 0), 1);
    }
}
