//! Sparse feature vectors with a cached squared norm.

use crate::error::{Error, Result};

/// A sparse vector stored as strictly ascending `(index, value)` pairs.
///
/// The squared Euclidean norm is computed once at construction so that
/// squared distances reduce to a single merged dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    indices: Vec<u32>,
    values: Vec<f64>,
    sq_norm: f64,
}

impl SparseVec {
    /// Builds a vector from ascending index/value pairs.
    ///
    /// Explicit zeros are kept; they do not change any inner product.
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidVector(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidVector(
                "indices must be strictly ascending".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidVector(format!("non-finite entry {v}")));
        }
        Ok(Self::from_sorted_unchecked(indices, values))
    }

    /// Builds a vector from pairs in any order; duplicate indices are an error.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let (indices, values) = pairs.into_iter().unzip();
        Self::new(indices, values)
    }

    /// Dense input, 1-based indices, zeros skipped.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32 + 1, *v))
            .unzip();
        Self::from_sorted_unchecked(indices, values)
    }

    /// Standard basis vector e_index (1-based).
    pub fn basis(index: u32) -> Self {
        Self::from_sorted_unchecked(vec![index], vec![1.0])
    }

    pub fn zeros() -> Self {
        Self::from_sorted_unchecked(Vec::new(), Vec::new())
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<u32>, values: Vec<f64>) -> Self {
        let mut v = Self {
            indices,
            values,
            sq_norm: 0.0,
        };
        v.sq_norm = v.dot(&v);
        v
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn sq_norm(&self) -> f64 {
        self.sq_norm
    }

    /// Largest stored index, 0 for the empty vector.
    pub fn max_index(&self) -> u32 {
        self.indices.last().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Inner product by merged traversal of the two index lists.
    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (ai, av) = (&self.indices, &self.values);
        let (bi, bv) = (&other.indices, &other.values);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < ai.len() && j < bi.len() {
            match ai[i].cmp(&bi[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += av[i] * bv[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// ‖self − other‖², clamped at zero.
    pub fn sq_distance(&self, other: &SparseVec) -> f64 {
        (self.sq_norm + other.sq_norm - 2.0 * self.dot(other)).max(0.0)
    }

    /// Dense copy with `dim` slots; entry `k` holds index `k + 1`.
    /// Indices beyond `dim` are dropped.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            if let Some(slot) = out.get_mut(i as usize - 1) {
                *slot = v;
            }
        }
        out
    }
}
