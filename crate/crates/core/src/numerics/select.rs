//! Random row selection for the partial transform.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::rng::{stream_rng, StreamKind};

/// A sorted set of `m` distinct transform-row indices in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionSet {
    indices: Vec<usize>,
    ambient: usize,
}

impl SelectionSet {
    /// Builds a selection from pre-sorted, distinct indices.
    pub fn from_sorted(indices: Vec<usize>, ambient: usize) -> Result<Self> {
        if indices.is_empty() || indices.len() > ambient {
            return Err(Error::InvalidParams(format!(
                "selection size {} out of range for ambient {ambient}",
                indices.len()
            )));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParams(
                    "selection indices must be strictly increasing".into(),
                ));
            }
        }
        if *indices.last().unwrap() >= ambient {
            return Err(Error::InvalidParams(format!(
                "selection index {} >= ambient {ambient}",
                indices.last().unwrap()
            )));
        }
        Ok(Self { indices, ambient })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }
}

/// Draws a uniform random `m`-subset of `[0, n)`, sorted ascending.
///
/// Deterministic in `seed`; uses the row-selection stream.
pub fn select_rows(seed: u64, m: usize, n: usize) -> Result<SelectionSet> {
    select_rows_from(seed, m, 0, n)
}

/// Uniform random `m`-subset of rows for a codeword's transform.
///
/// Excludes row 0: the lowest transform coefficient of a block-sparse
/// vector is the same for every message (each section contributes one
/// amplitude to the constant basis function), so transmitting it carries
/// no information and inflates the codeword power by `l/m` whenever
/// selected. When `m == n` the full selection is unavoidable and row 0 is
/// included.
pub fn select_coefficient_rows(seed: u64, m: usize, n: usize) -> Result<SelectionSet> {
    if m == n {
        return select_rows(seed, m, n);
    }
    select_rows_from(seed, m, 1, n)
}

fn select_rows_from(seed: u64, m: usize, lo: usize, n: usize) -> Result<SelectionSet> {
    if m == 0 || m > n - lo {
        return Err(Error::InvalidParams(format!(
            "cannot select {m} rows from [{lo}, {n})"
        )));
    }
    let mut rng = stream_rng(seed, StreamKind::RowSelection, 0);
    // partial Fisher-Yates: the first m entries are a uniform m-subset
    let mut pool: Vec<usize> = (lo..n).collect();
    let size = pool.len();
    for i in 0..m {
        let j = i + rng.random_range(0..size - i);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool.sort_unstable();
    SelectionSet::from_sorted(pool, n)
}
