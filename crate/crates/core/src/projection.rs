//! Hard thresholding: the projection onto `{u : ||u||_0 <= s}` and the
//! family of index sets selecting `s` largest magnitudes.
//!
//! Selection is deterministic: among equal magnitudes the smaller index
//! wins.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{NssvmError, Result};

/// Float-tie tolerance for [`is_member_ts`].
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Sorted set of distinct coordinate indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    indices: Vec<usize>,
}

impl ActiveSet {
    /// Sorts and validates `indices` against the ambient dimension `m`.
    pub fn new(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(NssvmError::InvalidConfig("duplicate index in active set".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= m {
                return Err(NssvmError::DimensionMismatch {
                    expected: m,
                    found: last + 1,
                });
            }
        }
        Ok(Self { indices })
    }

    /// Indices of the nonzero entries of `v`.
    pub fn support_of(v: &[f64]) -> Self {
        Self {
            indices: v
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(i, _)| i)
                .collect(),
        }
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

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Boolean membership mask of length `m`.
    pub fn mask(&self, m: usize) -> Vec<bool> {
        let mut mask = vec![false; m];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }

    pub fn gather(&self, v: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| v[i]).collect()
    }
}

#[inline]
fn by_magnitude(v: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b))
}

/// `s` indices of largest `|v_i|`, smaller index first among ties, returned
/// in ascending index order.
pub fn top_s_indices(v: &[f64], s: usize) -> Result<ActiveSet> {
    let m = v.len();
    if s == 0 || s > m {
        return Err(NssvmError::SparsityOutOfRange { s, m });
    }
    let mut idx: Vec<usize> = (0..m).collect();
    if s < m {
        idx.select_nth_unstable_by(s - 1, by_magnitude(v));
        idx.truncate(s);
    }
    idx.sort_unstable();
    Ok(ActiveSet { indices: idx })
}

/// Keeps the entries selected by [`top_s_indices`], zeroing the rest.
pub fn hard_threshold(v: &[f64], s: usize) -> Result<Vec<f64>> {
    let t = top_s_indices(v, s)?;
    let mut out = vec![0.0; v.len()];
    for &i in t.indices() {
        out[i] = v[i];
    }
    Ok(out)
}

/// Whether `t` belongs to the family of size-`|t|` sets of largest
/// magnitudes of `v` (up to [`MEMBERSHIP_TOL`]).
pub fn is_member_ts(t: &ActiveSet, v: &[f64]) -> bool {
    let mask = t.mask(v.len());
    let mut inside = f64::INFINITY;
    let mut outside = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        if mask[i] {
            inside = inside.min(x.abs());
        } else {
            outside = outside.max(x.abs());
        }
    }
    inside >= outside - MEMBERSHIP_TOL
}

/// The `k`-th largest entry of `|v|` (1-based `k`); 0 when `k > len`.
pub fn kth_largest_abs(v: &[f64], k: usize) -> f64 {
    if k == 0 || k > v.len() {
        return 0.0;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let (_, kth, _) = mags.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    *kth
}

pub fn count_nonzero(v: &[f64]) -> usize {
    v.iter().filter(|x| **x != 0.0).count()
}
