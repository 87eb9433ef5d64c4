//! Problem instances: storage, libsvm text I/O, preprocessing and the
//! two-class Gaussian generator.
//!
//! A [`Dataset`] is immutable once built. Rows are samples; the storage is
//! dense row-major or compressed sparse rows depending on the fraction of
//! nonzero entries.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NssvmError, Result};

/// Below this nonzero density the feature matrix is stored as CSR.
pub const SPARSE_DENSITY_THRESHOLD: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    cols: usize,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Features {
    Dense { values: Vec<f64>, cols: usize },
    Sparse(CsrMatrix),
}

impl Features {
    pub fn is_sparse(&self) -> bool {
        matches!(self, Features::Sparse(_))
    }
}

/// Borrowed view of one sample.
#[derive(Clone, Copy, Debug)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse {
        indices: &'a [usize],
        values: &'a [f64],
    },
}

impl<'a> Row<'a> {
    #[inline]
    pub fn dot(&self, v: &[f64]) -> f64 {
        match *self {
            Row::Dense(x) => x.iter().zip(v).map(|(a, b)| a * b).sum(),
            Row::Sparse { indices, values } => {
                indices.iter().zip(values).map(|(&j, x)| x * v[j]).sum()
            }
        }
    }

    /// `out += a * x`
    #[inline]
    pub fn axpy(&self, a: f64, out: &mut [f64]) {
        match *self {
            Row::Dense(x) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += a * xi;
                }
            }
            Row::Sparse { indices, values } => {
                for (&j, x) in indices.iter().zip(values) {
                    out[j] += a * x;
                }
            }
        }
    }

    pub fn dot_row(&self, other: &Row<'_>) -> f64 {
        match (*self, *other) {
            (Row::Dense(a), Row::Dense(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Row::Dense(a), Row::Sparse { indices, values })
            | (Row::Sparse { indices, values }, Row::Dense(a)) => {
                indices.iter().zip(values).map(|(&j, x)| x * a[j]).sum()
            }
            (
                Row::Sparse {
                    indices: ia,
                    values: va,
                },
                Row::Sparse {
                    indices: ib,
                    values: vb,
                },
            ) => {
                let (mut p, mut q, mut acc) = (0, 0, 0.0);
                while p < ia.len() && q < ib.len() {
                    match ia[p].cmp(&ib[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[p] * vb[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    /// Number of stored entries (for dense rows, the full width).
    pub fn stored(&self) -> usize {
        match *self {
            Row::Dense(x) => x.len(),
            Row::Sparse { values, .. } => values.len(),
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.axpy(1.0, &mut out);
        out
    }

    /// Nonzero `(column, value)` pairs in column order.
    pub fn nonzeros(&self) -> Vec<(usize, f64)> {
        match *self {
            Row::Dense(x) => x
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect(),
            Row::Sparse { indices, values } => indices
                .iter()
                .zip(values)
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (*j, *v))
                .collect(),
        }
    }
}

/// Samples (rows of `X`) with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Features,
    labels: Vec<f64>,
    m: usize,
    n: usize,
}

impl Dataset {
    /// Builds a dataset from dense rows, choosing the storage by density.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut sparse_rows = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(NssvmError::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(NssvmError::NonFiniteFeature { row: i });
            }
            sparse_rows.push(
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect::<Vec<_>>(),
            );
        }
        Self::from_sparse_rows(sparse_rows, labels, n)
    }

    /// Builds a dataset from per-row `(column, value)` lists sorted by column.
    pub fn from_sparse_rows(
        rows: Vec<Vec<(usize, f64)>>,
        labels: Vec<f64>,
        n: usize,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(NssvmError::DimensionMismatch {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        if rows.is_empty() {
            return Err(NssvmError::EmptyInput);
        }
        if n == 0 {
            return Err(NssvmError::InvalidConfig(
                "dataset must have at least one feature".into(),
            ));
        }
        let m = rows.len();
        let mut nnz = 0usize;
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|(j, v)| *j >= n || !v.is_finite()) {
                return Err(NssvmError::NonFiniteFeature { row: i });
            }
            nnz += r.iter().filter(|(_, v)| *v != 0.0).count();
        }
        if labels.iter().any(|l| !l.is_finite()) {
            return Err(NssvmError::InvalidConfig("non-finite label".into()));
        }
        let density = nnz as f64 / (m as f64 * n as f64);
        let features = if density < SPARSE_DENSITY_THRESHOLD {
            let mut indptr = Vec::with_capacity(m + 1);
            let mut indices = Vec::with_capacity(nnz);
            let mut values = Vec::with_capacity(nnz);
            indptr.push(0);
            for r in &rows {
                for &(j, v) in r.iter().filter(|(_, v)| *v != 0.0) {
                    indices.push(j);
                    values.push(v);
                }
                indptr.push(indices.len());
            }
            Features::Sparse(CsrMatrix {
                indptr,
                indices,
                values,
                cols: n,
            })
        } else {
            let mut values = vec![0.0; m * n];
            for (i, r) in rows.iter().enumerate() {
                for &(j, v) in r {
                    values[i * n + j] = v;
                }
            }
            Features::Dense { values, cols: n }
        };
        Ok(Self {
            features,
            labels,
            m,
            n,
        })
    }

    /// Dense row-major constructor without the density check; used by the
    /// generator where every entry is nonzero.
    fn from_dense_values(values: Vec<f64>, labels: Vec<f64>, n: usize) -> Self {
        let m = labels.len();
        debug_assert_eq!(values.len(), m * n);
        Self {
            features: Features::Dense { values, cols: n },
            labels,
            m,
            n,
        }
    }

    /// A dataset with no samples, used for the test half of a split with
    /// `train_fraction = 1`.
    pub fn empty(n: usize) -> Self {
        Self {
            features: Features::Dense {
                values: Vec::new(),
                cols: n,
            },
            labels: Vec::new(),
            m: 0,
            n,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.features {
            Features::Dense { values, cols } => Row::Dense(&values[i * cols..(i + 1) * cols]),
            Features::Sparse(csr) => {
                let (a, b) = (csr.indptr[i], csr.indptr[i + 1]);
                Row::Sparse {
                    indices: &csr.indices[a..b],
                    values: &csr.values[a..b],
                }
            }
        }
    }

    /// Errors unless every label is exactly -1 or +1.
    pub fn ensure_binary(&self) -> Result<()> {
        match self.labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
            Some(&l) => Err(NssvmError::NonBinaryLabel(l)),
            None => Ok(()),
        }
    }

    /// Copies the given samples (in the given order) into a new dataset.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        if rows.is_empty() {
            return Dataset::empty(self.n);
        }
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        let features = match &self.features {
            Features::Dense { values, cols } => {
                let mut out = Vec::with_capacity(rows.len() * cols);
                for &i in rows {
                    out.extend_from_slice(&values[i * cols..(i + 1) * cols]);
                }
                Features::Dense {
                    values: out,
                    cols: *cols,
                }
            }
            Features::Sparse(csr) => {
                let mut indptr = vec![0];
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for &i in rows {
                    let (a, b) = (csr.indptr[i], csr.indptr[i + 1]);
                    indices.extend_from_slice(&csr.indices[a..b]);
                    values.extend_from_slice(&csr.values[a..b]);
                    indptr.push(indices.len());
                }
                Features::Sparse(CsrMatrix {
                    indptr,
                    indices,
                    values,
                    cols: csr.cols,
                })
            }
        };
        Dataset {
            features,
            labels,
            m: rows.len(),
            n: self.n,
        }
    }

    /// Widens the feature space to `n` columns (new columns are zero).
    pub fn with_feature_count(&self, n: usize) -> Result<Dataset> {
        if n < self.n {
            return Err(NssvmError::DimensionMismatch {
                expected: n,
                found: self.n,
            });
        }
        if n == self.n {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.n = n;
        match &mut out.features {
            Features::Dense { values, cols } => {
                let mut widened = vec![0.0; self.m * n];
                for i in 0..self.m {
                    widened[i * n..i * n + *cols].copy_from_slice(&values[i * *cols..(i + 1) * *cols]);
                }
                *values = widened;
                *cols = n;
            }
            Features::Sparse(csr) => csr.cols = n,
        }
        Ok(out)
    }

    pub fn nnz(&self) -> usize {
        match &self.features {
            Features::Dense { values, .. } => values.iter().filter(|v| **v != 0.0).count(),
            Features::Sparse(csr) => csr.nnz(),
        }
    }
}

/// Train/test pair; `test` may be empty.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
}

/// Reads the libsvm text format `label idx:val idx:val ...` with 1-based,
/// strictly increasing indices. Blank lines are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok.parse().map_err(|_| NssvmError::Parse {
            line: lineno,
            message: format!("invalid label '{label_tok}'"),
        })?;
        if !label.is_finite() {
            return Err(NssvmError::Parse {
                line: lineno,
                message: format!("non-finite label '{label_tok}'"),
            });
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| NssvmError::Parse {
                line: lineno,
                message: format!("expected idx:val, found '{tok}'"),
            })?;
            let idx: usize = idx.parse().map_err(|_| NssvmError::Parse {
                line: lineno,
                message: format!("invalid index '{idx}'"),
            })?;
            let val: f64 = val.parse().map_err(|_| NssvmError::Parse {
                line: lineno,
                message: format!("invalid value '{val}'"),
            })?;
            if idx == 0 {
                return Err(NssvmError::Parse {
                    line: lineno,
                    message: "indices are 1-based".into(),
                });
            }
            if !val.is_finite() {
                return Err(NssvmError::Parse {
                    line: lineno,
                    message: format!("non-finite value '{tok}'"),
                });
            }
            if let Some(&(prev, _)) = row.last() {
                if idx - 1 <= prev {
                    return Err(NssvmError::Parse {
                        line: lineno,
                        message: format!("index {idx} not strictly increasing"),
                    });
                }
            }
            n = n.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(NssvmError::EmptyInput);
    }
    Dataset::from_sparse_rows(rows, labels, n.max(1))
}

/// Writes `%+d idx:%.17g` lines with 1-based indices, skipping zeros.
pub fn write_libsvm<W: Write>(d: &Dataset, mut out: W) -> Result<()> {
    let mut line = String::new();
    for i in 0..d.m() {
        line.clear();
        let label = d.labels()[i];
        if label.fract() == 0.0 && label.abs() < 1e15 {
            line.push_str(&format!("{:+}", label as i64));
        } else {
            let g = format_g17(label);
            if !g.starts_with('-') {
                line.push('+');
            }
            line.push_str(&g);
        }
        for (j, v) in d.row(i).nonzeros() {
            line.push(' ');
            line.push_str(&(j + 1).to_string());
            line.push(':');
            line.push_str(&format_g17(v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    const P: i32 = 17;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= P {
        let mantissa = trim_fraction_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        trim_fraction_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Labels equal to 1 become +1; every other class becomes -1.
pub fn binarize_labels(d: &Dataset) -> Dataset {
    let mut out = d.clone();
    for l in out.labels.iter_mut() {
        *l = if *l == 1.0 { 1.0 } else { -1.0 };
    }
    out
}

/// Per-column affine map onto `[-1, 1]`, fitted on one dataset and
/// reusable on another (e.g. a test split).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ColumnScaling {
    pub fn fit(d: &Dataset) -> Self {
        let n = d.n();
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        match d.features() {
            Features::Dense { values, cols } => {
                for row in values.chunks_exact(*cols) {
                    for (j, &v) in row.iter().enumerate() {
                        min[j] = min[j].min(v);
                        max[j] = max[j].max(v);
                    }
                }
            }
            Features::Sparse(csr) => {
                let mut count = vec![0usize; n];
                for (&j, &v) in csr.indices.iter().zip(&csr.values) {
                    min[j] = min[j].min(v);
                    max[j] = max[j].max(v);
                    count[j] += 1;
                }
                // implicit zeros
                for j in 0..n {
                    if count[j] < d.m() {
                        min[j] = min[j].min(0.0);
                        max[j] = max[j].max(0.0);
                    }
                }
            }
        }
        for j in 0..n {
            if !min[j].is_finite() {
                min[j] = 0.0;
                max[j] = 0.0;
            }
        }
        Self { min, max }
    }

    #[inline]
    fn map(&self, j: usize, x: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi > lo {
            2.0 * (x - lo) / (hi - lo) - 1.0
        } else {
            0.0
        }
    }

    /// Applies the map; columns beyond the fitted width pass through.
    pub fn apply(&self, d: &Dataset) -> Dataset {
        if d.is_empty() {
            return d.clone();
        }
        let n = d.n();
        let rows: Vec<Vec<(usize, f64)>> = (0..d.m())
            .map(|i| {
                let x = d.row(i).to_dense(n);
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| (j, if j < self.min.len() { self.map(j, v) } else { v }))
                    .filter(|(_, v)| *v != 0.0)
                    .collect()
            })
            .collect();
        Dataset::from_sparse_rows(rows, d.labels.clone(), n).expect("scaled dataset is valid")
    }
}

/// Maps every column onto `[-1, 1]`; constant columns become 0.
pub fn scale_features(d: &Dataset) -> Dataset {
    ColumnScaling::fit(d).apply(d)
}

/// Shuffles with `seed` (seed 0 keeps the original order) and puts the first
/// `ceil(train_fraction * m)` samples in the training half.
pub fn split_train_test(d: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(NssvmError::InvalidConfig(format!(
            "train fraction {train_fraction} not in (0, 1]"
        )));
    }
    let m = d.m();
    let mut order: Vec<usize> = (0..m).collect();
    if seed != 0 {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let cut = ((train_fraction * m as f64).ceil() as usize).min(m);
    Ok(SplitDataset {
        train: d.select(&order[..cut]),
        test: d.select(&order[cut..]),
    })
}

pub const GAUSSIAN_POSITIVE_MEAN: [f64; 2] = [0.5, -3.0];
pub const GAUSSIAN_NEGATIVE_MEAN: [f64; 2] = [-0.5, 3.0];
pub const GAUSSIAN_VARIANCE: [f64; 2] = [0.2, 3.0];

/// Two-dimensional two-class Gaussian data: `2m` samples, `m` per class,
/// split evenly into train and test halves of `m` samples each with
/// balanced classes. Deterministic in `seed`.
pub fn gen_gaussian_2d(m: usize, seed: u64) -> Result<SplitDataset> {
    if m == 0 {
        return Err(NssvmError::InvalidConfig(
            "sample count must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = [GAUSSIAN_VARIANCE[0].sqrt(), GAUSSIAN_VARIANCE[1].sqrt()];
    let draw = |mean: [f64; 2], rng: &mut ChaCha8Rng| -> [f64; 2] {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        [mean[0] + sd[0] * z0, mean[1] + sd[1] * z1]
    };
    let positives: Vec<[f64; 2]> = (0..m).map(|_| draw(GAUSSIAN_POSITIVE_MEAN, &mut rng)).collect();
    let negatives: Vec<[f64; 2]> = (0..m).map(|_| draw(GAUSSIAN_NEGATIVE_MEAN, &mut rng)).collect();

    let pos_train = m.div_ceil(2);
    let neg_train = m / 2;
    let mut train: Vec<([f64; 2], f64)> = positives[..pos_train]
        .iter()
        .map(|x| (*x, 1.0))
        .chain(negatives[..neg_train].iter().map(|x| (*x, -1.0)))
        .collect();
    let mut test: Vec<([f64; 2], f64)> = positives[pos_train..]
        .iter()
        .map(|x| (*x, 1.0))
        .chain(negatives[neg_train..].iter().map(|x| (*x, -1.0)))
        .collect();
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);

    let pack = |samples: Vec<([f64; 2], f64)>| {
        let mut values = Vec::with_capacity(2 * samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for (x, y) in samples {
            values.extend_from_slice(&x);
            labels.push(y);
        }
        Dataset::from_dense_values(values, labels, 2)
    };
    Ok(SplitDataset {
        train: pack(train),
        test: pack(test),
    })
}
