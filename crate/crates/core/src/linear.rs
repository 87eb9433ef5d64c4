//! Quantities built from `Q = [y_1 x_1, ..., y_m x_m]` without ever forming
//! `QᵀQ`: the dual objective, its gradient, principal Hessian blocks, primal
//! recovery and the primal objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{NssvmError, Result};
use crate::linalg::Cholesky;
use crate::projection::{count_nonzero, kth_largest_abs, ActiveSet};

/// Work (rows x features) above which the `Qᵀv` kernel runs on the rayon
/// pool. Every output entry is computed independently, so the result is
/// bit-identical either way.
const PARALLEL_WORK: usize = 1 << 16;

/// Loss weights: `C` on margin violations (`t >= 0`) and `c` on the
/// other side, with `C > c > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "c")]
    pub small_c: f64,
}

impl Penalties {
    pub fn new(big_c: f64, small_c: f64) -> Result<Self> {
        if !(big_c > small_c && small_c > 0.0 && big_c.is_finite()) {
            return Err(NssvmError::InvalidConfig(format!(
                "penalties must satisfy C > c > 0 (got C = {big_c}, c = {small_c})"
            )));
        }
        Ok(Self { big_c, small_c })
    }

    /// `c = ratio * C`.
    pub fn with_ratio(big_c: f64, ratio: f64) -> Result<Self> {
        Self::new(big_c, ratio * big_c)
    }

    /// Diagonal entry of `E(α)` for one coordinate.
    #[inline]
    pub fn e(&self, alpha_i: f64) -> f64 {
        if alpha_i >= 0.0 {
            1.0 / self.big_c
        } else {
            1.0 / self.small_c
        }
    }

    /// `ℓ_cC(t)`: `C t²/2` for `t >= 0`, `c t²/2` otherwise.
    #[inline]
    pub fn loss(&self, t: f64) -> f64 {
        if t >= 0.0 {
            0.5 * self.big_c * t * t
        } else {
            0.5 * self.small_c * t * t
        }
    }

    /// Dual penalty `h_cC(t)`: `t²/(2C)` for `t >= 0`, `t²/(2c)` otherwise.
    #[inline]
    pub fn dual_penalty(&self, t: f64) -> f64 {
        0.5 * self.e(t) * t * t
    }
}

impl Default for Penalties {
    fn default() -> Self {
        Self {
            big_c: 0.25,
            small_c: 0.0025,
        }
    }
}

/// Solver state `z = (α; b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualIterate {
    pub alpha: Vec<f64>,
    pub b: f64,
}

impl DualIterate {
    /// `α = 0`, `b = sgn(<y, 1>)` with `sgn(0) = -1`.
    pub fn zero_start(labels: &[f64]) -> Self {
        let sum: f64 = labels.iter().sum();
        Self {
            alpha: vec![0.0; labels.len()],
            b: sign(sum),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.alpha.iter().all(|a| a.is_finite())
    }

    /// Euclidean norm of the stacked vector.
    pub fn norm(&self) -> f64 {
        (self.alpha.iter().map(|a| a * a).sum::<f64>() + self.b * self.b).sqrt()
    }
}

/// `1` if `t > 0`, otherwise `-1`.
#[inline]
pub fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(debug_assertions)]
thread_local! {
    static ENTRY_READS: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

/// Feature entries read by [`apply_q`] on this thread since the last reset.
#[cfg(debug_assertions)]
pub fn apply_q_entry_reads() -> u64 {
    ENTRY_READS.with(|c| c.get())
}

#[cfg(debug_assertions)]
pub fn reset_apply_q_entry_reads() {
    ENTRY_READS.with(|c| c.set(0));
}

fn check_len(d: &Dataset, v: &[f64]) -> Result<()> {
    if v.len() != d.m() {
        return Err(NssvmError::DimensionMismatch {
            expected: d.m(),
            found: v.len(),
        });
    }
    Ok(())
}

/// `Qα = Σ y_i α_i x_i`, touching only rows with `α_i != 0`.
pub fn apply_q(d: &Dataset, alpha: &[f64]) -> Result<Vec<f64>> {
    check_len(d, alpha)?;
    let mut w = vec![0.0; d.n()];
    let labels = d.labels();
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            let row = d.row(i);
            #[cfg(debug_assertions)]
            ENTRY_READS.with(|c| c.set(c.get() + row.stored() as u64));
            row.axpy(labels[i] * a, &mut w);
        }
    }
    Ok(w)
}

/// `Qᵀv`, i.e. `y_i <x_i, v>` for every sample.
pub fn apply_qt(d: &Dataset, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != d.n() {
        return Err(NssvmError::DimensionMismatch {
            expected: d.n(),
            found: v.len(),
        });
    }
    let labels = d.labels();
    let entry = |i: usize| labels[i] * d.row(i).dot(v);
    Ok(if d.m() * d.n() >= PARALLEL_WORK {
        (0..d.m()).into_par_iter().map(entry).collect()
    } else {
        (0..d.m()).map(entry).collect()
    })
}

/// Decision values `Xw + b`.
pub fn decision_values(d: &Dataset, w: &[f64], b: f64) -> Result<Vec<f64>> {
    if w.len() != d.n() {
        return Err(NssvmError::DimensionMismatch {
            expected: d.n(),
            found: w.len(),
        });
    }
    let value = |i: usize| d.row(i).dot(w) + b;
    Ok(if d.m() * d.n() >= PARALLEL_WORK {
        (0..d.m()).into_par_iter().map(value).collect()
    } else {
        (0..d.m()).map(value).collect()
    })
}

/// Diagonal of `E(α)`: `1/C` where `α_i >= 0`, `1/c` elsewhere.
pub fn e_diag(alpha: &[f64], p: &Penalties) -> Vec<f64> {
    alpha.iter().map(|&a| p.e(a)).collect()
}

/// `D(α) = ½||Qα||² + ½<E(α)α, α> - <1, α>`.
pub fn dual_objective(d: &Dataset, alpha: &[f64], p: &Penalties) -> Result<f64> {
    let w = apply_q(d, alpha)?;
    let quad: f64 = w.iter().map(|x| x * x).sum();
    let (pen, lin) = alpha
        .iter()
        .fold((0.0, 0.0), |(pen, lin), &a| (pen + p.e(a) * a * a, lin + a));
    Ok(0.5 * quad + 0.5 * pen - lin)
}

/// `g(z) = Qᵀ(Qα) + E(α)α - 1 + b y`, plus `w = Qα` for reuse.
pub fn grad_g_with_w(d: &Dataset, z: &DualIterate, p: &Penalties) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = apply_q(d, &z.alpha)?;
    let mut g = apply_qt(d, &w)?;
    for ((gi, &a), &y) in g.iter_mut().zip(&z.alpha).zip(d.labels()) {
        *gi += p.e(a) * a - 1.0 + z.b * y;
    }
    Ok((g, w))
}

pub fn grad_g(d: &Dataset, z: &DualIterate, p: &Penalties) -> Result<Vec<f64>> {
    grad_g_with_w(d, z, p).map(|(g, _)| g)
}

/// `Θ = (QᵀQ)_{TT} + E(α)_{TT}` with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct HessianBlock {
    pub theta: Vec<f64>,
    pub chol: Cholesky,
    pub set: ActiveSet,
}

impl HessianBlock {
    pub fn dim(&self) -> usize {
        self.set.len()
    }

    /// `Θ⁻¹ rhs`
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.chol.solve(rhs)
    }
}

/// Assembles and factors `Θ` on `t`. Costs `O(n s²)` to build and
/// `O(s³)` to factor.
pub fn hessian_block(d: &Dataset, alpha: &[f64], t: &ActiveSet, p: &Penalties) -> Result<HessianBlock> {
    check_len(d, alpha)?;
    let s = t.len();
    let idx = t.indices();
    let labels = d.labels();
    let mut theta = vec![0.0; s * s];

    let fill_row = |a: usize, row: &mut [f64]| {
        let ra = d.row(idx[a]);
        for b in 0..=a {
            row[b] = labels[idx[a]] * labels[idx[b]] * ra.dot_row(&d.row(idx[b]));
        }
    };
    if s * s * d.n() >= PARALLEL_WORK {
        theta
            .par_chunks_mut(s.max(1))
            .enumerate()
            .for_each(|(a, row)| fill_row(a, row));
    } else {
        for (a, row) in theta.chunks_mut(s.max(1)).enumerate() {
            fill_row(a, row);
        }
    }
    for a in 0..s {
        theta[a * s + a] += p.e(alpha[idx[a]]);
        for b in 0..a {
            theta[b * s + a] = theta[a * s + b];
        }
    }
    let chol = Cholesky::factor(&theta, s).map_err(|e| NssvmError::NumericalBreakdown {
        iter: 0,
        detail: format!(
            "Cholesky of the {s}x{s} Hessian block failed at pivot {} (value {:e})",
            e.pivot, e.value
        ),
    })?;
    Ok(HessianBlock {
        theta,
        chol,
        set: t.clone(),
    })
}

/// Primal solution recovered from a dual point. `b_hat` is `None` when
/// `α = 0`; callers then fall back to the solver's multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalSolution {
    pub w: Vec<f64>,
    pub b_hat: Option<f64>,
}

/// `ŵ = Qα` and `b̂ = <y_S, 1 - H_S(α)α_S> / |S|` over `S = supp(α)`.
pub fn recover_primal(d: &Dataset, alpha: &[f64], p: &Penalties) -> Result<PrimalSolution> {
    let w = apply_q(d, alpha)?;
    let support = ActiveSet::support_of(alpha);
    if support.is_empty() {
        return Ok(PrimalSolution { w, b_hat: None });
    }
    let labels = d.labels();
    // Row i of H(α)α equals y_i<x_i, w> + E_ii α_i because α vanishes off S.
    let sum: f64 = support
        .indices()
        .iter()
        .map(|&i| {
            let h_alpha = labels[i] * d.row(i).dot(&w) + p.e(alpha[i]) * alpha[i];
            labels[i] * (1.0 - h_alpha)
        })
        .sum();
    Ok(PrimalSolution {
        w,
        b_hat: Some(sum / support.len() as f64),
    })
}

/// `½||w||² + Σ ℓ_cC(1 - y_i(<w, x_i> + b))`.
pub fn primal_objective(d: &Dataset, w: &[f64], b: f64, p: &Penalties) -> Result<f64> {
    let f = decision_values(d, w, b)?;
    let loss: f64 = f
        .iter()
        .zip(d.labels())
        .map(|(fi, y)| p.loss(1.0 - y * fi))
        .sum();
    Ok(0.5 * w.iter().map(|x| x * x).sum::<f64>() + loss)
}

/// `||α||_[s] / ||g||_[1]` when `||α||_0 >= s`, else `+∞`. A zero gradient
/// also yields `+∞`.
pub fn eta_star(alpha: &[f64], g: &[f64], s: usize) -> f64 {
    if count_nonzero(alpha) < s {
        return f64::INFINITY;
    }
    let gmax = kth_largest_abs(g, 1);
    if gmax == 0.0 {
        return f64::INFINITY;
    }
    kth_largest_abs(alpha, s) / gmax
}
