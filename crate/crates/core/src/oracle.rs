//! Brute-force reference solutions for tiny instances.
//!
//! Each support `T` yields the strongly convex problem
//! `min D(α) s.t. supp(α) ⊆ T, <α, y> = 0`. `D` is quadratic on every
//! orthant sign pattern, so the restricted minimizer is found by solving the
//! equality-constrained KKT system for a sign pattern and iterating on the
//! pattern until it is self-consistent. Enumerating all supports of size
//! at most `s` gives the global optimum of the sparsity-constrained problem.
//!
//! Nothing here calls into the Newton solver or the `linear` kernels.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{NssvmError, Result};
use crate::linear::Penalties;

pub const MAX_ORACLE_M: usize = 14;
pub const MAX_ORACLE_S: usize = 4;

/// Minimizer of `D` over one support.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedSolution {
    pub alpha: Vec<f64>,
    pub b: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_support: Vec<usize>,
    pub best_alpha: Vec<f64>,
    pub best_b: f64,
    pub best_objective: f64,
    pub evaluated_supports: usize,
}

struct Instance<'a> {
    d: &'a Dataset,
    rows: Vec<Vec<f64>>,
    p: Penalties,
}

impl<'a> Instance<'a> {
    fn new(d: &'a Dataset, p: &Penalties) -> Self {
        let rows = (0..d.m()).map(|i| d.row(i).to_dense(d.n())).collect();
        Self { d, rows, p: *p }
    }

    fn kernel(&self, i: usize, j: usize) -> f64 {
        let y = self.d.labels();
        y[i] * y[j] * self.rows[i].iter().zip(&self.rows[j]).map(|(a, b)| a * b).sum::<f64>()
    }

    fn h(&self, t: f64) -> f64 {
        if t >= 0.0 {
            t * t / (2.0 * self.p.big_c)
        } else {
            t * t / (2.0 * self.p.small_c)
        }
    }

    /// `d(α) + Σ h_cC(α_i)` with the double sum written out.
    fn objective(&self, alpha: &[f64]) -> f64 {
        let support: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] != 0.0).collect();
        let mut quad = 0.0;
        for &i in &support {
            for &j in &support {
                quad += alpha[i] * alpha[j] * self.kernel(i, j);
            }
        }
        let lin: f64 = alpha.iter().sum();
        let pen: f64 = alpha.iter().map(|&a| self.h(a)).sum();
        0.5 * quad - lin + pen
    }

    /// KKT system of the quadratic piece selected by `negative`:
    /// `[K_TT + E, y_T; y_Tᵀ, 0] [α_T; b] = [1; 0]`.
    fn solve_pattern(&self, t: &[usize], negative: &[bool]) -> Result<(Vec<f64>, f64)> {
        let s = t.len();
        let y = self.d.labels();
        let dim = s + 1;
        let mut a = vec![0.0; dim * dim];
        let mut rhs = vec![0.0; dim];
        for (p, &i) in t.iter().enumerate() {
            for (q, &j) in t.iter().enumerate() {
                a[p * dim + q] = self.kernel(i, j);
            }
            a[p * dim + p] += if negative[p] { 1.0 / self.p.small_c } else { 1.0 / self.p.big_c };
            a[p * dim + s] = y[i];
            a[s * dim + p] = y[i];
            rhs[p] = 1.0;
        }
        let x = lu_solve(a, rhs, dim)
            .ok_or_else(|| NssvmError::OracleFailure("singular restricted KKT system".into()))?;
        Ok((x[..s].to_vec(), x[s]))
    }
}

/// Dense Gaussian elimination with partial pivoting.
fn lu_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &q| a[r * n + col].abs().total_cmp(&a[q * n + col].abs()))?;
        if a[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - tail) / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn pattern_of(alpha_t: &[f64]) -> Vec<bool> {
    alpha_t.iter().map(|&a| a < 0.0).collect()
}

fn solve_on_support(inst: &Instance<'_>, t: &[usize]) -> Result<RestrictedSolution> {
    let m = inst.d.m();
    if t.is_empty() {
        return Ok(RestrictedSolution {
            alpha: vec![0.0; m],
            b: 0.0,
            objective: 0.0,
        });
    }
    let s = t.len();
    let finish = |alpha_t: Vec<f64>, b: f64| {
        let mut alpha = vec![0.0; m];
        for (k, &i) in t.iter().enumerate() {
            alpha[i] = alpha_t[k];
        }
        let objective = inst.objective(&alpha);
        RestrictedSolution { alpha, b, objective }
    };

    let mut pattern = vec![false; s];
    let mut seen = HashSet::new();
    seen.insert(pattern.clone());
    for _ in 0..=(1usize << s) {
        let (alpha_t, b) = inst.solve_pattern(t, &pattern)?;
        let next = pattern_of(&alpha_t);
        if next == pattern {
            return Ok(finish(alpha_t, b));
        }
        if !seen.insert(next.clone()) {
            break;
        }
        pattern = next;
    }

    // The fixed-point iteration cycled: try every pattern. A self-consistent
    // pattern is a stationary point of a strongly convex C¹ function, hence
    // the unique minimizer.
    for mask in 0u32..(1u32 << s) {
        let pattern: Vec<bool> = (0..s).map(|k| mask & (1 << k) != 0).collect();
        let (alpha_t, b) = inst.solve_pattern(t, &pattern)?;
        if pattern_of(&alpha_t) == pattern {
            return Ok(finish(alpha_t, b));
        }
    }
    Err(NssvmError::OracleFailure(format!(
        "no self-consistent sign pattern on support {t:?}"
    )))
}

/// `min D(α) s.t. supp(α) ⊆ t, <α, y> = 0`.
pub fn solve_restricted(d: &Dataset, t: &[usize], p: &Penalties) -> Result<RestrictedSolution> {
    d.ensure_binary()?;
    if let Some(&bad) = t.iter().find(|&&i| i >= d.m()) {
        return Err(NssvmError::DimensionMismatch {
            expected: d.m(),
            found: bad + 1,
        });
    }
    solve_on_support(&Instance::new(d, p), t)
}

/// Objective as evaluated inside the oracle (elementwise double sum).
pub fn oracle_objective(d: &Dataset, alpha: &[f64], p: &Penalties) -> f64 {
    Instance::new(d, p).objective(alpha)
}

fn for_each_subset(m: usize, k: usize, f: &mut impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn rec(
        start: usize,
        m: usize,
        k: usize,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, f)?;
            cur.pop();
        }
        Ok(())
    }
    rec(0, m, k, &mut Vec::with_capacity(k), f)
}

/// Exhaustive minimum over every support of size at most `s`. Refuses
/// instances with `m > 14` or `s > 4`.
pub fn enumerate_global(d: &Dataset, s: usize, p: &Penalties) -> Result<OracleResult> {
    d.ensure_binary()?;
    if d.m() > MAX_ORACLE_M || s > MAX_ORACLE_S {
        return Err(NssvmError::OracleTooLarge { m: d.m(), s });
    }
    let inst = Instance::new(d, p);
    let mut best: Option<(Vec<usize>, RestrictedSolution)> = None;
    let mut evaluated = 0usize;
    for k in 0..=s.min(d.m()) {
        for_each_subset(d.m(), k, &mut |t| {
            let sol = solve_on_support(&inst, t)?;
            evaluated += 1;
            if best.as_ref().is_none_or(|(_, b)| sol.objective < b.objective) {
                best = Some((t.to_vec(), sol));
            }
            Ok(())
        })?;
    }
    let (support, sol) = best.expect("the empty support is always evaluated");
    Ok(OracleResult {
        best_support: support,
        best_alpha: sol.alpha,
        best_b: sol.b,
        best_objective: sol.objective,
        evaluated_supports: evaluated,
    })
}
