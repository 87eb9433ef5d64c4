//! Newton iterations on the stationary equations
//!
//! ```text
//! F(z; T) = [ g_T(z) ; α_T̄ ; <α_T, y_T> ] = 0
//! ```
//!
//! with the working set `T` re-selected every step as `s` largest entries
//! of `|α - η g(z)|`. The Jacobian is block-structured, so each direction
//! costs one `s x s` Cholesky factorization plus two triangular solves.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{NssvmError, Result};
use crate::linear::{eta_star, grad_g_with_w, hessian_block, DualIterate, Penalties};
use crate::projection::{count_nonzero, kth_largest_abs, top_s_indices, ActiveSet};

/// Parameters of the fixed-sparsity Newton method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub penalties: Penalties,
    pub eta: f64,
    pub s: usize,
    pub eps: f64,
    pub max_iter: usize,
}

/// `max(√m, √n) · 1e-6`
pub fn default_eps(m: usize, n: usize) -> f64 {
    (m.max(n) as f64).sqrt() * 1e-6
}

pub const DEFAULT_MAX_ITER: usize = 1000;

impl SolverConfig {
    /// `C = 0.25`, `c = 0.01 C`, `η = 1/m`, default tolerance, `K = 1000`.
    pub fn defaults(m: usize, n: usize, s: usize) -> Self {
        Self {
            penalties: Penalties::default(),
            eta: 1.0 / m.max(1) as f64,
            s,
            eps: default_eps(m, n),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        Penalties::new(self.penalties.big_c, self.penalties.small_c)?;
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(NssvmError::InvalidConfig(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.eps > 0.0) {
            return Err(NssvmError::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if self.s == 0 || self.s > m {
            return Err(NssvmError::SparsityOutOfRange { s: self.s, m });
        }
        Ok(())
    }
}

/// `F(z; T)` without the `α_T̄` block materialized.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    /// `g_T(z)`
    pub active: Vec<f64>,
    /// `||α_T̄||`
    pub inactive_norm: f64,
    /// `<α_T, y_T>`
    pub feasibility: f64,
    /// `||F(z; T)||`
    pub norm: f64,
}

impl Residual {
    /// The full stacked vector of length `m + 1`, ordered as
    /// `[g_T; α_T̄; <α_T, y_T>]`.
    pub fn stacked(&self, z: &DualIterate, t: &ActiveSet) -> Vec<f64> {
        let mask = t.mask(z.alpha.len());
        let mut out = self.active.clone();
        out.extend(z.alpha.iter().enumerate().filter(|(i, _)| !mask[*i]).map(|(_, a)| *a));
        out.push(self.feasibility);
        out
    }
}

fn residual_from_grad(z: &DualIterate, g: &[f64], t: &ActiveSet, labels: &[f64]) -> Residual {
    let active = t.gather(g);
    let mask = t.mask(z.alpha.len());
    let mut inactive_sq = 0.0;
    let mut feasibility = 0.0;
    for (i, &a) in z.alpha.iter().enumerate() {
        if mask[i] {
            feasibility += a * labels[i];
        } else {
            inactive_sq += a * a;
        }
    }
    let active_sq: f64 = active.iter().map(|v| v * v).sum();
    Residual {
        norm: (active_sq + inactive_sq + feasibility * feasibility).sqrt(),
        active,
        inactive_norm: inactive_sq.sqrt(),
        feasibility,
    }
}

/// Evaluates `F(z; T)` and its norm.
pub fn residual_f(d: &Dataset, z: &DualIterate, t: &ActiveSet, p: &Penalties) -> Result<Residual> {
    let (g, _) = grad_g_with_w(d, z, p)?;
    Ok(residual_from_grad(z, &g, t, d.labels()))
}

/// Iteration state: the current point, its gradient and working set.
#[derive(Clone, Debug)]
pub struct NewtonState {
    pub z: DualIterate,
    pub active: ActiveSet,
    pub residual: f64,
    pub iter: usize,
    pub grad: Vec<f64>,
    /// `Qα` at `z`
    pub w: Vec<f64>,
}

impl NewtonState {
    /// Evaluates the gradient at `z` and selects a working set of size `s`.
    pub fn new(d: &Dataset, z: DualIterate, p: &Penalties, eta: f64, s: usize) -> Result<Self> {
        if z.alpha.len() != d.m() {
            return Err(NssvmError::DimensionMismatch {
                expected: d.m(),
                found: z.alpha.len(),
            });
        }
        if !z.is_finite() {
            return Err(NssvmError::InvalidConfig("initial point is not finite".into()));
        }
        let (grad, w) = grad_g_with_w(d, &z, p)?;
        let mut state = Self {
            z,
            active: ActiveSet::default(),
            residual: f64::INFINITY,
            iter: 0,
            grad,
            w,
        };
        if state.z.alpha.iter().all(|a| *a == 0.0) {
            state.active = class_balanced_set(d.labels(), s)?;
            state.residual = state.residual_vector(d).norm;
        } else {
            state.select(d, eta, s)?;
        }
        Ok(state)
    }

    /// `T ← T_s(α - η g)` and refreshes the residual norm.
    pub fn select(&mut self, d: &Dataset, eta: f64, s: usize) -> Result<()> {
        let probe: Vec<f64> = self
            .z
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a - eta * g)
            .collect();
        self.active = top_s_indices(&probe, s)?;
        self.residual = residual_from_grad(&self.z, &self.grad, &self.active, d.labels()).norm;
        Ok(())
    }

    pub fn residual_vector(&self, d: &Dataset) -> Residual {
        residual_from_grad(&self.z, &self.grad, &self.active, d.labels())
    }

    /// Full Newton step `z ← z + d`, then the gradient at the new point.
    /// Leaves `active` untouched; call [`NewtonState::select`] next.
    pub fn step(&mut self, d: &Dataset, p: &Penalties) -> Result<()> {
        let dir = newton_direction(d, self, p)?;
        let mut alpha = vec![0.0; d.m()];
        for (k, &i) in self.active.indices().iter().enumerate() {
            alpha[i] = self.z.alpha[i] + dir.active[k];
        }
        self.z = DualIterate {
            alpha,
            b: self.z.b + dir.bias,
        };
        if !self.z.is_finite() {
            return Err(NssvmError::NumericalBreakdown {
                iter: self.iter,
                detail: "Newton step produced a non-finite point".into(),
            });
        }
        let (grad, w) = grad_g_with_w(d, &self.z, p)?;
        self.grad = grad;
        self.w = w;
        self.iter += 1;
        Ok(())
    }

    pub fn nnz(&self) -> usize {
        count_nonzero(&self.z.alpha)
    }

    /// `|<α, y>|`
    pub fn feasibility(&self, d: &Dataset) -> f64 {
        self.z
            .alpha
            .iter()
            .zip(d.labels())
            .map(|(a, y)| a * y)
            .sum::<f64>()
            .abs()
    }
}

/// Working set used when `α = 0`: the first `⌈s/2⌉` positive and the first
/// `⌊s/2⌋` negative samples, topped up from the other class when one class
/// is too small.
pub fn class_balanced_set(labels: &[f64], s: usize) -> Result<ActiveSet> {
    let m = labels.len();
    if s == 0 || s > m {
        return Err(NssvmError::SparsityOutOfRange { s, m });
    }
    let pos: Vec<usize> = (0..m).filter(|&i| labels[i] > 0.0).collect();
    let neg: Vec<usize> = (0..m).filter(|&i| labels[i] <= 0.0).collect();
    let want_pos = s.div_ceil(2);
    let (take_pos, take_neg) = if pos.len() < want_pos {
        (pos.len(), s - pos.len())
    } else if neg.len() < s - want_pos {
        (s - neg.len(), neg.len())
    } else {
        (want_pos, s - want_pos)
    };
    let mut idx: Vec<usize> = pos[..take_pos].iter().chain(&neg[..take_neg]).copied().collect();
    idx.sort_unstable();
    ActiveSet::new(idx, m)
}

/// Newton direction on the working set. Off the set the direction is
/// `-α_T̄` (implicit); `active[k]` pairs with `T[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    pub active: Vec<f64>,
    pub bias: f64,
}

impl Direction {
    /// Stacks the direction in natural coordinate order `(d_α; d_b)`.
    pub fn to_dense(&self, z: &DualIterate, t: &ActiveSet) -> Vec<f64> {
        let mut out: Vec<f64> = z.alpha.iter().map(|a| -a).collect();
        for (k, &i) in t.indices().iter().enumerate() {
            out[i] = self.active[k];
        }
        out.push(self.bias);
        out
    }
}

/// Solves `∇F(z; T) d = -F(z; T)` in closed form:
///
/// ```text
/// d_b = -<y_T, Θ⁻¹g_T - α_T> / <y_T, Θ⁻¹y_T>
/// d_T = -Θ⁻¹(g_T + d_b y_T)
/// ```
pub fn newton_direction(d: &Dataset, state: &NewtonState, p: &Penalties) -> Result<Direction> {
    let t = &state.active;
    let breakdown = |detail: String| NssvmError::NumericalBreakdown {
        iter: state.iter,
        detail,
    };
    let theta = hessian_block(d, &state.z.alpha, t, p).map_err(|e| match e {
        NssvmError::NumericalBreakdown { detail, .. } => breakdown(detail),
        other => other,
    })?;
    let y_t = t.gather(d.labels());
    let g_t = t.gather(&state.grad);
    let alpha_t = t.gather(&state.z.alpha);

    let u = theta.solve(&g_t);
    let v = theta.solve(&y_t);
    let yv: f64 = y_t.iter().zip(&v).map(|(a, b)| a * b).sum();
    let yu_minus_ya: f64 = y_t
        .iter()
        .zip(u.iter().zip(&alpha_t))
        .map(|(y, (ui, ai))| y * (ui - ai))
        .sum();
    if !(yv > 0.0) || !yv.is_finite() {
        return Err(breakdown(format!("<y_T, Θ⁻¹y_T> = {yv:e} is not positive")));
    }
    let bias = -yu_minus_ya / yv;
    let active: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| -(ui + bias * vi)).collect();
    if !bias.is_finite() || active.iter().any(|x| !x.is_finite()) {
        return Err(breakdown("non-finite Newton direction".into()));
    }
    Ok(Direction { active, bias })
}

/// One row of the iteration log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// `||F(z^k; T_k)||`
    pub residual: f64,
    /// sparsity level in force at this iterate
    pub s: usize,
    pub nnz: usize,
    /// `|<α^k, y>|`
    pub feasibility: f64,
    pub alpha_norm: f64,
    pub accuracy: Option<f64>,
}

impl IterRecord {
    pub(crate) fn capture(state: &NewtonState, d: &Dataset, s: usize, accuracy: Option<f64>) -> Self {
        Self {
            iter: state.iter,
            residual: state.residual,
            s,
            nnz: state.nnz(),
            feasibility: state.feasibility(d),
            alpha_norm: state.z.alpha.iter().map(|a| a * a).sum::<f64>().sqrt(),
            accuracy,
        }
    }

    /// `||α||_0 <= s` and `|<α, y>| <= 1e-9 (1 + ||α||)`.
    pub fn invariants_hold(&self) -> bool {
        self.nnz <= self.s && self.feasibility <= 1e-9 * (1.0 + self.alpha_norm)
    }
}

/// Output of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: Vec<f64>,
    pub b: f64,
    /// `w = Qα`
    pub w: Vec<f64>,
    pub support: ActiveSet,
    pub iters: usize,
    pub residual_history: Vec<f64>,
    pub acc_history: Vec<f64>,
    pub history: Vec<IterRecord>,
    pub wall_time: f64,
    pub converged: bool,
    /// Sparsity level at the returned iterate.
    pub final_s: usize,
}

impl FitResult {
    pub fn nsv(&self) -> usize {
        self.support.len()
    }

    pub fn dual_iterate(&self) -> DualIterate {
        DualIterate {
            alpha: self.alpha.clone(),
            b: self.b,
        }
    }

    pub(crate) fn from_state(
        state: &NewtonState,
        history: Vec<IterRecord>,
        started: Instant,
        converged: bool,
        final_s: usize,
    ) -> Self {
        Self {
            alpha: state.z.alpha.clone(),
            b: state.z.b,
            w: state.w.clone(),
            support: ActiveSet::support_of(&state.z.alpha),
            iters: state.iter,
            residual_history: history.iter().map(|r| r.residual).collect(),
            acc_history: history.iter().filter_map(|r| r.accuracy).collect(),
            history,
            wall_time: started.elapsed().as_secs_f64(),
            converged,
            final_s,
        }
    }
}

#[inline]
pub(crate) fn debug_check_iterate(record: &IterRecord) {
    debug_assert!(
        record.invariants_hold(),
        "iterate invariant violated at k = {}: nnz {} (s = {}), |<α,y>| = {:e}",
        record.iter,
        record.nnz,
        record.s,
        record.feasibility
    );
}

/// Newton method with a fixed sparsity level. Stops once
/// `||F(z^k; T_k)|| < eps` or after `max_iter` steps; on failure to
/// converge the iterate with the smallest residual is returned with
/// `converged = false`.
pub fn solve_fixed_s(d: &Dataset, cfg: &SolverConfig, z0: DualIterate) -> Result<FitResult> {
    d.ensure_binary()?;
    cfg.validate(d.m())?;
    let started = Instant::now();
    let p = &cfg.penalties;
    let mut state = NewtonState::new(d, z0, p, cfg.eta, cfg.s)?;
    let mut history = Vec::new();
    let mut best: Option<(f64, NewtonState, usize)> = None;

    loop {
        let record = IterRecord::capture(&state, d, cfg.s, None);
        if state.iter > 0 {
            debug_check_iterate(&record);
        }
        history.push(record);
        if state.residual < cfg.eps {
            return Ok(FitResult::from_state(&state, history, started, true, cfg.s));
        }
        if best.as_ref().is_none_or(|(r, _, _)| state.residual < *r) {
            best = Some((state.residual, state.clone(), history.len()));
        }
        if state.iter >= cfg.max_iter {
            break;
        }
        state.step(d, p)?;
        state.select(d, cfg.eta, cfg.s)?;
    }

    let total_iters = state.iter;
    let (_, best_state, _) = best.expect("at least one iterate recorded");
    let mut fit = FitResult::from_state(&best_state, history, started, false, cfg.s);
    fit.iters = total_iters;
    Ok(fit)
}

/// Values of the four η-stationarity conditions at a point:
///
/// 1. `g_S(z) = 0` on `S = supp(α)`
/// 2. `η ||g_S̄(z)||_∞ <= ||α||_[s]`
/// 3. `||α||_0 <= s`
/// 4. `<α, y> = 0`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub support_gradient_norm: f64,
    pub off_support_gradient_max: f64,
    pub alpha_sth_largest: f64,
    pub nnz: usize,
    pub s: usize,
    pub feasibility: f64,
    pub eta: f64,
    pub eta_star: f64,
    pub tol: f64,
}

impl StationarityReport {
    pub fn support_stationary(&self) -> bool {
        self.support_gradient_norm <= self.tol
    }

    /// Slack `η·tol` on the right-hand side: a working set that is exact
    /// up to `||g_T|| < tol` can leave that much on the threshold.
    pub fn threshold_holds(&self) -> bool {
        self.eta * self.off_support_gradient_max <= self.alpha_sth_largest + self.eta * self.tol
    }

    pub fn sparse(&self) -> bool {
        self.nnz <= self.s
    }

    pub fn feasible(&self) -> bool {
        self.feasibility.abs() <= self.tol
    }

    pub fn passed(&self) -> bool {
        self.support_stationary() && self.threshold_holds() && self.sparse() && self.feasible()
    }

    /// Names of the conditions that fail.
    pub fn violated(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.support_stationary() {
            out.push("support-gradient");
        }
        if !self.threshold_holds() {
            out.push("threshold");
        }
        if !self.sparse() {
            out.push("sparsity");
        }
        if !self.feasible() {
            out.push("feasibility");
        }
        out
    }
}

impl std::fmt::Display for StationarityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "VIOLATED" };
        writeln!(
            f,
            "  [1] ||g_S||                 = {:.3e} (tol {:.3e}) {}",
            self.support_gradient_norm,
            self.tol,
            mark(self.support_stationary())
        )?;
        writeln!(
            f,
            "  [2] eta*||g_Sbar||_inf      = {:.3e} vs ||alpha||_[s] = {:.3e} {}",
            self.eta * self.off_support_gradient_max,
            self.alpha_sth_largest,
            mark(self.threshold_holds())
        )?;
        writeln!(f, "  [3] ||alpha||_0             = {} (s = {}) {}", self.nnz, self.s, mark(self.sparse()))?;
        writeln!(
            f,
            "  [4] |<alpha, y>|            = {:.3e} {}",
            self.feasibility.abs(),
            mark(self.feasible())
        )?;
        write!(f, "  eta = {:.3e}, eta* = {:.3e}", self.eta, self.eta_star)
    }
}

/// Evaluates the η-stationarity conditions at `z` with tolerance
/// `cfg.eps`.
pub fn check_eta_stationarity(d: &Dataset, z: &DualIterate, cfg: &SolverConfig) -> Result<StationarityReport> {
    let (g, _) = grad_g_with_w(d, z, &cfg.penalties)?;
    let mut support_sq = 0.0;
    let mut off_max = 0.0f64;
    let mut nnz = 0;
    let mut feasibility = 0.0;
    for (i, (&a, &gi)) in z.alpha.iter().zip(&g).enumerate() {
        if a != 0.0 {
            support_sq += gi * gi;
            nnz += 1;
            feasibility += a * d.labels()[i];
        } else {
            off_max = off_max.max(gi.abs());
        }
    }
    Ok(StationarityReport {
        support_gradient_norm: support_sq.sqrt(),
        off_support_gradient_max: off_max,
        alpha_sth_largest: kth_largest_abs(&z.alpha, cfg.s),
        nnz,
        s: cfg.s,
        feasibility,
        eta: cfg.eta,
        eta_star: eta_star(&z.alpha, &g, cfg.s),
        tol: cfg.eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::grad_g;

    fn two_point() -> Dataset {
        Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, -1.0]).unwrap()
    }

    #[test]
    fn residual_at_origin() {
        let d = Dataset::from_rows(
            &[vec![1.0, 0.2], vec![-0.5, 1.0], vec![0.3, -0.3], vec![2.0, 1.0]],
            vec![1.0, -1.0, 1.0, -1.0],
        )
        .unwrap();
        let z = DualIterate { alpha: vec![0.0; 4], b: 0.0 };
        let t = ActiveSet::new(vec![1, 3], 4).unwrap();
        let r = residual_f(&d, &z, &t, &Penalties::default()).unwrap();
        assert_eq!(r.active, vec![-1.0, -1.0]);
        assert_eq!(r.inactive_norm, 0.0);
        assert_eq!(r.feasibility, 0.0);
        assert!((r.norm - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn direction_vanishes_at_root() {
        let d = two_point();
        let p = Penalties::default();
        let cfg = SolverConfig { penalties: p, eta: 0.5, s: 2, eps: 1e-12, max_iter: 50 };
        let fit = solve_fixed_s(&d, &cfg, DualIterate::zero_start(d.labels())).unwrap();
        assert!(fit.converged);
        let state = NewtonState::new(&d, fit.dual_iterate(), &p, cfg.eta, cfg.s).unwrap();
        let dir = newton_direction(&d, &state, &p).unwrap();
        assert!(dir.active.iter().all(|x| x.abs() < 1e-12) && dir.bias.abs() < 1e-12);
    }

    #[test]
    fn two_point_symmetric_solution() {
        // By symmetry α1 = α2 = a, b = 0, and g = 0 gives 2a + a/C = 1.
        let d = two_point();
        let p = Penalties::new(0.25, 0.0025).unwrap();
        let cfg = SolverConfig { penalties: p, eta: 0.5, s: 2, eps: 1e-10, max_iter: 100 };
        let fit = solve_fixed_s(&d, &cfg, DualIterate::zero_start(d.labels())).unwrap();
        assert!(fit.converged);
        let a = 1.0 / (2.0 + 1.0 / 0.25);
        assert!((fit.alpha[0] - a).abs() < 1e-12 && (fit.alpha[1] - a).abs() < 1e-12);
        assert!(fit.b.abs() < 1e-12);
        let report = check_eta_stationarity(&d, &fit.dual_iterate(), &cfg).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn zero_point_fails_threshold_condition() {
        let d = Dataset::from_rows(&[vec![1.0], vec![-1.0], vec![0.5]], vec![1.0, -1.0, 1.0]).unwrap();
        let z = DualIterate { alpha: vec![0.0; 3], b: 0.0 };
        let cfg = SolverConfig { penalties: Penalties::default(), eta: 0.1, s: 2, eps: 1e-6, max_iter: 10 };
        let r = check_eta_stationarity(&d, &z, &cfg).unwrap();
        assert!(!r.passed());
        assert_eq!(r.violated(), vec!["threshold"]);
    }

    #[test]
    fn zero_point_with_full_sparsity_needs_zero_gradient() {
        let d = Dataset::from_rows(&[vec![1.0], vec![-1.0]], vec![1.0, -1.0]).unwrap();
        let z = DualIterate { alpha: vec![0.0; 2], b: 0.0 };
        let cfg = SolverConfig { penalties: Penalties::default(), eta: 0.1, s: 2, eps: 1e-6, max_iter: 10 };
        let r = check_eta_stationarity(&d, &z, &cfg).unwrap();
        assert_eq!(r.alpha_sth_largest, 0.0);
        assert!(!r.passed());
    }

    #[test]
    fn config_validation() {
        let d = two_point();
        let mut cfg = SolverConfig::defaults(2, 2, 3);
        assert!(matches!(
            solve_fixed_s(&d, &cfg, DualIterate::zero_start(d.labels())),
            Err(NssvmError::SparsityOutOfRange { .. })
        ));
        cfg.s = 1;
        cfg.eta = 0.0;
        assert!(solve_fixed_s(&d, &cfg, DualIterate::zero_start(d.labels())).is_err());
        let raw = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            solve_fixed_s(&raw, &SolverConfig::defaults(2, 1, 1), DualIterate::zero_start(raw.labels())),
            Err(NssvmError::NonBinaryLabel(_))
        ));
    }

    #[test]
    fn balanced_start_set() {
        let y = [1.0, 1.0, -1.0, 1.0, -1.0, 1.0];
        assert_eq!(class_balanced_set(&y, 3).unwrap().indices(), &[0, 1, 2]);
        assert_eq!(class_balanced_set(&y, 4).unwrap().indices(), &[0, 1, 2, 4]);
        assert_eq!(class_balanced_set(&y, 5).unwrap().indices(), &[0, 1, 2, 3, 4]);
        assert_eq!(class_balanced_set(&[1.0, -1.0, -1.0, -1.0], 3).unwrap().indices(), &[0, 1, 2]);
        assert!(class_balanced_set(&y, 7).is_err());
    }

    #[test]
    fn default_tolerance() {
        assert!((default_eps(10_000, 2) - 1e-4).abs() < 1e-18);
        assert!((default_eps(4, 100) - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn non_convergence_returns_best_iterate() {
        let d = Dataset::from_rows(
            &[vec![1.0, 0.2], vec![-0.5, 1.0], vec![0.3, -0.3], vec![2.0, 1.0], vec![0.1, 0.1]],
            vec![1.0, -1.0, 1.0, -1.0, 1.0],
        )
        .unwrap();
        let cfg = SolverConfig {
            penalties: Penalties::default(),
            eta: 0.2,
            s: 3,
            eps: 1e-300,
            max_iter: 3,
        };
        let fit = solve_fixed_s(&d, &cfg, DualIterate::zero_start(d.labels())).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iters, 3);
        assert_eq!(fit.residual_history.len(), 4);
        let best = fit.residual_history.iter().cloned().fold(f64::INFINITY, f64::min);
        let p = cfg.penalties;
        let g = grad_g(&d, &fit.dual_iterate(), &p).unwrap();
        let probe: Vec<f64> = fit.alpha.iter().zip(&g).map(|(a, gi)| a - cfg.eta * gi).collect();
        let t = top_s_indices(&probe, cfg.s).unwrap();
        let r = residual_f(&d, &fit.dual_iterate(), &t, &p).unwrap();
        assert_eq!(r.norm, best);
    }
}
