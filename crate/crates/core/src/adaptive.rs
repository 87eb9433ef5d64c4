//! NSSVM: Newton iterations with the sparsity level grown adaptively until
//! both the residual and the training accuracy settle.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{NssvmError, Result};
use crate::linear::{apply_q, decision_values, sign, DualIterate};
use crate::newton::{debug_check_iterate, FitResult, IterRecord, NewtonState, SolverConfig};

/// Accuracy plateau threshold, in percentage points.
pub const ACC_PLATEAU_TOL: f64 = 1e-4;
pub const DEFAULT_SIGMA: f64 = 1.1;
pub const DEFAULT_MAX_IT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    /// `base.s` is the initial sparsity level.
    pub base: SolverConfig,
    /// Growth factor. `1.0` disables growth.
    pub sigma: f64,
    pub max_it: usize,
    pub acc_plateau_tol: f64,
    /// Coefficient used to derive `base.s` through [`default_s0`], when
    /// the level was chosen that way.
    pub beta: Option<f64>,
}

impl AdaptiveConfig {
    pub fn new(base: SolverConfig) -> Self {
        Self {
            base,
            sigma: DEFAULT_SIGMA,
            max_it: DEFAULT_MAX_IT,
            acc_plateau_tol: ACC_PLATEAU_TOL,
            beta: None,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        self.base.validate(m)?;
        if !(self.sigma >= 1.0 && self.sigma.is_finite()) {
            return Err(NssvmError::InvalidConfig(format!("sigma must be >= 1, got {}", self.sigma)));
        }
        if !(self.acc_plateau_tol > 0.0) {
            return Err(NssvmError::InvalidConfig("accuracy plateau tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// `s(β) = ⌈β n (log₂(m/n))²⌉` clamped to `[1, m]`; the log factor is 1
/// when `m <= n`.
pub fn default_s0(beta: f64, m: usize, n: usize) -> usize {
    let log_term = if m > n { (m as f64 / n as f64).log2() } else { 1.0 };
    let s = (beta * n as f64 * log_term * log_term).ceil();
    if s.is_nan() || s < 1.0 {
        1
    } else {
        (s as usize).min(m.max(1))
    }
}

/// Percentage of samples with `sgn(<x_i, w> + b) = y_i`, `sgn(0) = -1`.
pub fn accuracy_of_classifier(d: &Dataset, w: &[f64], b: f64) -> Result<f64> {
    if d.is_empty() {
        return Ok(100.0);
    }
    let f = decision_values(d, w, b)?;
    let wrong = f
        .iter()
        .zip(d.labels())
        .filter(|(fi, y)| sign(**fi) != **y)
        .count();
    Ok((1.0 - wrong as f64 / d.m() as f64) * 100.0)
}

/// Accuracy of the classifier `w = Qα`, `b`.
pub fn accuracy(d: &Dataset, alpha: &[f64], b: f64) -> Result<f64> {
    let w = apply_q(d, alpha)?;
    accuracy_of_classifier(d, &w, b)
}

/// `acc - max(previous) < tol`: the accuracy no longer improves on the best
/// earlier iterate. An empty history counts as a single 0.
pub fn accuracy_plateau(acc: f64, best_previous: Option<f64>, tol: f64) -> bool {
    acc - best_previous.unwrap_or(0.0) < tol
}

/// Runs NSSVM from `z0`. Each step is the fixed-`s` Newton step on the
/// current level `s_k`; the level becomes `min(m, ⌈σ s_k⌉)` after the step
/// when `k` is a positive multiple of 10 or the residual was already below
/// `eps`. Stops when the residual is below `eps` and the training accuracy
/// no longer exceeds the best earlier accuracy, or after `max_it` steps.
pub fn solve_adaptive(d: &Dataset, cfg: &AdaptiveConfig, z0: DualIterate) -> Result<FitResult> {
    d.ensure_binary()?;
    cfg.validate(d.m())?;
    let started = Instant::now();
    let base = &cfg.base;
    let p = &base.penalties;
    let mut s = base.s;
    let mut state = NewtonState::new(d, z0, p, base.eta, s)?;
    let mut history = Vec::new();
    let mut best_acc: Option<f64> = None;

    loop {
        let acc = accuracy_of_classifier(d, &state.w, state.z.b)?;
        let record = IterRecord::capture(&state, d, s, Some(acc));
        if state.iter > 0 {
            debug_check_iterate(&record);
        }
        history.push(record);
        let small_residual = state.residual < base.eps;
        if small_residual && accuracy_plateau(acc, best_acc, cfg.acc_plateau_tol) {
            return Ok(FitResult::from_state(&state, history, started, true, s));
        }
        if state.iter >= cfg.max_it {
            return Ok(FitResult::from_state(&state, history, started, false, s));
        }
        best_acc = Some(best_acc.map_or(acc, |b| b.max(acc)));

        let k = state.iter;
        state.step(d, p)?;
        if (k > 0 && k % 10 == 0) || small_residual {
            s = ((cfg.sigma * s as f64).ceil() as usize).clamp(s, d.m());
        }
        state.select(d, base.eta, s)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::solve_fixed_s;

    #[test]
    fn s0_rule() {
        assert_eq!(default_s0(1.0, 64, 4), 64);
        assert_eq!(default_s0(0.05, 10173, 64), 172);
        assert_eq!(default_s0(0.5, 10, 10), 5);
        assert_eq!(default_s0(0.01, 10, 10), 1);
        assert_eq!(default_s0(3.0, 10, 20), 10);
        assert_eq!(default_s0(100.0, 50, 2), 50);
    }

    #[test]
    fn accuracy_cases() {
        let d = Dataset::from_rows(
            &[vec![1.0], vec![2.0], vec![-1.0], vec![-3.0]],
            vec![1.0, 1.0, -1.0, 1.0],
        )
        .unwrap();
        assert_eq!(accuracy_of_classifier(&d, &[1.0], 0.0).unwrap(), 75.0);
        assert_eq!(accuracy_of_classifier(&d, &[-1.0], 0.0).unwrap(), 25.0);
        // constant predictor -1: share of negative labels
        assert_eq!(accuracy(&d, &[0.0; 4], -1.0).unwrap(), 25.0);
        // w = 0, b = 0 predicts -1 (sgn(0) = -1)
        assert_eq!(accuracy_of_classifier(&d, &[0.0], 0.0).unwrap(), 25.0);
        let sep = Dataset::from_rows(&[vec![1.0], vec![-1.0]], vec![1.0, -1.0]).unwrap();
        assert_eq!(accuracy(&sep, &[0.5, 0.5], 0.0).unwrap(), 100.0);
    }

    #[test]
    fn plateau_rule() {
        assert!(!accuracy_plateau(96.0, None, ACC_PLATEAU_TOL));
        assert!(accuracy_plateau(0.0, None, ACC_PLATEAU_TOL));
        assert!(accuracy_plateau(100.0, Some(100.0), ACC_PLATEAU_TOL));
        assert!(accuracy_plateau(99.9, Some(100.0), ACC_PLATEAU_TOL));
        assert!(!accuracy_plateau(100.0, Some(99.0), ACC_PLATEAU_TOL));
        assert!(!accuracy_plateau(98.0002, Some(98.0), ACC_PLATEAU_TOL));
    }

    fn toy() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 40.0;
                if i % 2 == 0 {
                    vec![1.0 + t, 0.5 - t]
                } else {
                    vec![-1.0 + 0.3 * t, 0.2 + t]
                }
            })
            .collect();
        let labels = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn sigma_one_matches_fixed_prefix() {
        let d = toy();
        let base = SolverConfig::defaults(d.m(), d.n(), 6);
        let mut cfg = AdaptiveConfig::new(base.clone());
        cfg.sigma = 1.0;
        let z0 = DualIterate::zero_start(d.labels());
        let adaptive = solve_adaptive(&d, &cfg, z0.clone()).unwrap();
        let fixed = solve_fixed_s(&d, &base, z0).unwrap();
        assert!(fixed.converged);
        let k = fixed.residual_history.len();
        assert!(adaptive.residual_history.len() >= k);
        assert_eq!(&adaptive.residual_history[..k], &fixed.residual_history[..]);
        assert!(adaptive.history.iter().all(|r| r.s == 6));
    }

    #[test]
    fn sparsity_level_grows_monotonically() {
        let d = toy();
        let cfg = AdaptiveConfig::new(SolverConfig::defaults(d.m(), d.n(), 2));
        let fit = solve_adaptive(&d, &cfg, DualIterate::zero_start(d.labels())).unwrap();
        assert!(fit.history.windows(2).all(|w| w[0].s <= w[1].s));
        assert!(fit.history.iter().all(|r| r.s <= d.m() && r.nnz <= r.s));
        assert!(fit.acc_history.iter().all(|a| (0.0..=100.0).contains(a)));
        assert!(fit.nsv() <= fit.final_s);
    }
}
