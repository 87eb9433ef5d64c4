//! Reported quantities and the repeated-trial benchmark protocol.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::accuracy_of_classifier;
use crate::dataset::{gen_gaussian_2d, split_train_test, Dataset, SplitDataset};
use crate::error::{NssvmError, Result};
use crate::linear::DualIterate;
use crate::newton::{check_eta_stationarity, FitResult};
use crate::profile::Settings;
use crate::solver::SolverRegistry;

/// Quantities for one fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Training accuracy, percent.
    pub acc: f64,
    /// Test accuracy, percent; absent without a test set.
    pub tacc: Option<f64>,
    /// Exact nonzeros of `alpha`.
    pub nsv: usize,
    pub nsv_ratio: f64,
    pub iters: usize,
    pub time_seconds: f64,
}

/// Metrics of `fit` on its training set and, when given, a test set.
pub fn evaluate(fit: &FitResult, train: &Dataset, test: Option<&Dataset>) -> Result<Metrics> {
    if fit.alpha.len() != train.m() {
        return Err(NssvmError::DimensionMismatch {
            expected: train.m(),
            found: fit.alpha.len(),
        });
    }
    let acc = accuracy_of_classifier(train, &fit.w, fit.b)?;
    let tacc = match test {
        Some(t) if !t.is_empty() => Some(accuracy_of_classifier(t, &fit.w, fit.b)?),
        _ => None,
    };
    let nsv = fit.alpha.iter().filter(|a| **a != 0.0).count();
    Ok(Metrics {
        acc,
        tacc,
        nsv,
        nsv_ratio: nsv as f64 / train.m().max(1) as f64,
        iters: fit.iters,
        time_seconds: fit.wall_time,
    })
}

/// Outcome of one trial. `metrics` is `None` when the trial failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub m: usize,
    pub metrics: Option<Metrics>,
    pub converged: bool,
    pub final_s: usize,
    /// η-stationarity at the returned point, tolerance `eps`.
    pub stationary: bool,
    /// Per-iteration sparsity and feasibility invariants.
    pub invariants_ok: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub solver: String,
    pub acc: f64,
    pub tacc: Option<f64>,
    pub nsv: f64,
    pub nsv_ratio: f64,
    pub time_seconds: f64,
    pub iters: f64,
    pub trials: usize,
    pub failures: usize,
    pub per_trial: Vec<TrialReport>,
}

impl BenchReport {
    /// Means over the successful trials.
    pub fn from_trials(solver: &str, per_trial: Vec<TrialReport>) -> Self {
        let ok: Vec<&Metrics> = per_trial.iter().filter_map(|t| t.metrics.as_ref()).collect();
        let count = ok.len().max(1) as f64;
        let mean = |f: &dyn Fn(&Metrics) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|m| f(m)).sum::<f64>() / count
            }
        };
        let taccs: Vec<f64> = ok.iter().filter_map(|m| m.tacc).collect();
        let tacc = (!taccs.is_empty() && taccs.len() == ok.len())
            .then(|| taccs.iter().sum::<f64>() / taccs.len() as f64);
        Self {
            solver: solver.to_string(),
            acc: mean(&|m| m.acc),
            tacc,
            nsv: mean(&|m| m.nsv as f64),
            nsv_ratio: mean(&|m| m.nsv_ratio),
            time_seconds: mean(&|m| m.time_seconds),
            iters: mean(&|m| m.iters as f64),
            trials: per_trial.len(),
            failures: per_trial.len() - ok.len(),
            per_trial,
        }
    }

    pub fn successes(&self) -> usize {
        self.trials - self.failures
    }

    /// Zeroes every timing field so reports can be compared byte for byte.
    pub fn strip_timing(&mut self) {
        self.time_seconds = 0.0;
        for t in &mut self.per_trial {
            if let Some(m) = t.metrics.as_mut() {
                m.time_seconds = 0.0;
            }
        }
    }
}

/// Where the samples of a trial come from.
#[derive(Clone, Debug)]
pub enum DataSource {
    /// The two-Gaussian benchmark with `m` training and `m` test samples.
    Gaussian { m: usize },
    /// A loaded dataset, split per seed when `train_fraction` is set and
    /// used whole (no test set) otherwise.
    Loaded {
        data: Arc<Dataset>,
        train_fraction: Option<f64>,
    },
}

impl DataSource {
    pub fn materialize(&self, seed: u64) -> Result<SplitDataset> {
        match self {
            DataSource::Gaussian { m } => gen_gaussian_2d(*m, seed),
            DataSource::Loaded {
                data,
                train_fraction: Some(f),
            } => split_train_test(data, *f, seed),
            DataSource::Loaded {
                data,
                train_fraction: None,
            } => Ok(SplitDataset {
                train: (**data).clone(),
                test: Dataset::empty(data.n()),
            }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub source: DataSource,
    pub settings: Settings,
    pub solver: String,
}

fn run_one(spec: &BenchSpec, registry: &SolverRegistry, seed: u64) -> TrialReport {
    let mut report = TrialReport {
        seed,
        m: 0,
        metrics: None,
        converged: false,
        final_s: 0,
        stationary: false,
        invariants_ok: false,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let data = spec.source.materialize(seed)?;
        let train = &data.train;
        report.m = train.m();
        let cfg = spec.settings.resolve(train.m(), train.n())?;
        let solver = registry.create(&spec.solver, &cfg)?;
        let z0 = DualIterate::zero_start(train.labels());
        let started = Instant::now();
        let mut fit = solver.fit(train, z0)?;
        fit.wall_time = started.elapsed().as_secs_f64();
        report.metrics = Some(evaluate(&fit, train, Some(&data.test))?);
        report.converged = fit.converged;
        report.final_s = fit.final_s;
        let mut check_cfg = cfg.base.clone();
        check_cfg.s = fit.final_s;
        report.stationary = check_eta_stationarity(train, &fit.dual_iterate(), &check_cfg)?.passed();
        report.invariants_ok = fit.history.iter().all(|r| r.invariants_hold());
        Ok(())
    })();
    if let Err(e) = outcome {
        report.metrics = None;
        report.error = Some(e.to_string());
    }
    report
}

/// Runs one trial per seed. With `parallel` the trials fan out over the
/// rayon pool; reports are returned in seed order either way.
pub fn run_trials(spec: &BenchSpec, seeds: &[u64], parallel: bool) -> Result<BenchReport> {
    if seeds.is_empty() {
        return Err(NssvmError::InvalidConfig("at least one trial is required".into()));
    }
    let registry = SolverRegistry::default();
    if !registry.contains(&spec.solver) {
        return Err(NssvmError::UnknownSolver(spec.solver.clone()));
    }
    let per_trial: Vec<TrialReport> = if parallel {
        seeds.par_iter().map(|&s| run_one(spec, &registry, s)).collect()
    } else {
        seeds.iter().map(|&s| run_one(spec, &registry, s)).collect()
    };
    Ok(BenchReport::from_trials(&spec.solver, per_trial))
}

/// `trials` consecutive seeds starting at `first`.
pub fn seed_range(first: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|k| first.wrapping_add(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use crate::projection::ActiveSet;

    fn fit_with(alpha: Vec<f64>, w: Vec<f64>, b: f64) -> FitResult {
        FitResult {
            support: ActiveSet::support_of(&alpha),
            alpha,
            b,
            w,
            iters: 3,
            residual_history: vec![],
            acc_history: vec![],
            history: vec![],
            wall_time: 0.5,
            converged: true,
            final_s: 2,
        }
    }

    #[test]
    fn perfect_and_empty_fits() {
        let d = Dataset::from_rows(&[vec![1.0], vec![-1.0], vec![2.0]], vec![1.0, -1.0, 1.0]).unwrap();
        let m = evaluate(&fit_with(vec![0.1, 0.1, 0.0], vec![1.0], 0.0), &d, Some(&d)).unwrap();
        assert_eq!((m.acc, m.tacc), (100.0, Some(100.0)));
        assert_eq!(m.nsv, 2);
        let zero = evaluate(&fit_with(vec![0.0; 3], vec![0.0], -1.0), &d, None).unwrap();
        assert_eq!(zero.nsv, 0);
        assert_eq!(zero.tacc, None);
        assert!(evaluate(&fit_with(vec![0.0; 2], vec![0.0], 0.0), &d, None).is_err());
    }

    #[test]
    fn single_trial_mean_is_the_trial() {
        let spec = BenchSpec {
            source: DataSource::Gaussian { m: 300 },
            settings: Settings::new(Profile::SynthSmall),
            solver: "nssvm".into(),
        };
        let r = run_trials(&spec, &[3], false).unwrap();
        let t = r.per_trial[0].metrics.as_ref().unwrap();
        assert_eq!(r.acc, t.acc);
        assert_eq!(r.tacc, t.tacc);
        assert_eq!(r.nsv, t.nsv as f64);
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn identical_seeds_identical_trials() {
        let spec = BenchSpec {
            source: DataSource::Gaussian { m: 200 },
            settings: Settings::new(Profile::SynthSmall),
            solver: "nssvm".into(),
        };
        let mut r = run_trials(&spec, &[5, 5], true).unwrap();
        r.strip_timing();
        assert_eq!(r.per_trial[0], r.per_trial[1]);
    }

    #[test]
    fn failures_are_counted_not_fatal() {
        let mut settings = Settings::new(Profile::SynthSmall);
        settings.s = Some(1_000_000);
        let spec = BenchSpec {
            source: DataSource::Gaussian { m: 50 },
            settings,
            solver: "nssvm".into(),
        };
        let r = run_trials(&spec, &[1, 2], false).unwrap();
        assert_eq!(r.failures, 2);
        assert!(r.per_trial.iter().all(|t| t.error.is_some()));
        assert!(r.acc.is_nan());
    }

    #[test]
    fn seeds_are_consecutive() {
        assert_eq!(seed_range(7, 3), vec![7, 8, 9]);
    }
}
