//! Sparse linear support vector machines trained by a hard-thresholded
//! Newton method on the sparsity-constrained dual.
//!
//! The dual variable `α` is kept `s`-sparse, so the number of support
//! vectors is fixed by the caller (or grown adaptively by [`solve_adaptive`]).

pub mod adaptive;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod linear;
pub mod metrics;
pub mod newton;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod profile;
pub mod projection;
pub mod solver;

pub use adaptive::{accuracy, accuracy_of_classifier, default_s0, solve_adaptive, AdaptiveConfig};
pub use dataset::{gen_gaussian_2d, parse_libsvm, split_train_test, write_libsvm, Dataset, SplitDataset};
pub use error::{NssvmError, Result};
pub use linear::{dual_objective, grad_g, recover_primal, DualIterate, Penalties};
pub use metrics::{evaluate, run_trials, BenchReport, BenchSpec, DataSource, Metrics, TrialReport};
pub use newton::{check_eta_stationarity, solve_fixed_s, FitResult, SolverConfig, StationarityReport};
pub use profile::{Profile, Settings};
pub use solver::{Solver, SolverRegistry};
