//! Interchangeable solvers behind one trait, looked up by name.

use std::collections::BTreeMap;
use std::fmt;

use crate::adaptive::{solve_adaptive, AdaptiveConfig};
use crate::dataset::Dataset;
use crate::error::{NssvmError, Result};
use crate::linear::DualIterate;
use crate::newton::{solve_fixed_s, FitResult};

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Runs the solver from `z0`. Solvers that do not iterate ignore it.
    fn fit(&self, d: &Dataset, z0: DualIterate) -> Result<FitResult>;
}

impl fmt::Debug for dyn Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Solver({})", self.name())
    }
}

/// Newton iterations with `s` held at `config.base.s`.
#[derive(Clone, Debug)]
pub struct NewtonFixed {
    pub config: AdaptiveConfig,
}

impl Solver for NewtonFixed {
    fn name(&self) -> &'static str {
        "newton"
    }

    fn fit(&self, d: &Dataset, z0: DualIterate) -> Result<FitResult> {
        solve_fixed_s(d, &self.config.base, z0)
    }
}

/// Newton iterations with adaptive growth of `s`.
#[derive(Clone, Debug)]
pub struct Nssvm {
    pub config: AdaptiveConfig,
}

impl Solver for Nssvm {
    fn name(&self) -> &'static str {
        "nssvm"
    }

    fn fit(&self, d: &Dataset, z0: DualIterate) -> Result<FitResult> {
        solve_adaptive(d, &self.config, z0)
    }
}

#[cfg(feature = "oracle")]
pub use enumeration::Enumeration;

#[cfg(feature = "oracle")]
mod enumeration {
    use std::time::Instant;

    use super::*;
    use crate::linear::apply_q;
    use crate::oracle::enumerate_global;
    use crate::projection::ActiveSet;

    /// Exhaustive search over supports; tiny instances only.
    #[derive(Clone, Debug)]
    pub struct Enumeration {
        pub config: AdaptiveConfig,
    }

    impl Solver for Enumeration {
        fn name(&self) -> &'static str {
            "enumerate"
        }

        fn fit(&self, d: &Dataset, _z0: DualIterate) -> Result<FitResult> {
            let started = Instant::now();
            let s = self.config.base.s;
            let res = enumerate_global(d, s, &self.config.base.penalties)?;
            let w = apply_q(d, &res.best_alpha)?;
            Ok(FitResult {
                support: ActiveSet::support_of(&res.best_alpha),
                alpha: res.best_alpha,
                b: res.best_b,
                w,
                iters: 0,
                residual_history: Vec::new(),
                acc_history: Vec::new(),
                history: Vec::new(),
                wall_time: started.elapsed().as_secs_f64(),
                converged: true,
                final_s: s,
            })
        }
    }
}

pub type SolverFactory = fn(&AdaptiveConfig) -> Box<dyn Solver>;

/// Name to constructor map.
#[derive(Clone)]
pub struct SolverRegistry {
    factories: BTreeMap<&'static str, SolverFactory>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register("nssvm", |c| Box::new(Nssvm { config: c.clone() }));
        reg.register("newton", |c| Box::new(NewtonFixed { config: c.clone() }));
        #[cfg(feature = "oracle")]
        reg.register("enumerate", |c| Box::new(Enumeration { config: c.clone() }));
        reg
    }
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Adds or replaces a solver.
    pub fn register(&mut self, name: &'static str, factory: SolverFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, name: &str, config: &AdaptiveConfig) -> Result<Box<dyn Solver>> {
        self.factories
            .get(name)
            .map(|f| f(config))
            .ok_or_else(|| NssvmError::UnknownSolver(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::SolverConfig;

    #[test]
    fn registry_lookup() {
        let reg = SolverRegistry::default();
        assert!(reg.contains("nssvm") && reg.contains("newton"));
        let cfg = AdaptiveConfig::new(SolverConfig::defaults(4, 1, 2));
        assert_eq!(reg.create("newton", &cfg).unwrap().name(), "newton");
        assert!(matches!(reg.create("smo", &cfg), Err(NssvmError::UnknownSolver(_))));
    }

    #[cfg(feature = "oracle")]
    #[test]
    fn enumeration_beats_or_ties_newton() {
        let d = Dataset::from_rows(
            &[vec![1.0, 0.3], vec![-0.4, 1.0], vec![0.8, -0.5], vec![-1.2, 0.1], vec![0.2, 0.9]],
            vec![1.0, -1.0, 1.0, -1.0, -1.0],
        )
        .unwrap();
        let cfg = AdaptiveConfig::new(SolverConfig::defaults(5, 2, 2));
        let reg = SolverRegistry::default();
        let z0 = DualIterate::zero_start(d.labels());
        let exact = reg.create("enumerate", &cfg).unwrap().fit(&d, z0.clone()).unwrap();
        let newton = reg.create("newton", &cfg).unwrap().fit(&d, z0).unwrap();
        let p = cfg.base.penalties;
        let obj = |a: &[f64]| crate::linear::dual_objective(&d, a, &p).unwrap();
        assert!(obj(&newton.alpha) >= obj(&exact.alpha) - 1e-9);
        assert!(exact.nsv() <= 2);
    }
}
