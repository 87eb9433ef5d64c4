//! Named parameter presets and the resolution of user settings into a
//! concrete solver configuration for a given training set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaptive::{default_s0, AdaptiveConfig, ACC_PLATEAU_TOL, DEFAULT_MAX_IT, DEFAULT_SIGMA};
use crate::error::{NssvmError, Result};
use crate::linear::Penalties;
use crate::newton::{default_eps, SolverConfig, DEFAULT_MAX_ITER};

pub const DEFAULT_C: f64 = 0.25;
/// `c = C_RATIO * C`
pub const DEFAULT_C_RATIO: f64 = 0.01;
/// Synthetic problems up to this many training samples use `synth-small`.
pub const SYNTH_SMALL_MAX_M: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `C = 0.25`, `s0 = s(0.5)`
    SynthSmall,
    /// `C = 0.25`, `s0 = s(1)`
    SynthLarge,
    /// `C = 0.25`, `s0 = s(0.05)`
    RealDefault,
    /// `C = log2(m)`, `s0 = s(10)`
    RealHeavy,
    /// `C = 0.25`, `s0 = s(0.2)`; the adult family a5a-a9a.
    RealAdult,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::SynthSmall,
        Profile::SynthLarge,
        Profile::RealDefault,
        Profile::RealHeavy,
        Profile::RealAdult,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::SynthSmall => "synth-small",
            Profile::SynthLarge => "synth-large",
            Profile::RealDefault => "real-default",
            Profile::RealHeavy => "real-heavy",
            Profile::RealAdult => "real-adult",
        }
    }

    pub fn big_c(self, m: usize) -> f64 {
        match self {
            Profile::RealHeavy => (m.max(2) as f64).log2(),
            _ => DEFAULT_C,
        }
    }

    pub fn beta(self) -> f64 {
        match self {
            Profile::SynthSmall => 0.5,
            Profile::SynthLarge => 1.0,
            Profile::RealDefault => 0.05,
            Profile::RealHeavy => 10.0,
            Profile::RealAdult => 0.2,
        }
    }

    /// Preset for the Gaussian benchmark with `m` training samples.
    pub fn for_synthetic(m: usize) -> Self {
        if m <= SYNTH_SMALL_MAX_M {
            Profile::SynthSmall
        } else {
            Profile::SynthLarge
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = NssvmError;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| NssvmError::InvalidConfig(format!("unknown profile '{s}'")))
    }
}

/// User-facing knobs. Every `None` falls back to the profile or to the
/// data-dependent default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub profile: Profile,
    pub big_c: Option<f64>,
    pub c_ratio: f64,
    pub eta: Option<f64>,
    /// Explicit initial sparsity level; overrides `beta`.
    pub s: Option<usize>,
    pub beta: Option<f64>,
    pub sigma: f64,
    pub eps: Option<f64>,
    pub max_iter: usize,
    pub max_it: usize,
}

impl Settings {
    pub fn new(profile: Profile) -> Self {
        Self {
            profile,
            big_c: None,
            c_ratio: DEFAULT_C_RATIO,
            eta: None,
            s: None,
            beta: None,
            sigma: DEFAULT_SIGMA,
            eps: None,
            max_iter: DEFAULT_MAX_ITER,
            max_it: DEFAULT_MAX_IT,
        }
    }

    /// Concrete configuration for a training set of shape `m x n`.
    pub fn resolve(&self, m: usize, n: usize) -> Result<AdaptiveConfig> {
        if m == 0 {
            return Err(NssvmError::EmptyInput);
        }
        if !(self.c_ratio > 0.0 && self.c_ratio < 1.0) {
            return Err(NssvmError::InvalidConfig(format!(
                "c/C ratio must lie in (0, 1), got {}",
                self.c_ratio
            )));
        }
        let big_c = self.big_c.unwrap_or_else(|| self.profile.big_c(m));
        let penalties = Penalties::with_ratio(big_c, self.c_ratio)?;
        let beta = self.beta.unwrap_or_else(|| self.profile.beta());
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(NssvmError::InvalidConfig(format!("beta must be positive, got {beta}")));
        }
        let (s, beta_used) = match self.s {
            Some(s) => (s, None),
            None => (default_s0(beta, m, n), Some(beta)),
        };
        let base = SolverConfig {
            penalties,
            eta: self.eta.unwrap_or(1.0 / m as f64),
            s,
            eps: self.eps.unwrap_or_else(|| default_eps(m, n)),
            max_iter: self.max_iter,
        };
        let cfg = AdaptiveConfig {
            base,
            sigma: self.sigma,
            max_it: self.max_it,
            acc_plateau_tol: ACC_PLATEAU_TOL,
            beta: beta_used,
        };
        cfg.validate(m)?;
        Ok(cfg)
    }
}
