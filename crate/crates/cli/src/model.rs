use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use nssvm::dataset::ColumnScaling;
use nssvm::{AdaptiveConfig, Dataset, DualIterate, FitResult, Profile};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub profile: Profile,
    pub solver: String,
    pub solver_config: AdaptiveConfig,
    /// Sparsity level in force when the solver stopped.
    pub final_s: usize,
}

/// Training-time quantities; no timing so that files are reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub m: usize,
    pub acc: f64,
    pub tacc: Option<f64>,
    pub nsv: usize,
    pub nsv_ratio: f64,
    pub iters: usize,
    pub converged: bool,
}

/// A trained classifier. Only the support coordinates of alpha are kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub n: usize,
    pub b: f64,
    pub support: Vec<usize>,
    pub alpha: Vec<f64>,
    pub w: Vec<f64>,
    pub config: ModelConfig,
    pub metrics: ModelMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ColumnScaling>,
}

impl Model {
    pub fn from_fit(
        fit: &FitResult,
        n: usize,
        config: ModelConfig,
        metrics: ModelMetrics,
        scaling: Option<ColumnScaling>,
    ) -> Self {
        let support = fit.support.indices().to_vec();
        let alpha = support.iter().map(|&i| fit.alpha[i]).collect();
        Self {
            n,
            b: fit.b,
            support,
            alpha,
            w: fit.w.clone(),
            config,
            metrics,
            scaling,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).with_context(|| format!("cannot open model {}", path.display()))?;
        let model: Model = serde_json::from_reader(BufReader::new(f))
            .with_context(|| format!("malformed model {}", path.display()))?;
        if model.w.len() != model.n {
            bail!("model has n = {} but {} weights", model.n, model.w.len());
        }
        if model.alpha.len() != model.support.len() {
            bail!("model has {} support indices but {} alpha values", model.support.len(), model.alpha.len());
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(f);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    /// Applies the stored scaling and pads `d` to the model width.
    pub fn prepare(&self, d: &Dataset) -> Result<Dataset> {
        if d.n() > self.n {
            bail!("data has {} features but the model was trained on {}", d.n(), self.n);
        }
        let d = d.with_feature_count(self.n)?;
        Ok(match &self.scaling {
            Some(sc) => sc.apply(&d),
            None => d,
        })
    }

    /// Full-length dual iterate on a training set with `m` samples.
    pub fn dual_iterate(&self, m: usize) -> Result<DualIterate> {
        let mut alpha = vec![0.0; m];
        for (&i, &a) in self.support.iter().zip(&self.alpha) {
            if i >= m {
                bail!("support index {i} exceeds the {m} samples of the data");
            }
            alpha[i] = a;
        }
        Ok(DualIterate { alpha, b: self.b })
    }
}
