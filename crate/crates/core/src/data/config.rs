use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::EvalOptions;
use crate::hypertime::{AlphaPolicy, TrainConfig};
use crate::imputation::{ImputeOptions, TvSampling};
use crate::inr::{self, Activation, CompareOptions, FitOptions, MlpSpec};

/// Settings for single-series INR fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InrConfig {
    pub epochs: usize,
    pub lr: f64,
    pub omega0: f64,
    pub activation: Activation,
    pub hidden: Vec<usize>,
}

impl Default for InrConfig {
    fn default() -> Self {
        InrConfig {
            epochs: 2000,
            lr: 1e-4,
            omega0: inr::DEFAULT_OMEGA0,
            activation: Activation::Sine,
            hidden: inr::INR_HIDDEN.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImputationConfig {
    pub missing_fractions: Vec<f64>,
    pub tv_weight: f64,
    pub tv_sampling: TvSampling,
    pub knn_k: usize,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            missing_fractions: vec![0.0, 0.1, 0.3, 0.5],
            tv_weight: 1e-5,
            tv_sampling: TvSampling::Observed,
            knn_k: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub n_samples: usize,
    pub alpha: AlphaPolicy,
    pub pca_components: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            n_samples: 100,
            alpha: AlphaPolicy::default(),
            pca_components: 40,
        }
    }
}

/// Everything a command-line run can be configured with. Read from a
/// single JSON document; absent keys take their defaults and unknown keys
/// are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Larger datasets are subsampled to this many series.
    pub max_series: usize,
    pub inr: InrConfig,
    pub imputation: ImputationConfig,
    pub hypertime: TrainConfig,
    pub generation: GenerationConfig,
    pub evaluation: EvalOptions,
    /// Where outputs go when no explicit path is given.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            max_series: 300,
            inr: InrConfig::default(),
            imputation: ImputationConfig::default(),
            hypertime: TrainConfig::default(),
            generation: GenerationConfig::default(),
            evaluation: EvalOptions::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.max_series == 0 {
            return bad("max_series must be positive".into());
        }
        let i = &self.inr;
        if i.epochs == 0 || !(i.lr.is_finite() && i.lr > 0.0) {
            return bad(format!("inr: epochs must be positive and lr > 0 (got {}, {})", i.epochs, i.lr));
        }
        if !(i.omega0.is_finite() && i.omega0 > 0.0) {
            return bad(format!("inr: omega0 must be positive, got {}", i.omega0));
        }
        if i.hidden.is_empty() || i.hidden.contains(&0) {
            return bad("inr: hidden widths must be non-empty and positive".into());
        }
        let m = &self.imputation;
        if m.missing_fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
            return bad("imputation: missing fractions must lie in [0, 1)".into());
        }
        if !(m.tv_weight.is_finite() && m.tv_weight >= 0.0) || m.knn_k == 0 {
            return bad("imputation: tv_weight must be >= 0 and knn_k positive".into());
        }
        self.hypertime.validate()?;
        let g = &self.generation;
        g.alpha.validate()?;
        if g.n_samples == 0 || g.pca_components == 0 {
            return bad("generation: n_samples and pca_components must be positive".into());
        }
        self.evaluation.validate()
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            epochs: self.inr.epochs,
            lr: self.inr.lr,
            seed: self.seed,
        }
    }

    /// Network for `channels`-channel series with the configured activation.
    pub fn inr_spec(&self, channels: usize) -> Result<MlpSpec> {
        let mut widths = vec![1];
        widths.extend(&self.inr.hidden);
        widths.push(channels);
        MlpSpec::new(widths, self.inr.activation, self.inr.omega0)
    }

    pub fn compare_options(&self) -> CompareOptions {
        CompareOptions {
            hidden: self.inr.hidden.clone(),
            omega0: self.inr.omega0,
            fit: self.fit_options(),
            max_series: self.max_series,
        }
    }

    pub fn impute_options(&self) -> ImputeOptions {
        ImputeOptions {
            fit: self.fit_options(),
            hidden: self.inr.hidden.clone(),
            omega0: self.inr.omega0,
            tv_weight: self.imputation.tv_weight,
            tv_sampling: self.imputation.tv_sampling,
            knn_k: self.imputation.knn_k,
        }
    }
}
