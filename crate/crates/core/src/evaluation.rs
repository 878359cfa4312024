//! Scores for synthetic series: train-on-synthetic/test-on-real predictive
//! error, per-timestep precision and recall, and helpers for spectral
//! profiles, projections and the spectral-loss ablation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::{AdamConfig, AdamState, Tape, Tensor};
use crate::data::format_value;
use crate::error::{Error, Result};
use crate::hypertime::{self, AlphaPolicy, LossComponents, TrainConfig};
use crate::inr::{forward_on_tape, init_params, Activation, MlpSpec};
use crate::pca::Pca;
use crate::series::{ChannelScale, TimeSeries};
use crate::spectral;

/// Slack added to both ends of a quantile band so that a collapsed band
/// still contains its own value.
pub const BAND_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorSpec {
    /// Number of lags fed to the predictor.
    pub window: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        PredictorSpec {
            window: 8,
            hidden: 32,
            epochs: 500,
            lr: 1e-3,
            seed: 0,
        }
    }
}

impl PredictorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hidden == 0 || self.epochs == 0 {
            return Err(Error::Config("predictor window, hidden and epochs must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("predictor lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// How raw values are mapped to a common scale before scoring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// One min-max scale per channel, fitted on the whole real set and
    /// applied to both sets.
    #[default]
    Global,
    /// Each series keeps its own normalized values.
    PerSeries,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions {
    pub band: [f64; 2],
    pub predictor: PredictorSpec,
    pub normalization: Normalization,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            band: [0.01, 0.99],
            predictor: PredictorSpec::default(),
            normalization: Normalization::Global,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!("band {lo}..{hi} must satisfy 0 <= lo < hi <= 1")));
        }
        self.predictor.validate()
    }

    /// Hex SHA-256 of the options' JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("options serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub predictive_mae: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_real: usize,
    pub n_synth: usize,
    pub config_hash: String,
}

fn require_observed(set: &[TimeSeries], what: &str) -> Result<()> {
    if set.iter().any(|s| s.n_observed() != s.len()) {
        return Err(Error::invalid(format!("{what} series must be fully observed")));
    }
    Ok(())
}

fn common_shape(set: &[TimeSeries], what: &str) -> Result<(usize, usize)> {
    let first = set
        .first()
        .ok_or_else(|| Error::invalid(format!("{what} set is empty")))?;
    let shape = (first.len(), first.channels());
    if set.iter().any(|s| (s.len(), s.channels()) != shape) {
        return Err(Error::invalid(format!("{what} series must share length and channel count")));
    }
    Ok(shape)
}

/// Re-expresses both sets on one scale per channel fitted to all real raw
/// values.
pub fn normalize_jointly(real: &[TimeSeries], synth: &[TimeSeries]) -> Result<(Vec<TimeSeries>, Vec<TimeSeries>)> {
    let (_, c) = common_shape(real, "real")?;
    let raw_real: Vec<Vec<Vec<f64>>> = real.iter().map(TimeSeries::denormalized).collect();
    let scales: Vec<ChannelScale> = (0..c)
        .map(|ch| {
            let all: Vec<f64> = raw_real.iter().flat_map(|s| s[ch].iter().copied()).collect();
            ChannelScale::fit(&all)
        })
        .collect();
    let rescale = |raw: Vec<Vec<f64>>| TimeSeries::from_raw_with_scale(raw, scales.clone());
    let real = raw_real.into_iter().map(rescale).collect::<Result<Vec<_>>>()?;
    let synth = synth
        .iter()
        .map(|s| {
            if s.channels() != c {
                return Err(Error::invalid("real and synthetic channel counts differ"));
            }
            rescale(s.denormalized())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((real, synth))
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fraction of `values` inside the `[q_lo, q_hi]` band of `reference`.
fn coverage(reference: &mut [f64], values: &[f64], band: [f64; 2]) -> f64 {
    reference.sort_by(f64::total_cmp);
    let lo = quantile(reference, band[0]) - BAND_EPS;
    let hi = quantile(reference, band[1]) + BAND_EPS;
    values.iter().filter(|&&v| v >= lo && v <= hi).count() as f64 / values.len() as f64
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Per-timestep precision (synthetic values inside the real quantile band)
/// and recall (real values inside the synthetic band), averaged over time
/// steps and channels. Values are taken as stored in the series.
pub fn precision_recall_f1(real: &[TimeSeries], synth: &[TimeSeries], band: [f64; 2]) -> Result<(f64, f64, f64)> {
    let (n, c) = common_shape(real, "real")?;
    if common_shape(synth, "synthetic")? != (n, c) {
        return Err(Error::invalid("real and synthetic series differ in length or channels"));
    }
    if real.len() < 10 || synth.len() < 10 {
        return Err(Error::invalid("precision/recall needs at least 10 series per set"));
    }
    require_observed(real, "real")?;
    require_observed(synth, "synthetic")?;
    let (mut p, mut r) = (0.0, 0.0);
    for ch in 0..c {
        for i in 0..n {
            let mut at_real: Vec<f64> = real.iter().map(|s| s.channel(ch)[i]).collect();
            let mut at_synth: Vec<f64> = synth.iter().map(|s| s.channel(ch)[i]).collect();
            let real_copy = at_real.clone();
            let synth_copy = at_synth.clone();
            p += coverage(&mut at_real, &synth_copy, band);
            r += coverage(&mut at_synth, &real_copy, band);
        }
    }
    let steps = (n * c) as f64;
    let (p, r) = (p / steps, r / steps);
    Ok((p, r, f1_score(p, r)))
}

/// Sliding windows `(x[i..i+p], x[i+p])` over every channel of every series.
fn windows(set: &[Vec<f64>], p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in set {
        for w in s.windows(p + 1) {
            x.extend_from_slice(&w[..p]);
            y.push(w[p]);
        }
    }
    (x, y)
}

fn channel_vectors(set: &[TimeSeries]) -> Vec<Vec<f64>> {
    set.iter().flat_map(|s| s.values().iter().cloned()).collect()
}

/// Train-on-synthetic, test-on-real: fits a one-hidden-layer ReLU MLP to
/// predict the next value from `window` lags of the synthetic series, then
/// reports its mean absolute error on every window of the real series.
///
/// The output layer starts at zero. Synthetic channels are put in a
/// canonical order before training, so the score does not depend on the
/// order of `synth`.
pub fn predictive_score(synth: &[TimeSeries], real: &[TimeSeries], spec: &PredictorSpec) -> Result<f64> {
    spec.validate()?;
    let (n_synth, _) = common_shape(synth, "synthetic")?;
    let (n_real, _) = common_shape(real, "real")?;
    if n_synth.min(n_real) <= spec.window {
        return Err(Error::invalid(format!(
            "series of length {} are too short for window {}",
            n_synth.min(n_real),
            spec.window
        )));
    }
    require_observed(real, "real")?;
    require_observed(synth, "synthetic")?;

    let mut train = channel_vectors(synth);
    train.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let (x, y) = windows(&train, spec.window);
    let rows = y.len();
    let x = Tensor::matrix(rows, spec.window, x)?;
    let y = Tensor::column(y);

    let net = MlpSpec::new(vec![spec.window, spec.hidden, 1], Activation::Relu, 1.0)?;
    let mut init = init_params(&net, spec.seed);
    let out_layer = net.layers()[1];
    init.flat_mut()[out_layer.weight_offset..].iter_mut().for_each(|v| *v = 0.0);
    let mut params = vec![Tensor::row(init.into_flat())];
    let mut adam = AdamState::new(AdamConfig::with_lr(spec.lr), &params);
    for epoch in 0..spec.epochs {
        let mut tape = Tape::new();
        let w = tape.param(params[0].clone());
        let xi = tape.constant(x.clone());
        let yi = tape.constant(y.clone());
        let out = forward_on_tape(&mut tape, &net, w, 0, xi)?;
        let d = tape.sub(out, yi)?;
        let sq = tape.square(d)?;
        let loss = tape.mean(sq)?;
        let mut grads = tape.backward(loss)?;
        let g = grads.take(w);
        adam.step(&mut params, &[g]).map_err(|_| Error::Divergence {
            epoch,
            component: "predictor gradient".into(),
            value: f64::NAN,
        })?;
    }

    let (xr, yr) = windows(&channel_vectors(real), spec.window);
    let xr = Tensor::matrix(yr.len(), spec.window, xr)?;
    let weights = crate::inr::ParamVector::new(net, params.pop().unwrap().into_data())?;
    let pred = crate::inr::evaluate_rows(&weights, &xr)?;
    let mae = pred.data().iter().zip(&yr).map(|(p, t)| (p - t).abs()).sum::<f64>() / yr.len() as f64;
    Ok(mae)
}

/// All scores for one (real, synthetic) pair under `opts`.
pub fn evaluate(real: &[TimeSeries], synth: &[TimeSeries], opts: &EvalOptions) -> Result<EvalReport> {
    opts.validate()?;
    let (real_n, synth_n) = match opts.normalization {
        Normalization::Global => normalize_jointly(real, synth)?,
        Normalization::PerSeries => (real.to_vec(), synth.to_vec()),
    };
    let (precision, recall, f1) = precision_recall_f1(&real_n, &synth_n, opts.band)?;
    let predictive_mae = predictive_score(&synth_n, &real_n, &opts.predictor)?;
    Ok(EvalReport {
        predictive_mae,
        precision,
        recall,
        f1,
        n_real: real.len(),
        n_synth: synth.len(),
        config_hash: opts.hash(),
    })
}

/// Two-component PCA of both sets together, as `x,y,label` CSV rows with
/// the real rows first.
pub fn export_projection(real: &[TimeSeries], synth: &[TimeSeries]) -> Result<String> {
    let (n, c) = common_shape(real, "real")?;
    if common_shape(synth, "synthetic")? != (n, c) {
        return Err(Error::invalid("real and synthetic series differ in length or channels"));
    }
    let vectors: Vec<Vec<f64>> = real.iter().chain(synth).map(|s| s.values().concat()).collect();
    let pca = Pca::fit(&vectors, 2)?;
    let mut out = String::from("x,y,label\n");
    for (i, v) in vectors.iter().enumerate() {
        let mut p = pca.transform(v)?;
        p.resize(2, 0.0);
        let label = if i < real.len() { "real" } else { "synth" };
        writeln!(out, "{},{},{label}", format_value(p[0]), format_value(p[1])).unwrap();
    }
    Ok(out)
}

/// Standard deviation across the corpus of each magnitude-spectrum bin.
/// Multichannel series contribute one block of bins per channel.
pub fn spectral_variance_profile(corpus: &[TimeSeries]) -> Result<Vec<f64>> {
    common_shape(corpus, "corpus")?;
    require_observed(corpus, "corpus")?;
    let spectra = corpus
        .iter()
        .map(|s| {
            let mut all = Vec::new();
            for ch in s.values() {
                all.extend(spectral::rfft(ch)?.magnitudes());
            }
            Ok(all)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let m = spectra.len() as f64;
    Ok((0..spectra[0].len())
        .map(|k| {
            let shift = spectra[0][k];
            let mean = spectra.iter().map(|s| s[k] - shift).sum::<f64>() / m;
            let var = spectra.iter().map(|s| (s[k] - shift - mean).powi(2)).sum::<f64>() / m;
            var.sqrt()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub train: TrainConfig,
    pub n_samples: usize,
    pub alpha: AlphaPolicy,
    pub eval: EvalOptions,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            train: TrainConfig::default(),
            n_samples: 100,
            alpha: AlphaPolicy::default(),
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub lambda_fft: f64,
    pub report: EvalReport,
    pub final_loss: LossComponents,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub with_fft: AblationArm,
    pub without_fft: AblationArm,
}

/// Trains two models that differ only in λ₃ (the configured value and
/// zero), generates the same number of series from each with shared seeds,
/// and scores both against the corpus.
pub fn ablation_fft(corpus: &[TimeSeries], config: &AblationConfig, seed: u64) -> Result<AblationReport> {
    let arm = |lambda_fft: f64| -> Result<AblationArm> {
        let mut train = config.train.clone();
        train.lambdas.fft = lambda_fft;
        let trained = hypertime::train_hypertime(corpus, &train, seed)?;
        let generated = hypertime::interpolate_generate(&trained.model, corpus, config.n_samples, config.alpha, seed)?;
        let synth: Vec<TimeSeries> = generated.into_iter().map(|g| g.series).collect();
        Ok(AblationArm {
            lambda_fft,
            report: evaluate(corpus, &synth, &config.eval)?,
            final_loss: trained.history.last().copied().unwrap_or_default(),
        })
    };
    let (with_fft, without_fft) = rayon::join(|| arm(config.train.lambdas.fft), || arm(0.0));
    Ok(AblationReport {
        with_fft: with_fft?,
        without_fft: without_fft?,
    })
}
