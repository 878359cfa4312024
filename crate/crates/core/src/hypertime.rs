//! HyperTime: a set encoder maps each series to a latent vector, a ReLU
//! hypernetwork maps the latent to the weights of a SIREN (the hyponet),
//! and the hyponet is evaluated at the series' time coordinates. The whole
//! chain trains end to end on
//!
//! ```text
//! L = L_rec + λ₁·mean(w²) + λ₂·mean(z²) + λ₃·L_FFT
//! ```
//!
//! New series are synthesized by decoding convex combinations of two
//! training embeddings.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, AdamState, NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::inr::{
    self, forward_on_tape, init_params, write_f64s, write_scales, write_spec, Activation, MlpSpec, ParamVector,
    Reader,
};
use crate::pca::Pca;
use crate::rng;
use crate::series::{uniform_grid, ChannelScale, TimeSeries};
use crate::spectral;

pub const HYT_MAGIC: &[u8; 4] = b"HYT1";

/// Weights of the three regularizers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lambdas {
    /// λ₁, on the mean squared hyponet weight.
    pub weights: f64,
    /// λ₂, on the mean squared latent entry.
    pub latent: f64,
    /// λ₃, on the spectral loss.
    pub fft: f64,
}

impl Default for Lambdas {
    fn default() -> Self {
        Lambdas {
            weights: 1e-4,
            latent: 1e-3,
            fft: 1e-2,
        }
    }
}

impl Lambdas {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("weights", self.weights), ("latent", self.latent), ("fft", self.fft)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("lambda {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub lambdas: Lambdas,
    /// Frequency scale of the encoder and hyponet sine layers.
    pub omega0: f64,
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub hyper_hidden: Vec<usize>,
    pub hypo_hidden: Vec<usize>,
    /// Write a checkpoint every this many epochs (0 disables).
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            lr: 1e-4,
            batch_size: 16,
            lambdas: Lambdas::default(),
            omega0: inr::DEFAULT_OMEGA0,
            latent_dim: 40,
            encoder_hidden: vec![128, 128],
            hyper_hidden: vec![128],
            hypo_hidden: inr::INR_HIDDEN.to_vec(),
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.lambdas.validate()?;
        if self.epochs == 0 || self.batch_size == 0 || self.latent_dim == 0 {
            return Err(Error::Config("epochs, batch_size and latent_dim must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::Config(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if self.checkpoint_every > 0 && self.checkpoint_dir.is_none() {
            return Err(Error::Config("checkpoint_every needs checkpoint_dir".into()));
        }
        Ok(())
    }

    fn specs(&self, channels: usize) -> Result<(MlpSpec, MlpSpec, MlpSpec)> {
        let chain = |first: usize, hidden: &[usize], last: usize| {
            let mut w = vec![first];
            w.extend_from_slice(hidden);
            w.push(last);
            w
        };
        let hypo = MlpSpec::new(chain(1, &self.hypo_hidden, channels), Activation::Sine, self.omega0)?;
        let encoder = MlpSpec::new(
            chain(1 + channels, &self.encoder_hidden, self.latent_dim),
            Activation::Sine,
            self.omega0,
        )?;
        let hyper = MlpSpec::new(
            chain(self.latent_dim, &self.hyper_hidden, hypo.param_count()),
            Activation::Relu,
            self.omega0,
        )?;
        Ok((encoder, hyper, hypo))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperTimeModel {
    pub encoder: ParamVector,
    pub hyper: ParamVector,
    pub hypo_spec: MlpSpec,
    pub lambdas: Lambdas,
    /// Per-series channel scales of the training corpus.
    pub corpus_scales: Vec<Vec<ChannelScale>>,
    /// Series length of the training corpus (first series when ragged).
    pub native_len: usize,
}

/// A point in latent space and where it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub z: Vec<f64>,
    pub source: String,
}

/// Loss terms before weighting, plus the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub total: f64,
    pub rec: f64,
    pub weights: f64,
    pub latent: f64,
    pub fft: f64,
}

impl LossComponents {
    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("L_rec", self.rec),
            ("L_weights", self.weights),
            ("L_latent", self.latent),
            ("L_FFT", self.fft),
            ("total", self.total),
        ]
    }

    fn accumulate(&mut self, other: &LossComponents, w: f64) {
        self.total += w * other.total;
        self.rec += w * other.rec;
        self.weights += w * other.weights;
        self.latent += w * other.latent;
        self.fft += w * other.fft;
    }
}

impl HyperTimeModel {
    /// Fresh model for `channels`-channel series. The hypernet's output bias
    /// holds a standard SIREN initialization and its output weights start
    /// small, so every latent initially decodes to roughly that network.
    pub fn init(channels: usize, config: &TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if channels == 0 {
            return Err(Error::invalid("channel count must be positive"));
        }
        let (enc_spec, hyper_spec, hypo_spec) = config.specs(channels)?;
        let encoder = init_params(&enc_spec, rng::derive(seed, 1));
        let mut hyper = init_params(&hyper_spec, rng::derive(seed, 2));
        let hypo = init_params(&hypo_spec, rng::derive(seed, 3));

        let last = *hyper_spec.layers().last().unwrap();
        let bound = (6.0 / last.n_in as f64).sqrt() / 100.0;
        let mut r = rng::seeded(rng::derive(seed, 4));
        let flat = hyper.flat_mut();
        for w in &mut flat[last.weight_offset..last.bias_offset] {
            *w = r.gen_range(-bound..=bound);
        }
        flat[last.bias_offset..last.bias_offset + last.n_out].copy_from_slice(hypo.flat());

        Ok(HyperTimeModel {
            encoder,
            hyper,
            hypo_spec,
            lambdas: config.lambdas,
            corpus_scales: Vec::new(),
            native_len: 0,
        })
    }

    pub fn channels(&self) -> usize {
        self.hypo_spec.output_width()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.spec().output_width()
    }

    pub fn validate(&self) -> Result<()> {
        let enc = self.encoder.spec();
        let hyper = self.hyper.spec();
        if hyper.output_width() != self.hypo_spec.param_count() {
            return Err(Error::Format(format!(
                "hypernet emits {} values, hyponet needs {}",
                hyper.output_width(),
                self.hypo_spec.param_count()
            )));
        }
        if enc.input_width() != 1 + self.channels() || hyper.input_width() != enc.output_width() {
            return Err(Error::Format("encoder, hypernet and hyponet widths disagree".into()));
        }
        if self.hypo_spec.input_width() != 1 || self.hypo_spec.activation != Activation::Sine {
            return Err(Error::Format("hyponet must be a sine network of time".into()));
        }
        self.lambdas.validate()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * (self.encoder.flat().len() + self.hyper.flat().len()));
        out.extend_from_slice(HYT_MAGIC);
        write_spec(&mut out, self.encoder.spec());
        write_f64s(&mut out, self.encoder.flat());
        write_spec(&mut out, self.hyper.spec());
        write_f64s(&mut out, self.hyper.flat());
        write_spec(&mut out, &self.hypo_spec);
        for l in [self.lambdas.weights, self.lambdas.latent, self.lambdas.fft] {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&(self.native_len as u64).to_le_bytes());
        out.extend_from_slice(&(self.corpus_scales.len() as u32).to_le_bytes());
        for s in &self.corpus_scales {
            write_scales(&mut out, s);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(HYT_MAGIC)?;
        let fmt = |e: Error| Error::Format(e.to_string());
        let enc_spec = r.spec()?;
        let encoder = ParamVector::new(enc_spec, r.f64s()?).map_err(fmt)?;
        let hyper_spec = r.spec()?;
        let hyper = ParamVector::new(hyper_spec, r.f64s()?).map_err(fmt)?;
        let hypo_spec = r.spec()?;
        let lambdas = Lambdas {
            weights: r.f64()?,
            latent: r.f64()?,
            fft: r.f64()?,
        };
        let native_len = r.u64()? as usize;
        let n = r.u32()? as usize;
        let corpus_scales = (0..n).map(|_| r.scales()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        let model = HyperTimeModel {
            encoder,
            hyper,
            hypo_spec,
            lambdas,
            corpus_scales,
            native_len,
        };
        model.validate().map_err(fmt)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Encoder input rows `(t, f₀(t), .., f_C(t))` over the observed samples.
fn pairs(series: &TimeSeries) -> Tensor {
    let idx = series.observed_indices();
    let c = series.channels();
    let mut data = Vec::with_capacity(idx.len() * (1 + c));
    for &i in &idx {
        data.push(series.t()[i]);
        for ch in 0..c {
            data.push(series.channel(ch)[i]);
        }
    }
    Tensor::matrix(idx.len(), 1 + c, data).expect("consistent pair matrix")
}

fn check_channels(model: &HyperTimeModel, series: &TimeSeries) -> Result<()> {
    if series.channels() != model.channels() {
        return Err(Error::invalid(format!(
            "series has {} channel(s), encoder expects {}",
            series.channels(),
            model.channels()
        )));
    }
    Ok(())
}

/// Mean of the encoder outputs over all `(t, f(t))` pairs of the observed
/// samples.
pub fn encode(model: &HyperTimeModel, series: &TimeSeries) -> Result<Embedding> {
    check_channels(model, series)?;
    let out = inr::evaluate_rows(&model.encoder, &pairs(series))?;
    encode_rows(&out, "series")
}

/// Embedding from raw `(t, f(t))` rows, in the given order.
pub fn encode_pairs(model: &HyperTimeModel, pairs: &Tensor) -> Result<Embedding> {
    let out = inr::evaluate_rows(&model.encoder, pairs)?;
    encode_rows(&out, "pairs")
}

fn encode_rows(out: &Tensor, source: &str) -> Result<Embedding> {
    let (rows, cols) = out.dims2("encode")?;
    let data = out.data();
    let z: Vec<f64> = (0..cols)
        .map(|c| exact_sum((0..rows).map(|r| data[r * cols + c])) / rows as f64)
        .collect();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "encoder output".into(),
        });
    }
    Ok(Embedding {
        z,
        source: source.to_string(),
    })
}

/// Correctly rounded sum (Shewchuk's partials with a final half-even fix).
/// The result depends only on the multiset of inputs, so pooling is exactly
/// invariant to row order, and doubling every row exactly doubles the sum.
fn exact_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        n -= 1;
        let (x, y) = (hi, partials[n]);
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Hyponet weights predicted for the latent `z`.
pub fn decode(model: &HyperTimeModel, z: &Embedding) -> Result<ParamVector> {
    if z.z.len() != model.latent_dim() {
        return Err(Error::Shape {
            op: "decode",
            shapes: vec![vec![z.z.len()], vec![model.latent_dim()]],
        });
    }
    let out = inr::evaluate_rows(&model.hyper, &Tensor::row(z.z.clone()))?;
    ParamVector::new(model.hypo_spec.clone(), out.into_data())
}

/// Evaluates a decoded hyponet on `t`, returning a series with `scale`.
pub fn render(params: &ParamVector, t: Vec<f64>, scale: Vec<ChannelScale>) -> Result<TimeSeries> {
    let n = t.len();
    let out = inr::evaluate(params, &t)?;
    let values = out.data().chunks(n).map(<[f64]>::to_vec).collect();
    TimeSeries::new(t, values, None, scale)
}

/// `decode(encode(s))` evaluated on `s`'s own grid.
pub fn reconstruct(model: &HyperTimeModel, series: &TimeSeries) -> Result<TimeSeries> {
    let params = decode(model, &encode(model, series)?)?;
    render(&params, series.t().to_vec(), series.scale().to_vec())
}

struct LossNodes {
    total: NodeId,
    rec: NodeId,
    weights: NodeId,
    latent: NodeId,
    fft: Option<NodeId>,
}

/// Records the composite loss for `batch` on `tape`. `encoder` and `hyper`
/// are row nodes holding the flat parameter vectors.
fn record_loss(
    tape: &mut Tape,
    model: &HyperTimeModel,
    encoder: NodeId,
    hyper: NodeId,
    batch: &[&TimeSeries],
) -> Result<LossNodes> {
    if batch.is_empty() {
        return Err(Error::invalid("loss needs a non-empty batch"));
    }
    for s in batch {
        check_channels(model, s)?;
        if s.mask().is_some_and(|m| m.iter().any(|&o| !o)) {
            return Err(Error::invalid("training series must be fully observed"));
        }
    }
    let enc_spec = model.encoder.spec();
    let hyper_spec = model.hyper.spec();
    let hypo = &model.hypo_spec;
    let p = hypo.param_count();
    let c = model.channels();

    let mut zs = Vec::with_capacity(batch.len());
    for s in batch {
        let x = tape.constant(pairs(s));
        let per_pair = forward_on_tape(tape, enc_spec, encoder, 0, x)?;
        zs.push(tape.mean_rows(per_pair)?);
    }
    let z = tape.concat(&zs)?;
    let w = forward_on_tape(tape, hyper_spec, hyper, 0, z)?;

    let mut preds = Vec::with_capacity(batch.len());
    let mut targets = Vec::new();
    for (b, s) in batch.iter().enumerate() {
        let wb = tape.slice(w, b * p, vec![1, p])?;
        let t = tape.constant(Tensor::column(s.t().to_vec()));
        preds.push(forward_on_tape(tape, hypo, wb, 0, t)?);
        for i in 0..s.len() {
            for ch in 0..c {
                targets.push(s.channel(ch)[i]);
            }
        }
    }
    let pred = tape.concat(&preds)?;
    let target = tape.constant(Tensor::matrix(targets.len() / c, c, targets)?);
    let diff = tape.sub(pred, target)?;
    let sq = tape.square(diff)?;
    let rec = tape.mean(sq)?;

    let w_sq = tape.square(w)?;
    let weights = tape.mean(w_sq)?;
    let z_sq = tape.square(z)?;
    let latent = tape.mean(z_sq)?;

    let l = model.lambdas;
    let mut total = rec;
    for (node, lambda) in [(weights, l.weights), (latent, l.latent)] {
        if lambda != 0.0 {
            let term = tape.scale(node, lambda)?;
            total = tape.add(total, term)?;
        }
    }
    let mut fft = None;
    if l.fft != 0.0 {
        let mut acc: Option<NodeId> = None;
        for (s, &out) in batch.iter().zip(&preds) {
            let by_channel = if c == 1 { out } else { tape.transpose(out)? };
            for ch in 0..c {
                let col = tape.slice(by_channel, ch * s.len(), vec![s.len(), 1])?;
                let term = spectral::fft_loss_on_tape(tape, s.channel(ch), col)?;
                acc = Some(match acc {
                    Some(a) => tape.add(a, term)?,
                    None => term,
                });
            }
        }
        let mean = tape.scale(acc.unwrap(), 1.0 / (batch.len() * c) as f64)?;
        let term = tape.scale(mean, l.fft)?;
        total = tape.add(total, term)?;
        fft = Some(mean);
    }
    Ok(LossNodes {
        total,
        rec,
        weights,
        latent,
        fft,
    })
}

fn components(tape: &Tape, nodes: &LossNodes, model: &HyperTimeModel, batch: &[&TimeSeries]) -> Result<LossComponents> {
    let fft = match nodes.fft {
        Some(n) => tape.scalar(n),
        None => {
            // Reported even when it does not enter the objective.
            let mut acc = 0.0;
            let mut count = 0;
            for s in batch {
                let params = decode(model, &encode(model, s)?)?;
                let out = inr::evaluate(&params, s.t())?;
                for (ch, pred) in out.data().chunks(s.len()).enumerate() {
                    acc += spectral::fft_loss(s.channel(ch), pred)?;
                    count += 1;
                }
            }
            acc / count as f64
        }
    };
    Ok(LossComponents {
        total: tape.scalar(nodes.total),
        rec: tape.scalar(nodes.rec),
        weights: tape.scalar(nodes.weights),
        latent: tape.scalar(nodes.latent),
        fft,
    })
}

fn check_components(c: &LossComponents, epoch: usize) -> Result<()> {
    for (name, v) in c.named() {
        if !v.is_finite() {
            return Err(Error::Divergence {
                epoch,
                component: name.to_string(),
                value: v,
            });
        }
    }
    Ok(())
}

/// Composite loss on `batch` and its individual terms.
pub fn hypertime_loss(model: &HyperTimeModel, batch: &[&TimeSeries]) -> Result<LossComponents> {
    let mut tape = Tape::new();
    let e = tape.constant(Tensor::row(model.encoder.flat().to_vec()));
    let h = tape.constant(Tensor::row(model.hyper.flat().to_vec()));
    let nodes = record_loss(&mut tape, model, e, h, batch)?;
    let c = components(&tape, &nodes, model, batch)?;
    check_components(&c, 0)?;
    Ok(c)
}

/// Loss together with its gradient with respect to the flat encoder and
/// hypernet parameters.
pub fn hypertime_loss_grad(
    model: &HyperTimeModel,
    batch: &[&TimeSeries],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut tape = Tape::new();
    let e = tape.param(Tensor::row(model.encoder.flat().to_vec()));
    let h = tape.param(Tensor::row(model.hyper.flat().to_vec()));
    let nodes = record_loss(&mut tape, model, e, h, batch)?;
    let mut grads = tape.backward(nodes.total)?;
    Ok((
        tape.scalar(nodes.total),
        grads.take(e).into_data(),
        grads.take(h).into_data(),
    ))
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub model: HyperTimeModel,
    /// Per-epoch averages over minibatches.
    pub history: Vec<LossComponents>,
}

/// Minibatch Adam on the composite loss. Batches are reshuffled every
/// epoch from the seed; the run is fully determined by `(corpus, config,
/// seed)`.
pub fn train_hypertime(corpus: &[TimeSeries], config: &TrainConfig, seed: u64) -> Result<TrainResult> {
    config.validate()?;
    let first = corpus.first().ok_or_else(|| Error::invalid("cannot train on an empty corpus"))?;
    if corpus.iter().any(|s| s.channels() != first.channels()) {
        return Err(Error::invalid("all series must share a channel count"));
    }
    let mut model = HyperTimeModel::init(first.channels(), config, seed)?;
    model.corpus_scales = corpus.iter().map(|s| s.scale().to_vec()).collect();
    model.native_len = first.len();

    let mut params = vec![
        Tensor::row(model.encoder.flat().to_vec()),
        Tensor::row(model.hyper.flat().to_vec()),
    ];
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr), &params);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut shuffle_rng = rng::seeded(rng::derive(seed, 5));
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = LossComponents::default();
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&TimeSeries> = chunk.iter().map(|&i| &corpus[i]).collect();
            let mut tape = Tape::new();
            let e = tape.param(params[0].clone());
            let h = tape.param(params[1].clone());
            let diverged = |err: Error| match err {
                Error::NonFinite { context } => Error::Divergence {
                    epoch,
                    component: context,
                    value: f64::NAN,
                },
                other => other,
            };
            let nodes = record_loss(&mut tape, &model, e, h, &batch).map_err(diverged)?;
            let parts = LossComponents {
                total: tape.scalar(nodes.total),
                rec: tape.scalar(nodes.rec),
                weights: tape.scalar(nodes.weights),
                latent: tape.scalar(nodes.latent),
                fft: nodes.fft.map_or(0.0, |n| tape.scalar(n)),
            };
            check_components(&parts, epoch)?;
            epoch_loss.accumulate(&parts, batch.len() as f64 / corpus.len() as f64);
            let mut grads = tape.backward(nodes.total).map_err(diverged)?;
            let g = [grads.take(e), grads.take(h)];
            adam.step(&mut params, &g).map_err(|_| Error::Divergence {
                epoch,
                component: "gradient".into(),
                value: f64::NAN,
            })?;
        }
        history.push(epoch_loss);

        if config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 {
            let dir = config.checkpoint_dir.as_ref().unwrap();
            let snapshot = with_params(&model, &params)?;
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            snapshot.save(&dir.join(format!("checkpoint_{:06}.hyt", epoch + 1)))?;
        }
    }
    let model = with_params(&model, &params)?;
    Ok(TrainResult { model, history })
}

fn with_params(model: &HyperTimeModel, params: &[Tensor]) -> Result<HyperTimeModel> {
    let mut m = model.clone();
    m.encoder = ParamVector::new(m.encoder.spec().clone(), params[0].data().to_vec())?;
    m.hyper = ParamVector::new(m.hyper.spec().clone(), params[1].data().to_vec())?;
    Ok(m)
}

/// How the interpolation weight α is drawn for each synthetic series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaPolicy {
    Uniform { low: f64, high: f64 },
    Fixed(f64),
}

impl Default for AlphaPolicy {
    fn default() -> Self {
        AlphaPolicy::Uniform { low: 0.25, high: 0.75 }
    }
}

impl AlphaPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AlphaPolicy::Uniform { low, high } => (0.0..=1.0).contains(&low) && (0.0..=1.0).contains(&high) && low <= high,
            AlphaPolicy::Fixed(a) => (0.0..=1.0).contains(&a),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("alpha policy {self} outside [0, 1]")))
        }
    }

    fn draw(&self, r: &mut rng::Rng) -> f64 {
        match *self {
            AlphaPolicy::Uniform { low, high } if low < high => r.gen_range(low..high),
            AlphaPolicy::Uniform { low, .. } => low,
            AlphaPolicy::Fixed(a) => a,
        }
    }
}

impl fmt::Display for AlphaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaPolicy::Uniform { low, high } => write!(f, "U({low}, {high})"),
            AlphaPolicy::Fixed(a) => write!(f, "{a}"),
        }
    }
}

/// One synthetic draw: the pair, the weight and the resulting series.
#[derive(Clone, Debug)]
pub struct Generated {
    pub a: usize,
    pub b: usize,
    pub alpha: f64,
    pub series: TimeSeries,
}

/// Draw `k` of a generation run: a uniformly random ordered pair of
/// distinct series and an α from the policy.
fn draw_pair(n: usize, alpha: &AlphaPolicy, seed: u64, k: usize) -> (usize, usize, f64) {
    let mut r = rng::seeded(rng::derive(seed, k as u64));
    let a = r.gen_range(0..n);
    let mut b = r.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b, alpha.draw(&mut r))
}

/// Synthesizes `n_samples` series by decoding `(1−α)·z_A + α·z_B` for
/// random pairs of corpus series. Each output is evaluated on a uniform
/// grid of A's length and mapped back to raw units with the interpolated
/// channel scales.
pub fn interpolate_generate(
    model: &HyperTimeModel,
    corpus: &[TimeSeries],
    n_samples: usize,
    alpha: AlphaPolicy,
    seed: u64,
) -> Result<Vec<Generated>> {
    alpha.validate()?;
    model.validate()?;
    if corpus.len() < 2 {
        return Err(Error::invalid("generation needs at least 2 corpus series"));
    }
    let embeddings = corpus
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            encode(model, s).map(|mut e| {
                e.source = i.to_string();
                e
            })
        })
        .collect::<Result<Vec<_>>>()?;
    (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let (a, b, alpha) = draw_pair(corpus.len(), &alpha, seed, k);
            let z = Embedding {
                z: embeddings[a]
                    .z
                    .iter()
                    .zip(&embeddings[b].z)
                    .map(|(za, zb)| (1.0 - alpha) * za + alpha * zb)
                    .collect(),
                source: format!("interpolated({alpha}, {a}, {b})"),
            };
            let params = decode(model, &z)?;
            let scale = lerp_scales(corpus[a].scale(), corpus[b].scale(), alpha);
            let series = render(&params, uniform_grid(corpus[a].len()), scale)?;
            Ok(Generated { a, b, alpha, series })
        })
        .collect()
}

fn lerp_scales(a: &[ChannelScale], b: &[ChannelScale], alpha: f64) -> Vec<ChannelScale> {
    a.iter().zip(b).map(|(x, y)| x.lerp(y, alpha)).collect()
}

/// Same pairing and α draws as [`interpolate_generate`], but in the
/// coefficient space of a PCA fitted to the normalized series vectors.
pub fn pca_generate(
    corpus: &[TimeSeries],
    n_components: usize,
    n_samples: usize,
    alpha: AlphaPolicy,
    seed: u64,
) -> Result<Vec<Generated>> {
    alpha.validate()?;
    if corpus.len() < 2 {
        return Err(Error::invalid("generation needs at least 2 corpus series"));
    }
    let n = corpus[0].len();
    let c = corpus[0].channels();
    if corpus.iter().any(|s| s.len() != n || s.channels() != c) {
        return Err(Error::invalid("PCA generation needs equally sampled series"));
    }
    let vectors: Vec<Vec<f64>> = corpus.iter().map(|s| s.values().concat()).collect();
    let pca = Pca::fit(&vectors, n_components)?;
    let coeffs = vectors.iter().map(|v| pca.transform(v)).collect::<Result<Vec<_>>>()?;
    (0..n_samples)
        .map(|k| {
            let (a, b, alpha) = draw_pair(corpus.len(), &alpha, seed, k);
            let mixed: Vec<f64> = coeffs[a]
                .iter()
                .zip(&coeffs[b])
                .map(|(x, y)| (1.0 - alpha) * x + alpha * y)
                .collect();
            let flat = pca.inverse_transform(&mixed)?;
            let values = flat.chunks(n).map(<[f64]>::to_vec).collect();
            let scale = lerp_scales(corpus[a].scale(), corpus[b].scale(), alpha);
            let series = TimeSeries::new(uniform_grid(n), values, None, scale)?;
            Ok(Generated { a, b, alpha, series })
        })
        .collect()
}
