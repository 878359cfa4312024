use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, AdamState, NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::inr::mlp::{forward_on_tape, init_params, Activation, MlpSpec, ParamVector};
use crate::rng;
use crate::series::TimeSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            epochs: 2000,
            lr: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: ParamVector,
    /// Objective value at every epoch, measured before that epoch's update.
    pub loss_history: Vec<f64>,
    /// MSE of the returned parameters on the observed samples.
    pub final_mse: f64,
}

/// Extra loss term added on top of the reconstruction MSE. Called once per
/// epoch with the tape and the flat parameter node.
pub type Regularizer<'a> = dyn Fn(&mut Tape, NodeId, usize) -> Result<Option<NodeId>> + Sync + 'a;

/// Fits one INR to the observed samples of `series` with full-batch Adam on
/// the mean squared error.
pub fn fit(series: &TimeSeries, spec: &MlpSpec, opts: &FitOptions) -> Result<FitResult> {
    fit_regularized(series, spec, opts, &|_, _, _| Ok(None))
}

pub fn fit_regularized(
    series: &TimeSeries,
    spec: &MlpSpec,
    opts: &FitOptions,
    regularizer: &Regularizer<'_>,
) -> Result<FitResult> {
    spec.validate()?;
    if spec.input_width() != 1 || spec.output_width() != series.channels() {
        return Err(Error::invalid(format!(
            "network {:?} does not map time to {} channel(s)",
            spec.widths,
            series.channels()
        )));
    }
    let observed = series.observed_indices();
    if observed.len() < 2 {
        return Err(Error::invalid("fitting needs at least 2 observed samples"));
    }
    let (input, target) = observed_batch(series, &observed);

    let mut params = vec![Tensor::row(init_params(spec, opts.seed).into_flat())];
    let mut adam = AdamState::new(AdamConfig::with_lr(opts.lr), &params);
    let mut history = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        let mut tape = Tape::new();
        let p = tape.param(params[0].clone());
        let total = objective(&mut tape, spec, p, &input, &target, regularizer, epoch)
            .map_err(|e| divergence(e, epoch, "loss"))?;
        history.push(tape.scalar(total));
        let mut grads = tape.backward(total)?;
        adam.step(&mut params, &[grads.take(p)])
            .map_err(|e| divergence(e, epoch, "gradient"))?;
    }

    let params = ParamVector::new(spec.clone(), params.pop().unwrap().into_data())?;
    let final_mse = mse_on(&params, &input, &target)?;
    if !final_mse.is_finite() {
        return Err(Error::Divergence {
            epoch: opts.epochs,
            component: "mse".into(),
            value: final_mse,
        });
    }
    Ok(FitResult {
        params,
        loss_history: history,
        final_mse,
    })
}

fn objective(
    tape: &mut Tape,
    spec: &MlpSpec,
    p: NodeId,
    input: &Tensor,
    target: &Tensor,
    regularizer: &Regularizer<'_>,
    epoch: usize,
) -> Result<NodeId> {
    let x = tape.constant(input.clone());
    let y = tape.constant(target.clone());
    let out = forward_on_tape(tape, spec, p, 0, x)?;
    let diff = tape.sub(out, y)?;
    let sq = tape.square(diff)?;
    let mse = tape.mean(sq)?;
    match regularizer(tape, p, epoch)? {
        Some(extra) => tape.add(mse, extra),
        None => Ok(mse),
    }
}

fn divergence(e: Error, epoch: usize, component: &str) -> Error {
    match e {
        Error::NonFinite { context } => Error::Divergence {
            epoch,
            component: format!("{component} ({context})"),
            value: f64::NAN,
        },
        other => other,
    }
}

/// `[n_obs, 1]` coordinates and `[n_obs, channels]` targets.
pub(crate) fn observed_batch(series: &TimeSeries, observed: &[usize]) -> (Tensor, Tensor) {
    let c = series.channels();
    let input = Tensor::column(observed.iter().map(|&i| series.t()[i]).collect());
    let mut target = Vec::with_capacity(observed.len() * c);
    for &i in observed {
        for ch in 0..c {
            target.push(series.channel(ch)[i]);
        }
    }
    (input, Tensor::matrix(observed.len(), c, target).expect("layout"))
}

fn mse_on(params: &ParamVector, input: &Tensor, target: &Tensor) -> Result<f64> {
    let out = crate::inr::evaluate_rows(params, input)?;
    let total: f64 = out
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / target.len() as f64)
}

/// Mean squared error of an INR against every observed sample of `series`.
pub fn reconstruction_mse(params: &ParamVector, series: &TimeSeries) -> Result<f64> {
    let (input, target) = observed_batch(series, &series.observed_indices());
    mse_on(params, &input, &target)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareOptions {
    /// Hidden widths shared by every activation.
    pub hidden: Vec<usize>,
    pub omega0: f64,
    pub fit: FitOptions,
    /// At most this many series are fitted; larger datasets are subsampled.
    pub max_series: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            hidden: crate::inr::mlp::INR_HIDDEN.to_vec(),
            omega0: crate::inr::mlp::DEFAULT_OMEGA0,
            fit: FitOptions::default(),
            max_series: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationRow {
    pub activation: Activation,
    pub mean_mse: f64,
    pub per_series_mse: Vec<f64>,
    pub loss_curves: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationComparison {
    /// Dataset positions of the fitted series.
    pub series_indices: Vec<usize>,
    pub rows: Vec<ActivationRow>,
}

impl ActivationComparison {
    pub fn row(&self, activation: Activation) -> Option<&ActivationRow> {
        self.rows.iter().find(|r| r.activation == activation)
    }
}

/// Positions of at most `cap` series, drawn without replacement and
/// returned in ascending order.
pub fn sample_indices(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = rng::seeded(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    picked.sort_unstable();
    picked
}

/// Fits one network per series for every activation and tabulates the
/// reconstruction error and training curves. Series `i` uses the same
/// initialization seed for every activation.
pub fn compare_activations(dataset: &[TimeSeries], opts: &CompareOptions) -> Result<ActivationComparison> {
    if dataset.is_empty() {
        return Err(Error::invalid("activation comparison needs at least one series"));
    }
    let indices = sample_indices(dataset.len(), opts.max_series, opts.fit.seed);
    let jobs: Vec<(usize, Activation)> = Activation::ALL
        .iter()
        .flat_map(|&a| indices.iter().map(move |&i| (i, a)))
        .collect();

    let results: Vec<Result<FitResult>> = jobs
        .par_iter()
        .map(|&(i, activation)| {
            let series = &dataset[i];
            let mut widths = vec![1];
            widths.extend(&opts.hidden);
            widths.push(series.channels());
            let spec = MlpSpec::new(widths, activation, opts.omega0)?;
            let fit_opts = FitOptions {
                seed: rng::derive(opts.fit.seed, i as u64),
                ..opts.fit
            };
            fit(series, &spec, &fit_opts).map_err(|e| e.context(format!("series {i}, {activation}")))
        })
        .collect();

    let mut results = results.into_iter();
    let mut rows = Vec::with_capacity(Activation::ALL.len());
    for activation in Activation::ALL {
        let mut per_series_mse = Vec::with_capacity(indices.len());
        let mut loss_curves = Vec::with_capacity(indices.len());
        for _ in &indices {
            let r = results.next().unwrap()?;
            per_series_mse.push(r.final_mse);
            loss_curves.push(r.loss_history);
        }
        let mean_mse = per_series_mse.iter().sum::<f64>() / per_series_mse.len() as f64;
        rows.push(ActivationRow {
            activation,
            mean_mse,
            per_series_mse,
            loss_curves,
        });
    }
    Ok(ActivationComparison {
        series_indices: indices,
        rows,
    })
}
