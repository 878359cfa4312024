//! Missing-value imputation: INR fits on the observed samples (optionally
//! with a total-variation prior) and four classical baselines.

use std::fmt;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::inr::{self, FitOptions, MlpSpec, ParamVector};
use crate::rng;
use crate::series::TimeSeries;
use crate::spectral;

/// A series with a random subset of samples hidden, plus the hidden truth.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedSeries {
    /// Masked copy; hidden entries are zeroed.
    pub observed: TimeSeries,
    /// Fully observed original.
    pub truth: TimeSeries,
    pub missing_fraction: f64,
}

impl MaskedSeries {
    /// Wraps a series that already carries a mask; there is no ground truth
    /// beyond the observed samples.
    pub fn from_partial(series: TimeSeries) -> Result<Self> {
        if series.n_observed() < 2 {
            return Err(Error::invalid("at least 2 observed samples required"));
        }
        let missing_fraction = 1.0 - series.n_observed() as f64 / series.len() as f64;
        Ok(MaskedSeries {
            truth: series.clone(),
            observed: series,
            missing_fraction,
        })
    }

    pub fn mask(&self) -> Vec<bool> {
        (0..self.observed.len()).map(|i| self.observed.is_observed(i)).collect()
    }
}

/// Hides `round(fraction·N)` uniformly chosen samples.
pub fn mask_series(series: &TimeSeries, fraction: f64, seed: u64) -> Result<MaskedSeries> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("missing fraction {fraction} outside [0, 1)")));
    }
    if series.mask().is_some() {
        return Err(Error::invalid("series is already masked"));
    }
    let n = series.len();
    let n_missing = (fraction * n as f64).round() as usize;
    if n - n_missing < 2 {
        return Err(Error::invalid(format!(
            "hiding {n_missing} of {n} samples leaves fewer than 2 observed"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut mask = vec![true; n];
    for i in rand::seq::index::sample(&mut rng, n, n_missing) {
        mask[i] = false;
    }
    let values = series
        .values()
        .iter()
        .map(|c| c.iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect())
        .collect();
    let observed = TimeSeries::new(
        series.t().to_vec(),
        values,
        (n_missing > 0).then_some(mask),
        series.scale().to_vec(),
    )?;
    Ok(MaskedSeries {
        observed,
        truth: series.clone(),
        missing_fraction: fraction,
    })
}

/// Records the total-variation prior `mean |dΦ/dt|` at `t_samples`.
pub fn tv_prior_on_tape(
    tape: &mut Tape,
    spec: &MlpSpec,
    params: NodeId,
    t_samples: &[f64],
) -> Result<NodeId> {
    if t_samples.is_empty() {
        return Err(Error::invalid("total-variation prior needs at least one sample"));
    }
    let t = tape.constant(Tensor::column(t_samples.to_vec()));
    let (_, deriv) = inr::forward_with_derivative_on_tape(tape, spec, params, 0, t)?;
    let a = tape.abs(deriv)?;
    tape.mean(a)
}

/// Value of the total-variation prior.
pub fn tv_prior(params: &ParamVector, t_samples: &[f64]) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.constant(Tensor::row(params.flat().to_vec()));
    let node = tv_prior_on_tape(&mut tape, params.spec(), p, t_samples)?;
    Ok(tape.scalar(node))
}

/// Input derivative `dΦ/dt` of the network at each coordinate, `[len(t), channels]`.
pub fn input_derivative(params: &ParamVector, t: &[f64]) -> Result<Tensor> {
    let mut tape = Tape::new();
    let p = tape.constant(Tensor::row(params.flat().to_vec()));
    let x = tape.constant(Tensor::column(t.to_vec()));
    let (_, d) = inr::forward_with_derivative_on_tape(&mut tape, params.spec(), p, 0, x)?;
    Ok(tape.value(d).clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImputationMethod {
    #[serde(rename = "SIREN")]
    Siren,
    #[serde(rename = "SIREN_TV")]
    SirenTv,
    #[serde(rename = "Mean")]
    Mean,
    #[serde(rename = "kNN")]
    Knn,
    #[serde(rename = "CubicSpline")]
    CubicSpline,
    #[serde(rename = "Linear")]
    Linear,
}

impl ImputationMethod {
    pub const ALL: [ImputationMethod; 6] = [
        ImputationMethod::Siren,
        ImputationMethod::SirenTv,
        ImputationMethod::Mean,
        ImputationMethod::Knn,
        ImputationMethod::CubicSpline,
        ImputationMethod::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImputationMethod::Siren => "SIREN",
            ImputationMethod::SirenTv => "SIREN_TV",
            ImputationMethod::Mean => "Mean",
            ImputationMethod::Knn => "kNN",
            ImputationMethod::CubicSpline => "CubicSpline",
            ImputationMethod::Linear => "Linear",
        }
    }

    pub fn is_inr(self) -> bool {
        matches!(self, ImputationMethod::Siren | ImputationMethod::SirenTv)
    }
}

impl fmt::Display for ImputationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ImputationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown imputation method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub method: ImputationMethod,
    /// MSE over the full ground-truth grid.
    pub mse: f64,
    pub ffte: f64,
    pub fraction: f64,
}

/// Where the TV prior's sample coordinates come from at each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvSampling {
    /// Drawn with replacement from the observed time coordinates.
    #[default]
    Observed,
    /// Drawn uniformly from `[-1, 1]`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImputeOptions {
    pub fit: FitOptions,
    pub hidden: Vec<usize>,
    pub omega0: f64,
    pub tv_weight: f64,
    pub tv_sampling: TvSampling,
    pub knn_k: usize,
}

impl Default for ImputeOptions {
    fn default() -> Self {
        ImputeOptions {
            fit: FitOptions::default(),
            hidden: inr::INR_HIDDEN.to_vec(),
            omega0: inr::DEFAULT_OMEGA0,
            tv_weight: 1e-5,
            tv_sampling: TvSampling::Observed,
            knn_k: 5,
        }
    }
}

impl ImputeOptions {
    fn spec(&self, channels: usize) -> Result<MlpSpec> {
        let mut widths = vec![1];
        widths.extend(&self.hidden);
        widths.push(channels);
        MlpSpec::new(widths, inr::Activation::Sine, self.omega0)
    }
}

/// Scores an imputed series against the ground truth, averaging over channels.
pub fn score(method: ImputationMethod, masked: &MaskedSeries, imputed: &TimeSeries) -> Result<ImputationReport> {
    let truth = &masked.truth;
    if imputed.len() != truth.len() || imputed.channels() != truth.channels() {
        return Err(Error::invalid("imputed series does not match the ground truth shape"));
    }
    let c = truth.channels();
    let mut mse = 0.0;
    let mut ffte = 0.0;
    for ch in 0..c {
        let (a, b) = (truth.channel(ch), imputed.channel(ch));
        mse += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
        ffte += spectral::ffte(a, b)?;
    }
    Ok(ImputationReport {
        method,
        mse: mse / c as f64,
        ffte: ffte / c as f64,
        fraction: masked.missing_fraction,
    })
}

/// Fits an INR to the observed samples (with `tv_weight·p_TV` added when
/// `use_tv`) and evaluates it on the full grid.
pub fn impute_inr(
    masked: &MaskedSeries,
    use_tv: bool,
    tv_weight: f64,
    opts: &ImputeOptions,
) -> Result<(TimeSeries, ImputationReport)> {
    let series = &masked.observed;
    let spec = opts.spec(series.channels())?;
    let observed_t: Vec<f64> = series.observed_indices().iter().map(|&i| series.t()[i]).collect();
    let weight = if use_tv { tv_weight } else { 0.0 };
    let tv_seed = rng::derive(opts.fit.seed, 0x7456);

    let regularizer = |tape: &mut Tape, p: NodeId, epoch: usize| -> Result<Option<NodeId>> {
        if weight == 0.0 {
            return Ok(None);
        }
        let mut r = rng::seeded(rng::derive(tv_seed, epoch as u64));
        let samples: Vec<f64> = match opts.tv_sampling {
            TvSampling::Observed => (0..observed_t.len())
                .map(|_| observed_t[r.gen_range(0..observed_t.len())])
                .collect(),
            TvSampling::Uniform => (0..observed_t.len()).map(|_| r.gen_range(-1.0..=1.0)).collect(),
        };
        let tv = tv_prior_on_tape(tape, &spec, p, &samples)?;
        Ok(Some(tape.scale(tv, weight)?))
    };
    let fitted = inr::fit_regularized(series, &spec, &opts.fit, &regularizer)?;

    let out = inr::evaluate(&fitted.params, series.t())?;
    let values = out.data().chunks(series.len()).map(<[f64]>::to_vec).collect();
    let imputed = TimeSeries::new(series.t().to_vec(), values, None, series.scale().to_vec())?;
    let method = if use_tv {
        ImputationMethod::SirenTv
    } else {
        ImputationMethod::Siren
    };
    let report = score(method, masked, &imputed)?;
    Ok((imputed, report))
}

/// Classical imputation. Observed samples are copied through unchanged.
pub fn impute_baseline(
    masked: &MaskedSeries,
    method: ImputationMethod,
    knn_k: usize,
) -> Result<(TimeSeries, ImputationReport)> {
    let series = &masked.observed;
    let observed = series.observed_indices();
    let needed = match method {
        ImputationMethod::CubicSpline => 4,
        ImputationMethod::Siren | ImputationMethod::SirenTv => {
            return Err(Error::invalid(format!("{method} is not a baseline method")));
        }
        _ => 1,
    };
    if observed.len() < needed {
        return Err(Error::invalid(format!(
            "{method} needs at least {needed} observed samples, have {}",
            observed.len()
        )));
    }
    if method == ImputationMethod::Knn && knn_k == 0 {
        return Err(Error::invalid("kNN needs k >= 1"));
    }
    let t = series.t();
    let xs: Vec<f64> = observed.iter().map(|&i| t[i]).collect();
    let mut values = Vec::with_capacity(series.channels());
    for ch in 0..series.channels() {
        let ys: Vec<f64> = observed.iter().map(|&i| series.channel(ch)[i]).collect();
        let fill: Box<dyn Fn(f64) -> f64> = match method {
            ImputationMethod::Mean => {
                let m = ys.iter().sum::<f64>() / ys.len() as f64;
                Box::new(move |_| m)
            }
            ImputationMethod::Knn => {
                let (xs, ys) = (xs.clone(), ys.clone());
                Box::new(move |x| knn_value(&xs, &ys, x, knn_k))
            }
            ImputationMethod::Linear => {
                let (xs, ys) = (xs.clone(), ys.clone());
                Box::new(move |x| linear_value(&xs, &ys, x))
            }
            ImputationMethod::CubicSpline => {
                let spline = NaturalSpline::new(&xs, &ys)?;
                Box::new(move |x| spline.eval(x))
            }
            ImputationMethod::Siren | ImputationMethod::SirenTv => unreachable!(),
        };
        let out = (0..series.len())
            .map(|i| {
                if series.is_observed(i) {
                    series.channel(ch)[i]
                } else {
                    fill(t[i])
                }
            })
            .collect();
        values.push(out);
    }
    let imputed = TimeSeries::new(t.to_vec(), values, None, series.scale().to_vec())?;
    let report = score(method, masked, &imputed)?;
    Ok((imputed, report))
}

/// Uniform average over the `k` observed samples closest in time; ties go
/// to the earlier sample.
fn knn_value(xs: &[f64], ys: &[f64], x: f64, k: usize) -> f64 {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| (xs[a] - x).abs().total_cmp(&(xs[b] - x).abs()).then(a.cmp(&b)));
    let k = k.min(xs.len());
    order[..k].iter().map(|&i| ys[i]).sum::<f64>() / k as f64
}

/// Piecewise linear through sorted knots, constant beyond the ends.
fn linear_value(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let j = xs.partition_point(|&v| v < x);
    if j == 0 {
        return ys[0];
    }
    if j == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    (1.0 - w) * ys[j - 1] + w * ys[j]
}

/// Natural cubic spline (zero curvature at both ends), extended linearly
/// beyond the outer knots.
struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::invalid("spline needs matching knots and values"));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&d| d <= 0.0) {
            return Err(Error::invalid("spline knots must be strictly increasing"));
        }
        // Second derivatives m[1..n-1] from the tridiagonal system (Thomas algorithm).
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }
        Ok(NaturalSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    fn slope(&self, i: usize, at_right: bool) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let base = (self.ys[i + 1] - self.ys[i]) / h;
        if at_right {
            base + h * (self.m[i] + 2.0 * self.m[i + 1]) / 6.0
        } else {
            base - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.slope(0, false) * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.slope(n - 2, true) * (x - self.xs[n - 1]);
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Runs `method` on one masked series.
pub fn impute(
    masked: &MaskedSeries,
    method: ImputationMethod,
    opts: &ImputeOptions,
) -> Result<(TimeSeries, ImputationReport)> {
    match method {
        ImputationMethod::Siren => impute_inr(masked, false, 0.0, opts),
        ImputationMethod::SirenTv => impute_inr(masked, true, opts.tv_weight, opts),
        other => impute_baseline(masked, other, opts.knn_k),
    }
}

/// Masks every series at every fraction (seeded per series) and averages
/// each method's report over the dataset. Rows come out ordered by
/// fraction, then by method.
pub fn benchmark(
    dataset: &[TimeSeries],
    fractions: &[f64],
    methods: &[ImputationMethod],
    opts: &ImputeOptions,
) -> Result<Vec<ImputationReport>> {
    if dataset.is_empty() {
        return Err(Error::invalid("imputation benchmark needs at least one series"));
    }
    let mut jobs = Vec::new();
    for (fi, &fraction) in fractions.iter().enumerate() {
        for &method in methods {
            for i in 0..dataset.len() {
                jobs.push((fi, fraction, method, i));
            }
        }
    }
    let reports: Vec<Result<ImputationReport>> = jobs
        .par_iter()
        .map(|&(_, fraction, method, i)| {
            let mask_seed = rng::derive(opts.fit.seed, i as u64);
            let masked = mask_series(&dataset[i], fraction, mask_seed)?;
            let series_opts = ImputeOptions {
                fit: FitOptions {
                    seed: rng::derive(mask_seed, 1),
                    ..opts.fit
                },
                ..opts.clone()
            };
            impute(&masked, method, &series_opts)
                .map(|(_, r)| r)
                .map_err(|e| e.context(format!("series {i}, {method}, fraction {fraction}")))
        })
        .collect();

    let mut rows = Vec::new();
    let mut it = reports.into_iter();
    for &fraction in fractions {
        for &method in methods {
            let mut mse = 0.0;
            let mut ffte = 0.0;
            for _ in 0..dataset.len() {
                let r = it.next().unwrap()?;
                mse += r.mse;
                ffte += r.ffte;
            }
            let n = dataset.len() as f64;
            rows.push(ImputationReport {
                method,
                mse: mse / n,
                ffte: ffte / n,
                fraction,
            });
        }
    }
    Ok(rows)
}
