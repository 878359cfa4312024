use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sine,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Sine,
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
    ];

    pub fn id(self) -> u8 {
        match self {
            Activation::Sine => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sine => "sine",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown activation {s:?}")))
    }
}

/// Where one layer's weights and bias live inside a flat parameter vector.
/// Weights are stored row-major as `[n_out, n_in]`, followed by the bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerLayout {
    pub n_in: usize,
    pub n_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Fully connected network: every layer but the last applies the
/// activation, the last layer is affine.
///
/// Sine layers compute `sin(ω₀·Wx + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub omega0: f64,
}

pub const DEFAULT_OMEGA0: f64 = 30.0;
pub const INR_HIDDEN: [usize; 3] = [60, 60, 60];

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activation: Activation, omega0: f64) -> Result<Self> {
        let spec = MlpSpec {
            widths,
            activation,
            omega0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `1×60×60×60×channels` sine network with ω₀ = 30.
    pub fn siren(channels: usize) -> Self {
        let mut widths = vec![1];
        widths.extend(INR_HIDDEN);
        widths.push(channels);
        MlpSpec {
            widths,
            activation: Activation::Sine,
            omega0: DEFAULT_OMEGA0,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::invalid("an MLP needs at least an input and an output width"));
        }
        if self.widths.iter().any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if self.activation == Activation::Sine && !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::invalid("omega0 must be positive for sine networks"));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn layers(&self) -> Vec<LayerLayout> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let layout = LayerLayout {
                    n_in,
                    n_out,
                    weight_offset: offset,
                    bias_offset: offset + n_in * n_out,
                };
                offset += n_in * n_out + n_out;
                layout
            })
            .collect()
    }

    /// Σ over layers of `n_in·n_out + n_out`.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Flattened weights and biases of an [`MlpSpec`], in layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    spec: MlpSpec,
    flat: Vec<f64>,
}

impl ParamVector {
    pub fn new(spec: MlpSpec, flat: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if flat.len() != spec.param_count() {
            return Err(Error::Shape {
                op: "param_vector",
                shapes: vec![vec![spec.param_count()], vec![flat.len()]],
            });
        }
        Ok(ParamVector { spec, flat })
    }

    pub fn zeros(spec: MlpSpec) -> Self {
        let n = spec.param_count();
        ParamVector {
            spec,
            flat: vec![0.0; n],
        }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }

    /// Per-layer `(W: [n_out, n_in], b: [1, n_out])`.
    pub fn unflatten(&self) -> Vec<(Tensor, Tensor)> {
        self.spec
            .layers()
            .iter()
            .map(|l| {
                let w = self.flat[l.weight_offset..l.bias_offset].to_vec();
                let b = self.flat[l.bias_offset..l.bias_offset + l.n_out].to_vec();
                (Tensor::matrix(l.n_out, l.n_in, w).expect("layout"), Tensor::row(b))
            })
            .collect()
    }

    pub fn from_layers(spec: MlpSpec, layers: &[(Tensor, Tensor)]) -> Result<Self> {
        let layout = spec.layers();
        if layout.len() != layers.len() {
            return Err(Error::invalid("layer count differs from spec"));
        }
        let mut flat = Vec::with_capacity(spec.param_count());
        for (l, (w, b)) in layout.iter().zip(layers) {
            if w.shape() != [l.n_out, l.n_in] || b.len() != l.n_out {
                return Err(Error::Shape {
                    op: "from_layers",
                    shapes: vec![w.shape().to_vec(), b.shape().to_vec()],
                });
            }
            flat.extend_from_slice(w.data());
            flat.extend_from_slice(b.data());
        }
        ParamVector::new(spec, flat)
    }
}

/// Seeded initialization.
///
/// Sine networks: first-layer weights `U(−1/n_in, 1/n_in)`, later weights
/// `U(−√(6/n_in)/ω₀, √(6/n_in)/ω₀)`, sine-layer biases (phases)
/// `U(−ω₀/√n_in, ω₀/√n_in)`, output bias zero. Other activations: Glorot
/// uniform weights and `U(−1/√n_in, 1/√n_in)` biases.
pub fn init_params(spec: &MlpSpec, seed: u64) -> ParamVector {
    let mut rng = rng::seeded(seed);
    let mut flat = vec![0.0; spec.param_count()];
    let layers = spec.layers();
    let last = layers.len() - 1;
    for (i, l) in layers.iter().enumerate() {
        let n_in = l.n_in as f64;
        let (w_bound, b_bound) = match spec.activation {
            Activation::Sine => {
                let w = if i == 0 {
                    1.0 / n_in
                } else {
                    (6.0 / n_in).sqrt() / spec.omega0
                };
                let b = if i == last {
                    0.0
                } else {
                    spec.omega0 / n_in.sqrt()
                };
                (w, b)
            }
            _ => ((6.0 / (n_in + l.n_out as f64)).sqrt(), 1.0 / n_in.sqrt()),
        };
        for x in &mut flat[l.weight_offset..l.bias_offset] {
            *x = rng.gen_range(-w_bound..=w_bound);
        }
        for x in &mut flat[l.bias_offset..l.bias_offset + l.n_out] {
            *x = if b_bound > 0.0 {
                rng.gen_range(-b_bound..=b_bound)
            } else {
                0.0
            };
        }
    }
    ParamVector {
        spec: spec.clone(),
        flat,
    }
}

/// `sin(ω₀·(W x) + b)` for a single input vector.
pub fn sine_layer(x: &[f64], w: &Tensor, b: &[f64], omega0: f64) -> Result<Vec<f64>> {
    let (n_out, n_in) = w.dims2("sine_layer")?;
    if x.len() != n_in || b.len() != n_out {
        return Err(Error::Shape {
            op: "sine_layer",
            shapes: vec![vec![x.len()], w.shape().to_vec(), vec![b.len()]],
        });
    }
    Ok((0..n_out)
        .map(|o| {
            let dot: f64 = (0..n_in).map(|i| w.get2(o, i) * x[i]).sum();
            (omega0 * dot + b[o]).sin()
        })
        .collect())
}

/// Records the network on `tape`. `params` is any node whose flat data
/// contains this network's parameters starting at `offset`; `input` is
/// `[rows, n_in]`. Returns the `[rows, n_out]` output node.
pub fn forward_on_tape(
    tape: &mut Tape,
    spec: &MlpSpec,
    params: NodeId,
    offset: usize,
    input: NodeId,
) -> Result<NodeId> {
    check_capacity(tape, spec, params, offset)?;
    let layers = spec.layers();
    let last = layers.len() - 1;
    let mut h = input;
    for (i, l) in layers.iter().enumerate() {
        let w = tape.slice(params, offset + l.weight_offset, vec![l.n_out, l.n_in])?;
        let b = tape.slice(params, offset + l.bias_offset, vec![1, l.n_out])?;
        let mut z = tape.matmul_nt(h, w)?;
        if i < last && spec.activation == Activation::Sine {
            z = tape.scale(z, spec.omega0)?;
        }
        z = tape.add_row(z, b)?;
        h = if i < last { activate(tape, spec.activation, z)? } else { z };
    }
    Ok(h)
}

/// Forward pass that also carries `d output / d input` for a network with
/// a single input coordinate. Returns `(value, derivative)`, both
/// `[rows, n_out]`.
pub fn forward_with_derivative_on_tape(
    tape: &mut Tape,
    spec: &MlpSpec,
    params: NodeId,
    offset: usize,
    input: NodeId,
) -> Result<(NodeId, NodeId)> {
    check_capacity(tape, spec, params, offset)?;
    if spec.input_width() != 1 {
        return Err(Error::invalid("input derivative needs a scalar input coordinate"));
    }
    let rows = tape.value(input).shape()[0];
    let layers = spec.layers();
    let last = layers.len() - 1;
    let mut h = input;
    let mut dh = tape.constant(Tensor::filled(&[rows, 1], 1.0));
    for (i, l) in layers.iter().enumerate() {
        let w = tape.slice(params, offset + l.weight_offset, vec![l.n_out, l.n_in])?;
        let b = tape.slice(params, offset + l.bias_offset, vec![1, l.n_out])?;
        let mut z = tape.matmul_nt(h, w)?;
        let mut dz = tape.matmul_nt(dh, w)?;
        if i < last && spec.activation == Activation::Sine {
            z = tape.scale(z, spec.omega0)?;
            dz = tape.scale(dz, spec.omega0)?;
        }
        z = tape.add_row(z, b)?;
        if i == last {
            return Ok((z, dz));
        }
        let (a, da) = match spec.activation {
            Activation::Sine => (tape.sin(z)?, tape.cos(z)?),
            Activation::Relu => (tape.relu(z)?, tape.step(z)?),
            Activation::Tanh => {
                let a = tape.tanh(z)?;
                let sq = tape.square(a)?;
                let neg = tape.scale(sq, -1.0)?;
                (a, tape.add_scalar(neg, 1.0)?)
            }
            Activation::Sigmoid => {
                let a = tape.sigmoid(z)?;
                let neg = tape.scale(a, -1.0)?;
                let one_minus = tape.add_scalar(neg, 1.0)?;
                (a, tape.mul(a, one_minus)?)
            }
        };
        h = a;
        dh = tape.mul(da, dz)?;
    }
    unreachable!("an MLP has at least one layer")
}

fn check_capacity(tape: &Tape, spec: &MlpSpec, params: NodeId, offset: usize) -> Result<()> {
    let available = tape.value(params).len();
    if offset + spec.param_count() > available {
        return Err(Error::Shape {
            op: "mlp_params",
            shapes: vec![vec![offset, spec.param_count()], vec![available]],
        });
    }
    Ok(())
}

fn activate(tape: &mut Tape, activation: Activation, z: NodeId) -> Result<NodeId> {
    match activation {
        Activation::Sine => tape.sin(z),
        Activation::Relu => tape.relu(z),
        Activation::Tanh => tape.tanh(z),
        Activation::Sigmoid => tape.sigmoid(z),
    }
}

/// Network output at each coordinate in `t`, as `[channels, len(t)]`.
pub fn evaluate(params: &ParamVector, t: &[f64]) -> Result<Tensor> {
    let out = evaluate_rows(params, &Tensor::column(t.to_vec()))?;
    out.transpose()
}

/// Network output for a `[rows, n_in]` input, as `[rows, n_out]`.
pub fn evaluate_rows(params: &ParamVector, input: &Tensor) -> Result<Tensor> {
    let spec = params.spec();
    let (_, n_in) = input.dims2("evaluate")?;
    if n_in != spec.input_width() {
        return Err(Error::Shape {
            op: "evaluate",
            shapes: vec![input.shape().to_vec(), spec.widths.clone()],
        });
    }
    let mut tape = Tape::new();
    let p = tape.constant(Tensor::row(params.flat().to_vec()));
    let x = tape.constant(input.clone());
    let y = forward_on_tape(&mut tape, spec, p, 0, x)?;
    Ok(tape.value(y).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn default_siren_has_7501_params() {
        let spec = MlpSpec::siren(1);
        assert_eq!(spec.widths, vec![1, 60, 60, 60, 1]);
        assert_eq!(spec.param_count(), 120 + 3660 + 3660 + 61);
        assert_eq!(MlpSpec::siren(3).param_count(), 120 + 3660 + 3660 + 183);
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![1], Activation::Sine, 30.0).is_err());
        assert!(MlpSpec::new(vec![1, 0, 1], Activation::Relu, 30.0).is_err());
        assert!(MlpSpec::new(vec![1, 4, 1], Activation::Sine, 0.0).is_err());
        assert!(MlpSpec::new(vec![1, 4, 1], Activation::Relu, 0.0).is_ok());
    }

    #[test]
    fn sine_layer_examples() {
        let w = Tensor::matrix(1, 1, vec![1.0]).unwrap();
        assert_eq!(sine_layer(&[0.0], &w, &[0.0], 30.0).unwrap(), vec![0.0]);
        let y = sine_layer(&[0.0], &w, &[PI / 2.0], 1.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        assert!(sine_layer(&[0.0, 1.0], &w, &[0.0], 1.0).is_err());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let spec = MlpSpec::siren(1);
        let a = init_params(&spec, 7);
        assert_eq!(a, init_params(&spec, 7));
        assert_ne!(a, init_params(&spec, 8));
        let bound = (6.0f64 / 60.0).sqrt() / 30.0;
        for l in &spec.layers()[1..] {
            for w in &a.flat()[l.weight_offset..l.bias_offset] {
                assert!(w.abs() <= bound);
            }
        }
        assert!((bound - 0.0105).abs() < 1e-4);
        let first = spec.layers()[0];
        assert!(a.flat()[first.weight_offset..first.bias_offset].iter().all(|w| w.abs() <= 1.0));
    }

    #[test]
    fn zero_params_give_zero_output() {
        let p = ParamVector::zeros(MlpSpec::siren(1));
        let y = evaluate(&p, &[-1.0, -0.3, 0.2, 1.0]).unwrap();
        assert_eq!(y.shape(), &[1, 4]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flatten_roundtrip_is_exact() {
        let p = init_params(&MlpSpec::siren(2), 3);
        let layers = p.unflatten();
        let q = ParamVector::from_layers(p.spec().clone(), &layers).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn evaluation_is_pointwise() {
        let p = init_params(&MlpSpec::siren(1), 11);
        let coarse: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let fine: Vec<f64> = (0..17).map(|i| -1.0 + 0.125 * i as f64).collect();
        let a = evaluate(&p, &coarse).unwrap();
        let b = evaluate(&p, &fine).unwrap();
        for i in 0..9 {
            assert_eq!(a.data()[i], b.data()[2 * i]);
        }
    }

    #[test]
    fn mismatched_params_rejected() {
        assert!(ParamVector::new(MlpSpec::siren(1), vec![0.0; 7500]).is_err());
    }
}
