//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] is an append-only list of nodes. Each node records the
//! operation that produced it, the ids of its inputs and its cached value.
//! Inputs always precede the node that consumes them, so the backward pass
//! is a single sweep in reverse insertion order. Tapes are cheap to build
//! and are thrown away after every optimisation step.

use crate::autodiff::tensor::{gemm, Tensor};
use crate::error::{Error, Result};
use crate::spectral::{fft_in_place, Complex};

/// Index of a node on its tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Operations a node can record.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    /// Parameter or constant supplied from outside.
    Leaf,
    /// `[m,k] · [k,n]`.
    MatMul,
    /// `[m,k] · [n,k]ᵀ`, the natural layout for `x Wᵀ` with `W: [out,in]`.
    MatMulNT,
    Add,
    Sub,
    /// Elementwise product.
    Mul,
    /// `[m,n] + [1,n]`, broadcasting the row over every row of the left side.
    AddRow,
    Scale(f64),
    AddScalar(f64),
    Sin,
    Cos,
    Relu,
    /// Heaviside step (`x > 0`); its derivative is taken to be zero.
    Step,
    Tanh,
    Sigmoid,
    Square,
    Abs,
    /// Sum of all entries, `[1,1]`.
    Sum,
    /// Mean of all entries, `[1,1]`.
    Mean,
    /// Column means, `[m,n] → [1,n]`.
    MeanRows,
    /// Contiguous copy of `numel(shape)` entries starting at flat `offset`.
    Slice { offset: usize, shape: Vec<usize> },
    /// Row-wise stacking of inputs that share a column count.
    Concat,
    /// Matrix transpose, `[m,n] → [n,m]`.
    Transpose,
    /// One-sided spectrum of a real vector, zero-padded to a power of two.
    /// Output is `[bins, 2]` holding `(re, im)` per bin.
    Rfft,
    /// Modulus of `(re, im)` rows, `[m,2] → [m,1]`.
    ComplexAbs,
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul => "matmul",
            Op::MatMulNT => "matmul_nt",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::AddRow => "add_row",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::Relu => "relu",
            Op::Step => "step",
            Op::Tanh => "tanh",
            Op::Sigmoid => "sigmoid",
            Op::Square => "square",
            Op::Abs => "abs",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::MeanRows => "mean_rows",
            Op::Slice { .. } => "slice",
            Op::Concat => "concat",
            Op::Transpose => "transpose",
            Op::Rfft => "rfft",
            Op::ComplexAbs => "complex_abs",
        }
    }
}

struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    value: Tensor,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    /// Gradient of the loss with respect to `id`; zeros when `id` does not
    /// influence the loss.
    pub fn wrt(&self, id: NodeId) -> Tensor {
        self.get(id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[id.0]))
    }

    pub fn take(&mut self, id: NodeId) -> Tensor {
        self.grads[id.0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[id.0]))
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, Vec::new(), value, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, Vec::new(), value, false)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value.data()[0]
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, value: Tensor, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            inputs,
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Record `op` applied to `inputs` and return the new node.
    pub fn apply(&mut self, op: Op, inputs: &[NodeId]) -> Result<NodeId> {
        if op == Op::Leaf {
            return Err(Error::invalid("leaves are created with param/constant"));
        }
        if inputs.iter().any(|id| id.0 >= self.nodes.len()) {
            return Err(Error::invalid(format!("{}: unknown input node", op.name())));
        }
        let values: Vec<&Tensor> = inputs.iter().map(|id| &self.nodes[id.0].value).collect();
        let value = forward_value(&op, &values)?;
        if !value.all_finite() {
            return Err(Error::NonFinite {
                context: format!("op {}", op.name()),
            });
        }
        let requires_grad = inputs.iter().any(|id| self.nodes[id.0].requires_grad);
        Ok(self.push(op, inputs.to_vec(), value, requires_grad))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::MatMul, &[a, b])
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::MatMulNT, &[a, b])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::Add, &[a, b])
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::Mul, &[a, b])
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        self.apply(Op::AddRow, &[a, row])
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        self.apply(Op::Scale(factor), &[a])
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.apply(Op::AddScalar(c), &[a])
    }

    pub fn sin(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Sin, &[a])
    }

    pub fn cos(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Cos, &[a])
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Relu, &[a])
    }

    pub fn step(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Step, &[a])
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Tanh, &[a])
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Sigmoid, &[a])
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Square, &[a])
    }

    pub fn abs(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Abs, &[a])
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Sum, &[a])
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Mean, &[a])
    }

    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::MeanRows, &[a])
    }

    pub fn slice(&mut self, a: NodeId, offset: usize, shape: Vec<usize>) -> Result<NodeId> {
        self.apply(Op::Slice { offset, shape }, &[a])
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        self.apply(Op::Concat, parts)
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Transpose, &[a])
    }

    pub fn rfft(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::Rfft, &[a])
    }

    pub fn complex_abs(&mut self, a: NodeId) -> Result<NodeId> {
        self.apply(Op::ComplexAbs, &[a])
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let root = self
            .nodes
            .get(loss.0)
            .ok_or_else(|| Error::invalid("backward: unknown loss node"))?;
        if !root.value.is_scalar() {
            return Err(Error::Shape {
                op: "backward",
                shapes: vec![root.value.shape().to_vec()],
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::filled(root.value.shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if node.op == Op::Leaf || !node.requires_grad {
                continue;
            }
            let (before, rest) = grads.split_at_mut(i);
            let Some(g) = rest[0].as_ref() else { continue };
            self.propagate(node, g, before)?;
        }

        // Intermediate adjoints are not part of the result.
        for (i, node) in self.nodes.iter().enumerate().take(loss.0 + 1) {
            if !(node.op == Op::Leaf && node.requires_grad) {
                grads[i] = None;
            }
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let inputs = &node.inputs;
        let needs = |k: usize| self.nodes[inputs[k].0].requires_grad;
        let val = |k: usize| &self.nodes[inputs[k].0].value;
        let out = &node.value;

        match &node.op {
            Op::Leaf => {}
            Op::MatMul => {
                let (m, k) = val(0).dims2("matmul")?;
                let n = val(1).shape()[1];
                if needs(0) {
                    // dA = G · Bᵀ
                    let acc = slot(grads, inputs[0], val(0).shape());
                    gemm(m, n, k, (g.data(), n, 1), (val(1).data(), 1, n), acc.data_mut(), true);
                }
                if needs(1) {
                    // dB = Aᵀ · G
                    let acc = slot(grads, inputs[1], val(1).shape());
                    gemm(k, m, n, (val(0).data(), 1, k), (g.data(), n, 1), acc.data_mut(), true);
                }
            }
            Op::MatMulNT => {
                let (m, k) = val(0).dims2("matmul_nt")?;
                let n = val(1).shape()[0];
                if needs(0) {
                    // dA = G · B
                    let acc = slot(grads, inputs[0], val(0).shape());
                    gemm(m, n, k, (g.data(), n, 1), (val(1).data(), k, 1), acc.data_mut(), true);
                }
                if needs(1) {
                    // dB = Gᵀ · A
                    let acc = slot(grads, inputs[1], val(1).shape());
                    gemm(n, m, k, (g.data(), 1, n), (val(0).data(), k, 1), acc.data_mut(), true);
                }
            }
            Op::Add => {
                for k in 0..2 {
                    if needs(k) {
                        slot(grads, inputs[k], val(k).shape()).add_assign(g);
                    }
                }
            }
            Op::Sub => {
                if needs(0) {
                    slot(grads, inputs[0], val(0).shape()).add_assign(g);
                }
                if needs(1) {
                    axpy(slot(grads, inputs[1], val(1).shape()), -1.0, g.data());
                }
            }
            Op::Mul => {
                for (k, other) in [(0usize, 1usize), (1, 0)] {
                    if needs(k) {
                        let o = val(other).data();
                        let acc = slot(grads, inputs[k], val(k).shape());
                        for ((a, gi), oi) in acc.data_mut().iter_mut().zip(g.data()).zip(o) {
                            *a += gi * oi;
                        }
                    }
                }
            }
            Op::AddRow => {
                if needs(0) {
                    slot(grads, inputs[0], val(0).shape()).add_assign(g);
                }
                if needs(1) {
                    let n = val(1).len();
                    let acc = slot(grads, inputs[1], val(1).shape());
                    for row in g.data().chunks_exact(n) {
                        for (a, gi) in acc.data_mut().iter_mut().zip(row) {
                            *a += gi;
                        }
                    }
                }
            }
            Op::Scale(c) => {
                if needs(0) {
                    axpy(slot(grads, inputs[0], val(0).shape()), *c, g.data());
                }
            }
            Op::AddScalar(_) => {
                if needs(0) {
                    slot(grads, inputs[0], val(0).shape()).add_assign(g);
                }
            }
            Op::Sin => unary(grads, inputs[0], val(0), g, |x, _| x.cos()),
            Op::Cos => unary(grads, inputs[0], val(0), g, |x, _| -x.sin()),
            Op::Relu => unary(grads, inputs[0], val(0), g, |x, _| if x > 0.0 { 1.0 } else { 0.0 }),
            Op::Step => {}
            Op::Tanh => unary_out(grads, inputs[0], val(0), out, g, |y| 1.0 - y * y),
            Op::Sigmoid => unary_out(grads, inputs[0], val(0), out, g, |y| y * (1.0 - y)),
            Op::Square => unary(grads, inputs[0], val(0), g, |x, _| 2.0 * x),
            Op::Abs => unary(grads, inputs[0], val(0), g, |x, _| {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }),
            Op::Sum | Op::Mean => {
                let x = val(0);
                let scale = if node.op == Op::Mean {
                    1.0 / x.len() as f64
                } else {
                    1.0
                };
                let gv = g.data()[0] * scale;
                for a in slot(grads, inputs[0], x.shape()).data_mut() {
                    *a += gv;
                }
            }
            Op::MeanRows => {
                let (m, n) = val(0).dims2("mean_rows")?;
                let inv = 1.0 / m as f64;
                let acc = slot(grads, inputs[0], val(0).shape());
                for row in acc.data_mut().chunks_exact_mut(n) {
                    for (a, gi) in row.iter_mut().zip(g.data()) {
                        *a += gi * inv;
                    }
                }
            }
            Op::Slice { offset, .. } => {
                let acc = slot(grads, inputs[0], val(0).shape());
                for (a, gi) in acc.data_mut()[*offset..*offset + g.len()].iter_mut().zip(g.data()) {
                    *a += gi;
                }
            }
            Op::Concat => {
                let mut start = 0;
                for (k, id) in inputs.iter().enumerate() {
                    let len = val(k).len();
                    if needs(k) {
                        let acc = slot(grads, *id, val(k).shape());
                        acc.add_assign(&Tensor::new(
                            val(k).shape().to_vec(),
                            g.data()[start..start + len].to_vec(),
                        )?);
                    }
                    start += len;
                }
            }
            Op::Transpose => {
                let acc = slot(grads, inputs[0], val(0).shape());
                acc.add_assign(&g.transpose()?);
            }
            Op::Rfft => {
                let n = val(0).len();
                let padded = n.next_power_of_two().max(2);
                let bins = padded / 2 + 1;
                // Adjoint of "pad, DFT, keep first bins": Re(FFT(conj(G))) truncated to n.
                let mut buf = vec![Complex::ZERO; padded];
                for (k, b) in buf.iter_mut().take(bins).enumerate() {
                    *b = Complex::new(g.data()[2 * k], -g.data()[2 * k + 1]);
                }
                fft_in_place(&mut buf, false);
                let acc = slot(grads, inputs[0], val(0).shape());
                for (a, b) in acc.data_mut().iter_mut().zip(&buf) {
                    *a += b.re;
                }
            }
            Op::ComplexAbs => {
                let x = val(0).data();
                let acc = slot(grads, inputs[0], val(0).shape());
                for (i, gi) in g.data().iter().enumerate() {
                    let r = out.data()[i];
                    if r > 0.0 {
                        acc.data_mut()[2 * i] += gi * x[2 * i] / r;
                        acc.data_mut()[2 * i + 1] += gi * x[2 * i + 1] / r;
                    }
                }
            }
        }
        Ok(())
    }
}

fn slot<'a>(grads: &'a mut [Option<Tensor>], id: NodeId, shape: &[usize]) -> &'a mut Tensor {
    grads[id.0].get_or_insert_with(|| Tensor::zeros(shape))
}

fn axpy(acc: &mut Tensor, alpha: f64, x: &[f64]) {
    for (a, xi) in acc.data_mut().iter_mut().zip(x) {
        *a += alpha * xi;
    }
}

fn unary(grads: &mut [Option<Tensor>], id: NodeId, x: &Tensor, g: &Tensor, d: impl Fn(f64, usize) -> f64) {
    let acc = slot(grads, id, x.shape());
    for (i, ((a, xi), gi)) in acc.data_mut().iter_mut().zip(x.data()).zip(g.data()).enumerate() {
        *a += gi * d(*xi, i);
    }
}

fn unary_out(
    grads: &mut [Option<Tensor>],
    id: NodeId,
    x: &Tensor,
    out: &Tensor,
    g: &Tensor,
    d: impl Fn(f64) -> f64,
) {
    let acc = slot(grads, id, x.shape());
    for ((a, yi), gi) in acc.data_mut().iter_mut().zip(out.data()).zip(g.data()) {
        *a += gi * d(*yi);
    }
}

fn mismatch(op: &Op, inputs: &[&Tensor]) -> Error {
    Error::Shape {
        op: op.name(),
        shapes: inputs.iter().map(|t| t.shape().to_vec()).collect(),
    }
}

fn forward_value(op: &Op, inputs: &[&Tensor]) -> Result<Tensor> {
    let arity = match op {
        Op::Leaf => 0,
        Op::MatMul | Op::MatMulNT | Op::Add | Op::Sub | Op::Mul | Op::AddRow => 2,
        Op::Concat => inputs.len().max(1),
        _ => 1,
    };
    if inputs.len() != arity {
        return Err(mismatch(op, inputs));
    }
    let elementwise = |f: fn(f64) -> f64| inputs[0].map(f);
    let value = match op {
        Op::Leaf => unreachable!(),
        Op::MatMul => inputs[0].matmul(inputs[1]).map_err(|_| mismatch(op, inputs))?,
        Op::MatMulNT => {
            let (m, k) = inputs[0].dims2("matmul_nt").map_err(|_| mismatch(op, inputs))?;
            let (n, k2) = inputs[1].dims2("matmul_nt").map_err(|_| mismatch(op, inputs))?;
            if k != k2 {
                return Err(mismatch(op, inputs));
            }
            let mut out = Tensor::zeros(&[m, n]);
            gemm(m, k, n, (inputs[0].data(), k, 1), (inputs[1].data(), 1, k), out.data_mut(), false);
            out
        }
        Op::Add | Op::Sub | Op::Mul => {
            if inputs[0].shape() != inputs[1].shape() {
                return Err(mismatch(op, inputs));
            }
            let f: fn(f64, f64) -> f64 = match op {
                Op::Add => |a, b| a + b,
                Op::Sub => |a, b| a - b,
                _ => |a, b| a * b,
            };
            let data = inputs[0].data().iter().zip(inputs[1].data()).map(|(a, b)| f(*a, *b)).collect();
            Tensor::new(inputs[0].shape().to_vec(), data)?
        }
        Op::AddRow => {
            let (_, n) = inputs[0].dims2("add_row").map_err(|_| mismatch(op, inputs))?;
            if inputs[1].shape() != [1, n] {
                return Err(mismatch(op, inputs));
            }
            let mut out = inputs[0].clone();
            for row in out.data_mut().chunks_exact_mut(n) {
                for (a, b) in row.iter_mut().zip(inputs[1].data()) {
                    *a += b;
                }
            }
            out
        }
        Op::Scale(c) => {
            let c = *c;
            inputs[0].map(|x| c * x)
        }
        Op::AddScalar(c) => {
            let c = *c;
            inputs[0].map(|x| x + c)
        }
        Op::Sin => elementwise(f64::sin),
        Op::Cos => elementwise(f64::cos),
        Op::Relu => elementwise(|x| x.max(0.0)),
        Op::Step => elementwise(|x| if x > 0.0 { 1.0 } else { 0.0 }),
        Op::Tanh => elementwise(f64::tanh),
        Op::Sigmoid => elementwise(|x| 1.0 / (1.0 + (-x).exp())),
        Op::Square => elementwise(|x| x * x),
        Op::Abs => elementwise(f64::abs),
        Op::Sum => Tensor::scalar(inputs[0].sum()),
        Op::Mean => {
            if inputs[0].is_empty() {
                return Err(mismatch(op, inputs));
            }
            Tensor::scalar(inputs[0].sum() / inputs[0].len() as f64)
        }
        Op::MeanRows => {
            let (m, n) = inputs[0].dims2("mean_rows").map_err(|_| mismatch(op, inputs))?;
            if m == 0 {
                return Err(mismatch(op, inputs));
            }
            let mut acc = vec![0.0; n];
            for row in inputs[0].data().chunks_exact(n) {
                for (a, x) in acc.iter_mut().zip(row) {
                    *a += x;
                }
            }
            let inv = 1.0 / m as f64;
            acc.iter_mut().for_each(|a| *a *= inv);
            Tensor::row(acc)
        }
        Op::Slice { offset, shape } => {
            let numel: usize = shape.iter().product();
            if offset + numel > inputs[0].len() {
                return Err(Error::Shape {
                    op: "slice",
                    shapes: vec![inputs[0].shape().to_vec(), vec![*offset], shape.clone()],
                });
            }
            Tensor::new(shape.clone(), inputs[0].data()[*offset..offset + numel].to_vec())?
        }
        Op::Concat => {
            let (_, cols) = inputs[0].dims2("concat").map_err(|_| mismatch(op, inputs))?;
            let mut rows = 0;
            let mut data = Vec::new();
            for t in inputs {
                let (r, c) = t.dims2("concat").map_err(|_| mismatch(op, inputs))?;
                if c != cols {
                    return Err(mismatch(op, inputs));
                }
                rows += r;
                data.extend_from_slice(t.data());
            }
            Tensor::matrix(rows, cols, data)?
        }
        Op::Transpose => inputs[0].transpose().map_err(|_| mismatch(op, inputs))?,
        Op::Rfft => {
            let x = inputs[0];
            let is_vector = x.shape().iter().filter(|&&d| d > 1).count() <= 1;
            if x.len() < 2 || !is_vector {
                return Err(mismatch(op, inputs));
            }
            let spectrum = crate::spectral::rfft(x.data())?;
            let mut data = Vec::with_capacity(2 * spectrum.bins().len());
            for b in spectrum.bins() {
                data.push(b.re);
                data.push(b.im);
            }
            Tensor::matrix(spectrum.bins().len(), 2, data)?
        }
        Op::ComplexAbs => {
            let (m, c) = inputs[0].dims2("complex_abs").map_err(|_| mismatch(op, inputs))?;
            if c != 2 {
                return Err(mismatch(op, inputs));
            }
            let d = inputs[0].data();
            Tensor::column((0..m).map(|i| d[2 * i].hypot(d[2 * i + 1])).collect())
        }
    };
    Ok(value)
}
