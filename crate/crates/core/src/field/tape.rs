//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! Every value is a 2-D array; row vectors are `1 × d`. A [`Tape`] records
//! operations in execution order and [`Tape::backward`] sweeps them in
//! reverse, accumulating gradients for parameter nodes.

use std::collections::HashMap;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use ndarray::{s, Array2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::{Float, FromPrimitive};

/// Floating-point element type usable on the tape.
pub trait Real:
    Float + FromPrimitive + LinalgScalar + ScalarOperand + AddAssign + Sum + Debug + Display + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Geometry of a 3×3, stride-2, pad-1 convolution on a row-major grid whose
/// rows are spatial positions and columns are channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_h: usize,
    pub in_w: usize,
    pub channels: usize,
}

impl ConvGeom {
    pub const KERNEL: usize = 3;
    pub const STRIDE: usize = 2;
    pub const PAD: usize = 1;

    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * Self::PAD - Self::KERNEL) / Self::STRIDE + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * Self::PAD - Self::KERNEL) / Self::STRIDE + 1
    }

    pub fn next(&self, channels: usize) -> ConvGeom {
        ConvGeom { in_h: self.out_h(), in_w: self.out_w(), channels }
    }

    /// Input position feeding output `(oy, ox)` through kernel tap `(ky, kx)`.
    fn source(&self, oy: usize, ox: usize, ky: usize, kx: usize) -> Option<usize> {
        let y = (oy * Self::STRIDE + ky).checked_sub(Self::PAD)?;
        let x = (ox * Self::STRIDE + kx).checked_sub(Self::PAD)?;
        (y < self.in_h && x < self.in_w).then_some(y * self.in_w + x)
    }

    fn im2col<T: Real>(&self, input: &Array2<T>) -> Array2<T> {
        let (oh, ow, c) = (self.out_h(), self.out_w(), self.channels);
        let mut cols = Array2::zeros((oh * ow, 9 * c));
        for oy in 0..oh {
            for ox in 0..ow {
                let row = oy * ow + ox;
                for ky in 0..3 {
                    for kx in 0..3 {
                        if let Some(src) = self.source(oy, ox, ky, kx) {
                            let base = (ky * 3 + kx) * c;
                            cols.slice_mut(s![row, base..base + c]).assign(&input.row(src));
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im<T: Real>(&self, cols: &Array2<T>) -> Array2<T> {
        let (oh, ow, c) = (self.out_h(), self.out_w(), self.channels);
        let mut out = Array2::zeros((self.in_h * self.in_w, c));
        for oy in 0..oh {
            for ox in 0..ow {
                let row = oy * ow + ox;
                for ky in 0..3 {
                    for kx in 0..3 {
                        if let Some(dst) = self.source(oy, ox, ky, kx) {
                            let base = (ky * 3 + kx) * c;
                            let mut target = out.row_mut(dst);
                            target += &cols.slice(s![row, base..base + c]);
                        }
                    }
                }
            }
        }
        out
    }
}

enum Op<T> {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, T),
    AddScalar(Var),
    Relu(Var),
    /// `softplus(beta * x) / beta`
    Softplus(Var, T),
    /// `sigmoid(beta * x)`, the derivative of [`Op::Softplus`].
    SigmoidScaled(Var, T),
    Tanh(Var),
    Square(Var),
    /// `sqrt(x + eps)`
    Sqrt(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    TileRows(Var, usize),
    BroadcastRows(Var),
    MaxRows(Var, Vec<usize>),
    MeanRows(Var),
    Reshape(Var),
    Conv(Var, Var, ConvGeom, Array2<T>),
    HuberMean(Var, Array2<T>, T),
    WeightedSqErr(Var, Array2<T>, Array2<T>),
    /// Weighted softmax cross-entropy; stores softmax probabilities.
    SoftmaxCe(Var, Vec<usize>, Vec<T>, Array2<T>),
}

struct Node<T> {
    value: Array2<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Records a computation graph for one forward/backward pass.
pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<usize, Var>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), param_nodes: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<T> {
        &self.nodes[v.0].value
    }

    /// Value of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value[[0, 0]]
    }

    fn push(&mut self, value: Array2<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let needs_grad = match op {
            Op::Leaf => false,
            Op::Param(_) => true,
            _ => inputs.iter().any(|v| self.nodes[v.0].needs_grad),
        };
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Array2<T>) -> Var {
        self.push(value, Op::Leaf, &[])
    }

    /// Trainable tensor `id`; repeated calls return the same node.
    pub fn param(&mut self, id: usize, value: &Array2<T>) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        let v = self.push(value.clone(), Op::Param(id), &[]);
        self.param_nodes.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(self.value(b));
        self.push(value, Op::MatMul(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) + self.value(b);
        self.push(value, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) - self.value(b);
        self.push(value, Op::Sub(a, b), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) * self.value(b);
        self.push(value, Op::Mul(a, b), &[a, b])
    }

    /// Adds a `1 × d` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a row vector");
        let value = self.value(a) + self.value(row);
        self.push(value, Op::AddRow(a, row), &[a, row])
    }

    pub fn scale(&mut self, a: Var, k: T) -> Var {
        let value = self.value(a) * k;
        self.push(value, Op::Scale(a, k), &[a])
    }

    pub fn add_scalar(&mut self, a: Var, k: T) -> Var {
        let value = self.value(a) + k;
        self.push(value, Op::AddScalar(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.max(T::zero()));
        self.push(value, Op::Relu(a), &[a])
    }

    pub fn softplus(&mut self, a: Var, beta: T) -> Var {
        let value = self.value(a).mapv(|x| softplus(x * beta) / beta);
        self.push(value, Op::Softplus(a, beta), &[a])
    }

    pub fn sigmoid_scaled(&mut self, a: Var, beta: T) -> Var {
        let value = self.value(a).mapv(|x| sigmoid(x * beta));
        self.push(value, Op::SigmoidScaled(a, beta), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.sigmoid_scaled(a, T::one())
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.tanh());
        self.push(value, Op::Tanh(a), &[a])
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x * x);
        self.push(value, Op::Square(a), &[a])
    }

    pub fn sqrt_eps(&mut self, a: Var, eps: T) -> Var {
        let value = self.value(a).mapv(|x| (x + eps).sqrt());
        self.push(value, Op::Sqrt(a), &[a])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|v| self.value(*v).view()).collect();
        let value = ndarray::concatenate(Axis(1), &views).expect("row counts agree");
        self.push(value, Op::ConcatCols(parts.to_vec()), parts)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let value = self.value(a).slice(s![.., start..start + width]).to_owned();
        self.push(value, Op::SliceCols(a, start), &[a])
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, height: usize) -> Var {
        let value = self.value(a).slice(s![start..start + height, ..]).to_owned();
        self.push(value, Op::SliceRows(a, start), &[a])
    }

    /// Stacks `times` copies of `a` vertically.
    pub fn tile_rows(&mut self, a: Var, times: usize) -> Var {
        let x = self.value(a);
        let views: Vec<_> = (0..times).map(|_| x.view()).collect();
        let value = ndarray::concatenate(Axis(0), &views).expect("same shapes");
        self.push(value, Op::TileRows(a, times), &[a])
    }

    /// Repeats a `1 × d` row `n` times.
    pub fn broadcast_rows(&mut self, a: Var, n: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.nrows(), 1, "broadcast_rows expects a row vector");
        let value = x.broadcast((n, x.ncols())).expect("row broadcast").to_owned();
        self.push(value, Op::BroadcastRows(a), &[a])
    }

    /// Column-wise maximum over rows, producing `1 × d`.
    pub fn max_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut value = Array2::zeros((1, x.ncols()));
        let mut argmax = Vec::with_capacity(x.ncols());
        for (j, col) in x.columns().into_iter().enumerate() {
            let mut best = 0;
            for (i, &v) in col.iter().enumerate() {
                if v > col[best] {
                    best = i;
                }
            }
            value[[0, j]] = col[best];
            argmax.push(best);
        }
        self.push(value, Op::MaxRows(a, argmax), &[a])
    }

    pub fn mean_rows(&mut self, a: Var) -> Var {
        let value = self.value(a).mean_axis(Axis(0)).expect("nonempty").insert_axis(Axis(0));
        self.push(value, Op::MeanRows(a), &[a])
    }

    /// Row-major reshape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let flat: Vec<T> = self.value(a).iter().copied().collect();
        let value = Array2::from_shape_vec((rows, cols), flat).expect("element count preserved");
        self.push(value, Op::Reshape(a), &[a])
    }

    /// Convolution of `input` (`in_h·in_w × channels`) with `weight`
    /// (`9·channels × out_channels`).
    pub fn conv(&mut self, input: Var, weight: Var, geom: ConvGeom) -> Var {
        assert_eq!(self.value(input).dim(), (geom.in_h * geom.in_w, geom.channels));
        let cols = geom.im2col(self.value(input));
        let value = cols.dot(self.value(weight));
        self.push(value, Op::Conv(input, weight, geom, cols), &[input, weight])
    }

    /// Mean Huber loss of `a` against a constant target.
    pub fn huber_mean(&mut self, a: Var, target: Array2<T>, delta: T) -> Var {
        let x = self.value(a);
        let n = T::from_usize(x.len()).expect("count");
        let half = T::lit(0.5);
        let total = Zip::from(x).and(&target).fold(T::zero(), |acc, &p, &t| {
            let r = (p - t).abs();
            acc + if r <= delta { half * r * r } else { delta * (r - half * delta) }
        });
        self.push(Array2::from_elem((1, 1), total / n), Op::HuberMean(a, target, delta), &[a])
    }

    /// `Σ w·(a − target)²`
    pub fn weighted_sq_err(&mut self, a: Var, target: Array2<T>, weights: Array2<T>) -> Var {
        let total = Zip::from(self.value(a))
            .and(&target)
            .and(&weights)
            .fold(T::zero(), |acc, &p, &t, &w| acc + w * (p - t) * (p - t));
        self.push(Array2::from_elem((1, 1), total), Op::WeightedSqErr(a, target, weights), &[a])
    }

    /// `Σ_i w_i · CE(softmax(logits_i), target_i)`
    pub fn softmax_ce(&mut self, logits: Var, targets: Vec<usize>, weights: Vec<T>) -> Var {
        let x = self.value(logits);
        assert_eq!(x.nrows(), targets.len());
        assert_eq!(x.nrows(), weights.len());
        let mut probs = x.clone();
        let mut total = T::zero();
        for (i, mut row) in probs.rows_mut().into_iter().enumerate() {
            let m = row.fold(T::neg_infinity(), |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - m).exp());
            let z: T = row.sum();
            if weights[i] != T::zero() {
                total += weights[i] * (m + z.ln() - x[[i, targets[i]]]);
            }
            row.mapv_inplace(|v| v / z);
        }
        self.push(Array2::from_elem((1, 1), total), Op::SoftmaxCe(logits, targets, weights, probs), &[logits])
    }

    /// Gradients of the scalar `loss` with respect to every parameter node,
    /// keyed by parameter id.
    pub fn backward(&self, loss: Var) -> HashMap<usize, Array2<T>> {
        assert_eq!(self.value(loss).dim(), (1, 1), "loss must be a scalar");
        let mut grads: Vec<Option<Array2<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones((1, 1)));
        let mut out = HashMap::new();
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let mut send = |v: Var, d: Array2<T>| {
                if self.nodes[v.0].needs_grad {
                    match &mut grads[v.0] {
                        Some(acc) => *acc += &d,
                        slot => *slot = Some(d),
                    }
                }
            };
            let needs = |v: &Var| self.nodes[v.0].needs_grad;
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => {
                    out.insert(*id, g);
                }
                Op::MatMul(a, b) => {
                    if needs(a) {
                        send(*a, g.dot(&self.value(*b).t()));
                    }
                    if needs(b) {
                        send(*b, self.value(*a).t().dot(&g));
                    }
                }
                Op::Add(a, b) => {
                    if needs(b) {
                        send(*b, g.clone());
                    }
                    send(*a, g);
                }
                Op::Sub(a, b) => {
                    if needs(b) {
                        send(*b, g.mapv(|v| -v));
                    }
                    send(*a, g);
                }
                Op::Mul(a, b) => {
                    if needs(a) {
                        send(*a, &g * self.value(*b));
                    }
                    if needs(b) {
                        send(*b, &g * self.value(*a));
                    }
                }
                Op::AddRow(a, row) => {
                    if needs(row) {
                        send(*row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    send(*a, g);
                }
                Op::Scale(a, k) => send(*a, g * *k),
                Op::AddScalar(a) => send(*a, g),
                Op::Relu(a) => {
                    let mut d = g;
                    Zip::from(&mut d).and(self.value(*a)).for_each(|d, &x| {
                        if x <= T::zero() {
                            *d = T::zero();
                        }
                    });
                    send(*a, d);
                }
                Op::Softplus(a, beta) => {
                    let mut d = g;
                    Zip::from(&mut d).and(self.value(*a)).for_each(|d, &x| *d = *d * sigmoid(x * *beta));
                    send(*a, d);
                }
                Op::SigmoidScaled(a, beta) => {
                    let mut d = g;
                    Zip::from(&mut d).and(&node.value).for_each(|d, &s| *d = *d * *beta * s * (T::one() - s));
                    send(*a, d);
                }
                Op::Tanh(a) => {
                    let mut d = g;
                    Zip::from(&mut d).and(&node.value).for_each(|d, &t| *d = *d * (T::one() - t * t));
                    send(*a, d);
                }
                Op::Square(a) => {
                    let two = T::lit(2.0);
                    let mut d = g;
                    Zip::from(&mut d).and(self.value(*a)).for_each(|d, &x| *d = *d * two * x);
                    send(*a, d);
                }
                Op::Sqrt(a) => {
                    let half = T::lit(0.5);
                    let mut d = g;
                    Zip::from(&mut d).and(&node.value).for_each(|d, &r| *d = *d * half / r);
                    send(*a, d);
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        if needs(p) {
                            send(*p, g.slice(s![.., start..start + w]).to_owned());
                        }
                        start += w;
                    }
                }
                Op::SliceCols(a, start) => {
                    let mut d = Array2::zeros(self.value(*a).raw_dim());
                    d.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    send(*a, d);
                }
                Op::SliceRows(a, start) => {
                    let mut d = Array2::zeros(self.value(*a).raw_dim());
                    d.slice_mut(s![*start..*start + g.nrows(), ..]).assign(&g);
                    send(*a, d);
                }
                Op::TileRows(a, times) => {
                    let n = self.value(*a).nrows();
                    let mut d = g.slice(s![0..n, ..]).to_owned();
                    for k in 1..*times {
                        d += &g.slice(s![k * n..(k + 1) * n, ..]);
                    }
                    send(*a, d);
                }
                Op::BroadcastRows(a) => send(*a, g.sum_axis(Axis(0)).insert_axis(Axis(0))),
                Op::MaxRows(a, argmax) => {
                    let mut d = Array2::zeros(self.value(*a).raw_dim());
                    for (j, &i) in argmax.iter().enumerate() {
                        d[[i, j]] = g[[0, j]];
                    }
                    send(*a, d);
                }
                Op::MeanRows(a) => {
                    let x = self.value(*a);
                    let n = T::from_usize(x.nrows()).expect("count");
                    let row = &g / n;
                    send(*a, row.broadcast(x.raw_dim()).expect("row broadcast").to_owned());
                }
                Op::Reshape(a) => {
                    let flat: Vec<T> = g.iter().copied().collect();
                    send(*a, Array2::from_shape_vec(self.value(*a).raw_dim(), flat).expect("element count"));
                }
                Op::Conv(input, weight, geom, cols) => {
                    if needs(weight) {
                        send(*weight, cols.t().dot(&g));
                    }
                    if needs(input) {
                        let dcols = g.dot(&self.value(*weight).t());
                        send(*input, geom.col2im(&dcols));
                    }
                }
                Op::HuberMean(a, target, delta) => {
                    let x = self.value(*a);
                    let scale = g[[0, 0]] / T::from_usize(x.len()).expect("count");
                    let mut d = x - target;
                    d.mapv_inplace(|r| r.max(-*delta).min(*delta) * scale);
                    send(*a, d);
                }
                Op::WeightedSqErr(a, target, weights) => {
                    let two = T::lit(2.0) * g[[0, 0]];
                    let mut d = self.value(*a) - target;
                    Zip::from(&mut d).and(weights).for_each(|d, &w| *d = two * w * *d);
                    send(*a, d);
                }
                Op::SoftmaxCe(a, targets, weights, probs) => {
                    let scale = g[[0, 0]];
                    let mut d = probs.clone();
                    for (i, (mut row, &t)) in d.rows_mut().into_iter().zip(targets).enumerate() {
                        row[t] = row[t] - T::one();
                        let w = weights[i] * scale;
                        row.mapv_inplace(|v| v * w);
                    }
                    send(*a, d);
                }
            }
        }
        out
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn softplus<T: Real>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}
