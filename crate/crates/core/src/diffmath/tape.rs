//! Reverse-mode differentiation over an append-only tape.
//!
//! Every operation is evaluated eagerly when it is recorded, so each [`Var`] carries its
//! value. Nodes only reference earlier nodes, which keeps the graph acyclic and makes tape
//! order a valid topological order.
//!
//! Two reverse sweeps are provided:
//!
//! * [`Tape::backward`] accumulates plain matrices and is used for parameter updates.
//! * [`Tape::grad`] records the adjoint computation itself on the tape, so the resulting
//!   gradient is a [`Var`] that can be differentiated again. This is what the gradient
//!   penalty needs: the penalty is a function of an input gradient, and its derivative with
//!   respect to the critic parameters goes through that gradient.
//!
//! Rectifier derivatives are recorded as constant masks. The second derivative of a
//! piecewise-linear activation is zero off the kink set, so double differentiation is exact
//! there. At exactly zero the negative-side slope is used.

use crate::diffmath::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    /// Adds a 1×n row to every row of the first operand.
    BiasAdd(Var, Var),
    LeakyRelu(Var, T),
    Relu(Var),
    Sigmoid(Var),
    Exp(Var),
    /// Elementwise `1/x`, with `1/0` defined as 0.
    SafeRecip(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddScalar(Var, T),
    RowSqNorm(Var),
    RowNorm(Var),
    MeanRows(Var),
    SumRows(Var),
    SumCols(Var),
    BroadcastRows(Var, usize),
    BroadcastCols(Var, usize),
    LogSumExp(Var),
    Transpose(Var),
    ConcatCols(Var, Var),
    SliceCols(Var, usize, usize),
    /// Fused per-row `logsumexp(x) - x[label]`. First-order only.
    SoftmaxCrossEntropy(Var, Vec<usize>),
}

impl<T> Op<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::BiasAdd(..) => "bias_add",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Relu(..) => "relu",
            Op::Sigmoid(..) => "sigmoid",
            Op::Exp(..) => "exp",
            Op::SafeRecip(..) => "safe_recip",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::RowSqNorm(..) => "row_sq_norm",
            Op::RowNorm(..) => "row_norm",
            Op::MeanRows(..) => "mean_rows",
            Op::SumRows(..) => "sum_rows",
            Op::SumCols(..) => "sum_cols",
            Op::BroadcastRows(..) => "broadcast_rows",
            Op::BroadcastCols(..) => "broadcast_cols",
            Op::LogSumExp(..) => "logsumexp",
            Op::Transpose(..) => "transpose",
            Op::ConcatCols(..) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::SoftmaxCrossEntropy(..) => "softmax_cross_entropy",
        }
    }

    fn parents(&self) -> (Option<Var>, Option<Var>) {
        match *self {
            Op::Leaf => (None, None),
            Op::MatMul(a, b) | Op::BiasAdd(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::ConcatCols(a, b) => {
                (Some(a), Some(b))
            }
            Op::LeakyRelu(a, _)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::Exp(a)
            | Op::SafeRecip(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a, _)
            | Op::RowSqNorm(a)
            | Op::RowNorm(a)
            | Op::MeanRows(a)
            | Op::SumRows(a)
            | Op::SumCols(a)
            | Op::BroadcastRows(a, _)
            | Op::BroadcastCols(a, _)
            | Op::LogSumExp(a)
            | Op::Transpose(a)
            | Op::SliceCols(a, _, _) => (Some(a), None),
            Op::SoftmaxCrossEntropy(a, _) => (Some(a), None),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node<T> {
    pub value: Matrix<T>,
    pub op: Op<T>,
}

/// Gradients returned by [`Tape::backward`], in the order they were requested.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    entries: Vec<(Var, Matrix<T>)>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, var: Var) -> Option<&Matrix<T>> {
        self.entries.iter().find(|(v, _)| *v == var).map(|(_, g)| g)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Var, Matrix<T>)> {
        self.entries.iter()
    }

    pub fn into_matrices(self) -> Vec<Matrix<T>> {
        self.entries.into_iter().map(|(_, g)| g).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.0].value
    }

    pub fn node(&self, v: Var) -> &Node<T> {
        &self.nodes[v.0]
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input, parameter or constant.
    pub fn leaf(&mut self, value: Matrix<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn bias_add(&mut self, x: Var, bias: Var) -> Result<Var> {
        let v = self.value(x).add_row(self.value(bias))?;
        Ok(self.push(v, Op::BiasAdd(x, bias)))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: T) -> Var {
        let v = self.value(x).map(|e| if e > T::zero() { e } else { e * slope });
        self.push(v, Op::LeakyRelu(x, slope))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|e| if e > T::zero() { e } else { T::zero() });
        self.push(v, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(sigmoid);
        self.push(v, Op::Sigmoid(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.value(x).map(T::exp);
        self.push(v, Op::Exp(x))
    }

    pub fn safe_recip(&mut self, x: Var) -> Var {
        let v = self.value(x).map(safe_recip);
        self.push(v, Op::SafeRecip(x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).mul(self.value(b))?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, x: Var, c: T) -> Var {
        let v = self.value(x).scale(c);
        self.push(v, Op::Scale(x, c))
    }

    pub fn add_scalar(&mut self, x: Var, c: T) -> Var {
        let v = self.value(x).map(|e| e + c);
        self.push(v, Op::AddScalar(x, c))
    }

    pub fn row_sq_norm(&mut self, x: Var) -> Var {
        let v = self.value(x).row_sq_norms();
        self.push(v, Op::RowSqNorm(x))
    }

    pub fn row_norm(&mut self, x: Var) -> Var {
        let v = self.value(x).row_sq_norms().map(T::sqrt);
        self.push(v, Op::RowNorm(x))
    }

    pub fn mean_rows(&mut self, x: Var) -> Var {
        let v = self.value(x).mean_rows();
        self.push(v, Op::MeanRows(x))
    }

    pub fn sum_rows(&mut self, x: Var) -> Var {
        let v = self.value(x).sum_rows();
        self.push(v, Op::SumRows(x))
    }

    pub fn sum_cols(&mut self, x: Var) -> Var {
        let v = self.value(x).sum_cols();
        self.push(v, Op::SumCols(x))
    }

    pub fn broadcast_rows(&mut self, x: Var, n: usize) -> Result<Var> {
        let v = self.value(x).broadcast_rows(n)?;
        Ok(self.push(v, Op::BroadcastRows(x, n)))
    }

    pub fn broadcast_cols(&mut self, x: Var, n: usize) -> Result<Var> {
        let v = self.value(x).broadcast_cols(n)?;
        Ok(self.push(v, Op::BroadcastCols(x, n)))
    }

    pub fn logsumexp(&mut self, x: Var) -> Var {
        let v = self.value(x).row_logsumexp();
        self.push(v, Op::LogSumExp(x))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let v = self.value(x).transpose();
        self.push(v, Op::Transpose(x))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).concat_cols(self.value(b))?;
        Ok(self.push(v, Op::ConcatCols(a, b)))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let v = self.value(x).slice_cols(start, end)?;
        Ok(self.push(v, Op::SliceCols(x, start, end)))
    }

    /// Per-row negative log-softmax of the labelled column, as a rows×1 column.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let x = self.value(logits);
        if labels.len() != x.rows() {
            return Err(Error::dim(
                "softmax_cross_entropy",
                format!("{} labels for {} rows", labels.len(), x.rows()),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= x.cols()) {
            return Err(Error::dim("softmax_cross_entropy", format!("label {bad} with {} classes", x.cols())));
        }
        let lse = x.row_logsumexp();
        let data = labels.iter().enumerate().map(|(i, &l)| lse.as_slice()[i] - x.get(i, l)).collect();
        let v = Matrix::new(labels.len(), 1, data)?;
        Ok(self.push(v, Op::SoftmaxCrossEntropy(logits, labels.to_vec())))
    }

    /// Marks every node that depends on any of `wrt`.
    fn reachable_from(&self, wrt: &[Var], upto: Var) -> Vec<bool> {
        let mut reach = vec![false; upto.0 + 1];
        for w in wrt {
            if w.0 <= upto.0 {
                reach[w.0] = true;
            }
        }
        for i in 0..=upto.0 {
            if reach[i] {
                continue;
            }
            let (a, b) = self.nodes[i].op.parents();
            reach[i] = a.is_some_and(|p| reach[p.0]) || b.is_some_and(|p| reach[p.0]);
        }
        reach
    }

    /// Computes `∂root/∂w` for every `w` in `wrt`. The root must be 1×1; variables the root
    /// does not depend on get zero gradients.
    pub fn backward(&self, root: Var, wrt: &[Var]) -> Result<Gradients<T>> {
        let shape = self.value(root).shape();
        if shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar root, got a {}x{} value",
                shape.0, shape.1
            )));
        }
        self.backward_seeded(root, Matrix::scalar(T::one()), wrt)
    }

    /// Vector-Jacobian product of `root` with an explicit seed of the root's shape.
    pub fn backward_seeded(&self, root: Var, seed: Matrix<T>, wrt: &[Var]) -> Result<Gradients<T>> {
        if seed.shape() != self.value(root).shape() {
            return Err(Error::dim("backward", "seed shape differs from root shape"));
        }
        let reach = self.reachable_from(wrt, root);
        let mut adj: Vec<Option<Matrix<T>>> = vec![None; root.0 + 1];
        let mut keep = vec![false; root.0 + 1];
        for w in wrt {
            if w.0 <= root.0 {
                keep[w.0] = true;
            }
        }
        if reach[root.0] {
            adj[root.0] = Some(seed);
        }
        for i in (0..=root.0).rev() {
            if !reach[i] {
                continue;
            }
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            let (pa, pb) = node.op.parents();
            let want_a = pa.is_some_and(|p| reach[p.0]);
            let want_b = pb.is_some_and(|p| reach[p.0]);
            if want_a || want_b {
                let (ga, gb) = self.vjp(node, &g, want_a, want_b)?;
                if let (Some(p), Some(ga)) = (pa, ga) {
                    accumulate(&mut adj[p.0], ga)?;
                }
                if let (Some(p), Some(gb)) = (pb, gb) {
                    accumulate(&mut adj[p.0], gb)?;
                }
            }
            if keep[i] {
                adj[i] = Some(g);
            }
        }
        let entries = wrt
            .iter()
            .map(|&w| {
                let g = adj
                    .get(w.0)
                    .and_then(|g| g.clone())
                    .unwrap_or_else(|| {
                        let (r, c) = self.value(w).shape();
                        Matrix::zeros(r, c)
                    });
                (w, g)
            })
            .collect();
        Ok(Gradients { entries })
    }

    fn vjp(&self, node: &Node<T>, g: &Matrix<T>, want_a: bool, want_b: bool) -> Result<(Option<Matrix<T>>, Option<Matrix<T>>)> {
        let val = |v: Var| &self.nodes[v.0].value;
        let y = &node.value;
        Ok(match &node.op {
            Op::Leaf => (None, None),
            Op::MatMul(a, b) => (
                want_a.then(|| g.matmul(&val(*b).transpose())).transpose()?,
                want_b.then(|| val(*a).transpose().matmul(g)).transpose()?,
            ),
            Op::BiasAdd(..) => (want_a.then(|| g.clone()), want_b.then(|| g.sum_rows())),
            Op::LeakyRelu(a, slope) => {
                let s = *slope;
                (Some(g.zip_map(val(*a), "leaky_relu", |g, x| if x > T::zero() { g } else { g * s })?), None)
            }
            Op::Relu(a) => (Some(g.zip_map(val(*a), "relu", |g, x| if x > T::zero() { g } else { T::zero() })?), None),
            Op::Sigmoid(_) => (Some(g.zip_map(y, "sigmoid", |g, y| g * y * (T::one() - y))?), None),
            Op::Exp(_) => (Some(g.mul(y)?), None),
            Op::SafeRecip(_) => (Some(g.zip_map(y, "safe_recip", |g, y| -g * y * y)?), None),
            Op::Add(..) => (want_a.then(|| g.clone()), want_b.then(|| g.clone())),
            Op::Sub(..) => (want_a.then(|| g.clone()), want_b.then(|| g.scale(-T::one()))),
            Op::Mul(a, b) => (
                want_a.then(|| g.mul(val(*b))).transpose()?,
                want_b.then(|| g.mul(val(*a))).transpose()?,
            ),
            Op::Scale(_, c) => (Some(g.scale(*c)), None),
            Op::AddScalar(..) => (Some(g.clone()), None),
            Op::RowSqNorm(a) => {
                let x = val(*a);
                let two = T::lit(2.0);
                (Some(Matrix::from_fn(x.rows(), x.cols(), |i, j| two * g.get(i, 0) * x.get(i, j))), None)
            }
            Op::RowNorm(a) => {
                let x = val(*a);
                (
                    Some(Matrix::from_fn(x.rows(), x.cols(), |i, j| g.get(i, 0) * safe_recip(y.get(i, 0)) * x.get(i, j))),
                    None,
                )
            }
            Op::MeanRows(a) => {
                let n = val(*a).rows();
                (Some(g.scale(T::one() / T::count(n.max(1))).broadcast_rows(n)?), None)
            }
            Op::SumRows(a) => (Some(g.broadcast_rows(val(*a).rows())?), None),
            Op::SumCols(a) => (Some(g.broadcast_cols(val(*a).cols())?), None),
            Op::BroadcastRows(..) => (Some(g.sum_rows()), None),
            Op::BroadcastCols(..) => (Some(g.sum_cols()), None),
            Op::LogSumExp(a) => {
                let x = val(*a);
                (Some(Matrix::from_fn(x.rows(), x.cols(), |i, j| g.get(i, 0) * (x.get(i, j) - y.get(i, 0)).exp())), None)
            }
            Op::Transpose(_) => (Some(g.transpose()), None),
            Op::ConcatCols(a, _) => {
                let split = val(*a).cols();
                (
                    want_a.then(|| g.slice_cols(0, split)).transpose()?,
                    want_b.then(|| g.slice_cols(split, g.cols())).transpose()?,
                )
            }
            Op::SliceCols(a, start, _) => {
                let x = val(*a);
                let start = *start;
                let w = g.cols();
                (
                    Some(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
                        if j >= start && j < start + w {
                            g.get(i, j - start)
                        } else {
                            T::zero()
                        }
                    })),
                    None,
                )
            }
            Op::SoftmaxCrossEntropy(a, labels) => {
                let x = val(*a);
                let mut p = x.softmax_rows();
                for (i, &l) in labels.iter().enumerate() {
                    p.set(i, l, p.get(i, l) - T::one());
                }
                (Some(Matrix::from_fn(x.rows(), x.cols(), |i, j| g.get(i, 0) * p.get(i, j))), None)
            }
        })
    }

    /// Records the gradient of `root` with respect to each of `wrt` as new tape nodes.
    ///
    /// `seed` defaults to a ones matrix of the root's shape, so for a column of per-row
    /// scalars this yields the per-row input gradients. The returned variables can be used
    /// in further computation and differentiated again with [`Tape::backward`].
    pub fn grad(&mut self, root: Var, seed: Option<Var>, wrt: &[Var]) -> Result<Vec<Var>> {
        let seed = match seed {
            Some(s) => {
                if self.value(s).shape() != self.value(root).shape() {
                    return Err(Error::dim("grad", "seed shape differs from root shape"));
                }
                s
            }
            None => {
                let (r, c) = self.value(root).shape();
                self.leaf(Matrix::ones(r, c))
            }
        };
        let reach = self.reachable_from(wrt, root);
        let mut adj: Vec<Option<Var>> = vec![None; root.0 + 1];
        let mut keep = vec![false; root.0 + 1];
        for w in wrt {
            if w.0 <= root.0 {
                keep[w.0] = true;
            }
        }
        if reach[root.0] {
            adj[root.0] = Some(seed);
        }
        for i in (0..=root.0).rev() {
            if !reach[i] {
                continue;
            }
            let Some(g) = adj[i] else { continue };
            if !keep[i] {
                adj[i] = None;
            }
            let op = self.nodes[i].op.clone();
            let (pa, pb) = op.parents();
            let want_a = pa.is_some_and(|p| reach[p.0]);
            let want_b = pb.is_some_and(|p| reach[p.0]);
            if !(want_a || want_b) {
                continue;
            }
            let (ga, gb) = self.vjp_graph(Var(i), &op, g, want_a, want_b)?;
            for (p, gp) in [(pa, ga), (pb, gb)] {
                if let (Some(p), Some(gp)) = (p, gp) {
                    adj[p.0] = Some(match adj[p.0] {
                        Some(prev) => self.add(prev, gp)?,
                        None => gp,
                    });
                }
            }
        }
        wrt.iter()
            .map(|&w| match adj.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let (r, c) = self.value(w).shape();
                    Ok(self.leaf(Matrix::zeros(r, c)))
                }
            })
            .collect()
    }

    fn vjp_graph(&mut self, out: Var, op: &Op<T>, g: Var, want_a: bool, want_b: bool) -> Result<(Option<Var>, Option<Var>)> {
        Ok(match *op {
            Op::Leaf => (None, None),
            Op::MatMul(a, b) => {
                let ga = if want_a {
                    let bt = self.transpose(b);
                    Some(self.matmul(g, bt)?)
                } else {
                    None
                };
                let gb = if want_b {
                    let at = self.transpose(a);
                    Some(self.matmul(at, g)?)
                } else {
                    None
                };
                (ga, gb)
            }
            Op::BiasAdd(..) => (want_a.then_some(g), want_b.then(|| self.sum_rows(g))),
            Op::LeakyRelu(a, slope) => {
                let mask = self.value(a).map(|x| if x > T::zero() { T::one() } else { slope });
                let mask = self.leaf(mask);
                (Some(self.mul(g, mask)?), None)
            }
            Op::Relu(a) => {
                let mask = self.value(a).map(|x| if x > T::zero() { T::one() } else { T::zero() });
                let mask = self.leaf(mask);
                (Some(self.mul(g, mask)?), None)
            }
            Op::Sigmoid(_) => {
                let neg = self.scale(out, -T::one());
                let one_minus = self.add_scalar(neg, T::one());
                let d = self.mul(out, one_minus)?;
                (Some(self.mul(g, d)?), None)
            }
            Op::Exp(_) => (Some(self.mul(g, out)?), None),
            Op::SafeRecip(_) => {
                let sq = self.mul(out, out)?;
                let t = self.mul(g, sq)?;
                (Some(self.scale(t, -T::one())), None)
            }
            Op::Add(..) => (want_a.then_some(g), want_b.then_some(g)),
            Op::Sub(..) => (want_a.then_some(g), want_b.then(|| self.scale(g, -T::one()))),
            Op::Mul(a, b) => {
                let ga = if want_a { Some(self.mul(g, b)?) } else { None };
                let gb = if want_b { Some(self.mul(g, a)?) } else { None };
                (ga, gb)
            }
            Op::Scale(_, c) => (Some(self.scale(g, c)), None),
            Op::AddScalar(..) => (Some(g), None),
            Op::RowSqNorm(a) => {
                let k = self.value(a).cols();
                let gb = self.broadcast_cols(g, k)?;
                let t = self.mul(gb, a)?;
                (Some(self.scale(t, T::lit(2.0))), None)
            }
            Op::RowNorm(a) => {
                let k = self.value(a).cols();
                let inv = self.safe_recip(out);
                let coef = self.mul(g, inv)?;
                let cb = self.broadcast_cols(coef, k)?;
                (Some(self.mul(cb, a)?), None)
            }
            Op::MeanRows(a) => {
                let n = self.value(a).rows();
                let s = self.scale(g, T::one() / T::count(n.max(1)));
                (Some(self.broadcast_rows(s, n)?), None)
            }
            Op::SumRows(a) => {
                let n = self.value(a).rows();
                (Some(self.broadcast_rows(g, n)?), None)
            }
            Op::SumCols(a) => {
                let k = self.value(a).cols();
                (Some(self.broadcast_cols(g, k)?), None)
            }
            Op::BroadcastRows(..) => (Some(self.sum_rows(g)), None),
            Op::BroadcastCols(..) => (Some(self.sum_cols(g)), None),
            Op::LogSumExp(a) => {
                let k = self.value(a).cols();
                let yb = self.broadcast_cols(out, k)?;
                let shifted = self.sub(a, yb)?;
                let sm = self.exp(shifted);
                let gb = self.broadcast_cols(g, k)?;
                (Some(self.mul(gb, sm)?), None)
            }
            Op::Transpose(_) => (Some(self.transpose(g)), None),
            Op::ConcatCols(a, _) => {
                let split = self.value(a).cols();
                let total = self.value(g).cols();
                let ga = if want_a { Some(self.slice_cols(g, 0, split)?) } else { None };
                let gb = if want_b { Some(self.slice_cols(g, split, total)?) } else { None };
                (ga, gb)
            }
            Op::SliceCols(a, start, end) => {
                let (rows, cols) = self.value(a).shape();
                let mut acc = g;
                if start > 0 {
                    let left = self.leaf(Matrix::zeros(rows, start));
                    acc = self.concat_cols(left, acc)?;
                }
                if end < cols {
                    let right = self.leaf(Matrix::zeros(rows, cols - end));
                    acc = self.concat_cols(acc, right)?;
                }
                (Some(acc), None)
            }
            Op::SoftmaxCrossEntropy(..) => {
                return Err(Error::Capability(
                    "softmax_cross_entropy has no recorded gradient; build the loss from logsumexp to differentiate twice"
                        .into(),
                ))
            }
        })
    }

    /// Per-row gradient of a column of per-sample scalars with respect to `input`, recorded
    /// on the tape so that it can itself be differentiated.
    pub fn input_gradient(&mut self, root: Var, input: Var) -> Result<Var> {
        let (rows, cols) = self.value(root).shape();
        if cols != 1 || rows != self.value(input).rows() {
            return Err(Error::Contract(format!(
                "input gradient needs one scalar per input row; root is {rows}x{cols}, input has {} rows",
                self.value(input).rows()
            )));
        }
        Ok(self.grad(root, None, &[input])?[0])
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Matrix<T>>, g: Matrix<T>) -> Result<()> {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[inline]
fn safe_recip<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        T::one() / x
    }
}
