//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! Every operation appends a node holding its output value. The backward pass
//! itself is expressed with graph operations, so the gradients it produces are
//! ordinary nodes and can be differentiated again. That is all second-order
//! differentiation needs: a Hessian-vector product is the gradient of
//! `<grad f, v>`.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    /// Matrix (n x k) plus a length-k vector broadcast over rows.
    AddRow(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Log(Var),
    Powf(Var, f64),
    Sum(Var),
    Mean(Var),
    ConcatRows(Vec<Var>),
    // Structural helpers the backward pass is written in.
    Scale(Var, f64),
    AddScalar(Var),
    Transpose(Var),
    /// Column sums of an n x k matrix, producing a length-k vector.
    SumRows(Var),
    /// Scalar broadcast to a shape.
    Expand(Var),
    /// Length-k vector repeated as the rows of an n x k matrix.
    ExpandRows(Var),
    SliceRows(Var, usize, usize),
    Clamp(Var, f64, f64),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Constant => "constant",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Mul(..) => "mul",
            Op::Relu(_) => "relu",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Log(_) => "log",
            Op::Powf(..) => "powf",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::ConcatRows(_) => "concat_rows",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Transpose(_) => "transpose",
            Op::SumRows(_) => "sum_rows",
            Op::Expand(_) => "expand",
            Op::ExpandRows(_) => "expand_rows",
            Op::SliceRows(..) => "slice_rows",
            Op::Clamp(..) => "clamp",
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf | Op::Constant => Vec::new(),
            Op::MatMul(a, b) | Op::Add(a, b) | Op::AddRow(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::ConcatRows(parts) => parts.clone(),
            Op::Relu(a)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Log(a)
            | Op::Powf(a, _)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::Transpose(a)
            | Op::SumRows(a)
            | Op::Expand(a)
            | Op::ExpandRows(a)
            | Op::SliceRows(a, ..)
            | Op::Clamp(a, ..) => vec![*a],
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Append-only tape of operations. Inputs always refer to earlier nodes, so
/// the graph is acyclic by construction.
#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Differentiable input variable.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push_unchecked(Op::Leaf, value)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_unchecked(Op::Constant, value)
    }

    pub fn is_leaf(&self, v: Var) -> bool {
        matches!(self.nodes[v.0].op, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push_unchecked(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op, value: Tensor) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: op.name() });
        }
        Ok(self.push_unchecked(op, value))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        Ok(())
    }

    fn require_matrix(&self, op: &'static str, a: Var) -> Result<()> {
        if self.value(a).rank() != 2 {
            return Err(Error::shape(
                op,
                format!("expected matrix, got {:?}", self.shape(a)),
            ));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push(Op::MatMul(a, b), value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(Op::Add(a, b), value)
    }

    /// `a` is n x k, `row` is a length-k vector added to every row.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.require_matrix("add_row", a)?;
        let (av, rv) = (self.value(a), self.value(row));
        if rv.rank() != 1 || rv.numel() != av.cols() {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + {:?}", av.shape(), rv.shape()),
            ));
        }
        let k = av.cols();
        let mut out = av.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += rv.data()[i % k];
        }
        self.push(Op::AddRow(a, row), out)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(Op::Mul(a, b), value)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(Op::Relu(a), value)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), value)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), value)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(f64::ln);
        self.push(Op::Log(a), value)
    }

    pub fn powf(&mut self, a: Var, exponent: f64) -> Result<Var> {
        let value = self.value(a).map(|x| powf(x, exponent));
        self.push(Op::Powf(a, exponent), value)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let value = Tensor::scalar(self.value(a).sum());
        self.push(Op::Sum(a), value)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.numel() == 0 {
            return Err(Error::shape("mean", "empty tensor"));
        }
        let value = Tensor::scalar(t.sum() / t.numel() as f64);
        self.push(Op::Mean(a), value)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::shape("concat_rows", "no inputs"));
        }
        for &p in parts {
            self.require_matrix("concat_rows", p)?;
        }
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Tensor::vstack(&tensors).map_err(|_| {
            Error::shape(
                "concat_rows",
                format!(
                    "{:?}",
                    tensors.iter().map(|t| t.shape()).collect::<Vec<_>>()
                ),
            )
        })?;
        self.push(Op::ConcatRows(parts.to_vec()), value)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let value = self.value(a).map(|x| x * c);
        self.push(Op::Scale(a, c), value)
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.scale(a, -1.0)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let nb = self.neg(b)?;
        self.add(a, nb)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        let value = self.value(a).map(|x| x + c);
        self.push(Op::AddScalar(a), value)
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: Var) -> Result<Var> {
        let n = self.neg(a)?;
        self.add_scalar(n, 1.0)
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.require_matrix("transpose", a)?;
        let value = self.value(a).transpose();
        self.push(Op::Transpose(a), value)
    }

    pub fn sum_rows(&mut self, a: Var) -> Result<Var> {
        self.require_matrix("sum_rows", a)?;
        let t = self.value(a);
        let k = t.cols();
        let mut out = vec![0.0; k];
        for i in 0..t.rows() {
            for (o, v) in out.iter_mut().zip(t.row(i)) {
                *o += v;
            }
        }
        self.push(Op::SumRows(a), Tensor::vector(out))
    }

    /// Broadcast a one-element tensor to `shape`.
    pub fn expand(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a);
        if t.numel() != 1 {
            return Err(Error::shape(
                "expand",
                format!("{:?} -> {:?}", t.shape(), shape),
            ));
        }
        let value = Tensor::full(shape, t.item());
        self.push(Op::Expand(a), value)
    }

    pub fn expand_rows(&mut self, a: Var, rows: usize) -> Result<Var> {
        let t = self.value(a);
        if t.rank() != 1 {
            return Err(Error::shape("expand_rows", format!("{:?}", t.shape())));
        }
        let k = t.numel();
        let mut data = Vec::with_capacity(rows * k);
        for _ in 0..rows {
            data.extend_from_slice(t.data());
        }
        self.push(Op::ExpandRows(a), Tensor::matrix(rows, k, data))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        self.require_matrix("slice_rows", a)?;
        let t = self.value(a);
        if start > end || end > t.rows() {
            return Err(Error::shape(
                "slice_rows",
                format!("{start}..{end} of {:?}", t.shape()),
            ));
        }
        let c = t.cols();
        let value = Tensor::matrix(end - start, c, t.data()[start * c..end * c].to_vec());
        self.push(Op::SliceRows(a, start, end), value)
    }

    /// Elementwise clamp to `[lo, hi]`; the gradient is zero where clamped.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let value = self.value(a).map(|x| x.clamp(lo, hi));
        self.push(Op::Clamp(a, lo, hi), value)
    }

    /// Gradients of a scalar `root` with respect to leaf variables.
    ///
    /// With `retain_graph` the gradient nodes stay in the graph (the returned
    /// tensors are their values); see [`Graph::grad`] to get them as `Var`s.
    /// Without it, the nodes are discarded once their values are read. Both
    /// paths run the same arithmetic, so the values are bit-identical.
    pub fn backward(&mut self, root: Var, wrt: &[Var], retain_graph: bool) -> Result<Vec<Tensor>> {
        if let Some(w) = wrt.iter().find(|&&w| !self.is_leaf(w)) {
            return Err(Error::NotLeaf(w.0));
        }
        let mark = self.nodes.len();
        let grads = self.grad(root, wrt)?;
        let values = grads.iter().map(|&g| self.value(g).clone()).collect();
        if !retain_graph {
            self.nodes.truncate(mark);
        }
        Ok(values)
    }

    /// Gradients of a scalar `root` with respect to arbitrary nodes, returned
    /// as differentiable graph nodes. Nodes unreachable from `root` get a
    /// zero constant.
    ///
    /// Each gradient is `d root / d node` holding the node's own inputs fixed,
    /// which for an intermediate node (such as adapted parameters) is the total
    /// derivative through every path that flows out of it.
    pub fn grad(&mut self, root: Var, wrt: &[Var]) -> Result<Vec<Var>> {
        if !self.value(root).is_scalar() {
            return Err(Error::NonScalarRoot(self.shape(root).to_vec()));
        }
        let n = root.0 + 1;
        let mut relevant = vec![false; n];
        for w in wrt.iter().filter(|w| w.0 < n) {
            relevant[w.0] = true;
        }
        for i in 0..n {
            if !relevant[i] && self.nodes[i].op.inputs().iter().any(|v| relevant[v.0]) {
                relevant[i] = true;
            }
        }

        let mut adjoint: Vec<Option<Var>> = vec![None; n];
        if relevant[root.0] {
            let seed = Tensor::ones(self.shape(root));
            adjoint[root.0] = Some(self.constant(seed));
        }
        for i in (0..n).rev() {
            // A requested node that is also upstream of another requested
            // node still propagates, so the gradient of the deeper one is total.
            let Some(g) = adjoint[i] else { continue };
            if !relevant[i] {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let out = Var(i);
            for (input, contrib) in self.vjp(&op, out, g, &relevant)? {
                adjoint[input.0] = Some(match adjoint[input.0] {
                    Some(prev) => self.add(prev, contrib)?,
                    None => contrib,
                });
            }
        }

        wrt.iter()
            .map(|&w| match adjoint.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let zeros = Tensor::zeros(self.shape(w));
                    Ok(self.constant(zeros))
                }
            })
            .collect()
    }

    /// Vector-Jacobian products for one node, as graph operations.
    fn vjp(&mut self, op: &Op, out: Var, g: Var, relevant: &[bool]) -> Result<Vec<(Var, Var)>> {
        let need = |v: &Var| relevant[v.0];
        let mut res = Vec::new();
        match *op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                if need(&a) {
                    let bt = self.transpose(b)?;
                    res.push((a, self.matmul(g, bt)?));
                }
                if need(&b) {
                    let at = self.transpose(a)?;
                    res.push((b, self.matmul(at, g)?));
                }
            }
            Op::Add(a, b) => {
                if need(&a) {
                    res.push((a, g));
                }
                if need(&b) {
                    res.push((b, g));
                }
            }
            Op::AddRow(a, row) => {
                if need(&a) {
                    res.push((a, g));
                }
                if need(&row) {
                    res.push((row, self.sum_rows(g)?));
                }
            }
            Op::Mul(a, b) => {
                if need(&a) {
                    res.push((a, self.mul(g, b)?));
                }
                if need(&b) {
                    res.push((b, self.mul(g, a)?));
                }
            }
            Op::Relu(a) => {
                let mask = self.value(a).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
                let mask = self.constant(mask);
                res.push((a, self.mul(g, mask)?));
            }
            Op::Tanh(a) => {
                let sq = self.mul(out, out)?;
                let d = self.one_minus(sq)?;
                res.push((a, self.mul(g, d)?));
            }
            Op::Sigmoid(a) => {
                let one_minus = self.one_minus(out)?;
                let d = self.mul(out, one_minus)?;
                res.push((a, self.mul(g, d)?));
            }
            Op::Log(a) => {
                let inv = self.powf(a, -1.0)?;
                res.push((a, self.mul(g, inv)?));
            }
            Op::Powf(a, p) => {
                let lowered = self.powf(a, p - 1.0)?;
                let d = self.scale(lowered, p)?;
                res.push((a, self.mul(g, d)?));
            }
            Op::Sum(a) => {
                let shape = self.shape(a).to_vec();
                res.push((a, self.expand(g, &shape)?));
            }
            Op::Mean(a) => {
                let shape = self.shape(a).to_vec();
                let n = self.value(a).numel() as f64;
                let e = self.expand(g, &shape)?;
                res.push((a, self.scale(e, 1.0 / n)?));
            }
            Op::ConcatRows(ref parts) => {
                let mut offset = 0;
                for &p in parts {
                    let rows = self.value(p).rows();
                    if need(&p) {
                        res.push((p, self.slice_rows(g, offset, offset + rows)?));
                    }
                    offset += rows;
                }
            }
            Op::Scale(a, c) => res.push((a, self.scale(g, c)?)),
            Op::AddScalar(a) => res.push((a, g)),
            Op::Transpose(a) => res.push((a, self.transpose(g)?)),
            Op::SumRows(a) => {
                let rows = self.value(a).rows();
                res.push((a, self.expand_rows(g, rows)?));
            }
            Op::Expand(a) => {
                let s = self.sum(g)?;
                let shape = self.shape(a).to_vec();
                let s = if shape.is_empty() {
                    s
                } else {
                    self.expand(s, &shape)?
                };
                res.push((a, s));
            }
            Op::ExpandRows(a) => res.push((a, self.sum_rows(g)?)),
            Op::SliceRows(a, start, end) => {
                let (rows, cols) = (self.value(a).rows(), self.value(a).cols());
                let mut parts = Vec::with_capacity(3);
                if start > 0 {
                    parts.push(self.constant(Tensor::zeros(&[start, cols])));
                }
                parts.push(g);
                if end < rows {
                    parts.push(self.constant(Tensor::zeros(&[rows - end, cols])));
                }
                let padded = if parts.len() == 1 {
                    g
                } else {
                    self.concat_rows(&parts)?
                };
                res.push((a, padded));
            }
            Op::Clamp(a, lo, hi) => {
                let mask = self
                    .value(a)
                    .map(|x| if x >= lo && x <= hi { 1.0 } else { 0.0 });
                let mask = self.constant(mask);
                res.push((a, self.mul(g, mask)?));
            }
        }
        Ok(res)
    }

    /// `d/d outer <grad_inner root, probe>`: the mixed second derivative of
    /// `root` contracted with `probe`. With `outer == inner` it is a
    /// Hessian-vector product.
    pub fn grad_of_grad(
        &mut self,
        root: Var,
        inner: Var,
        probe: &Tensor,
        outer: Var,
    ) -> Result<Tensor> {
        if probe.shape() != self.shape(inner) {
            return Err(Error::shape(
                "grad_of_grad",
                format!("probe {:?} vs {:?}", probe.shape(), self.shape(inner)),
            ));
        }
        let mark = self.nodes.len();
        let g = self.grad(root, &[inner])?[0];
        let p = self.constant(probe.clone());
        let prod = self.mul(g, p)?;
        let s = self.sum(prod)?;
        let out = self.grad(s, &[outer])?[0];
        let value = self.value(out).clone();
        self.nodes.truncate(mark);
        Ok(value)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn powf(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if p == -1.0 {
        1.0 / x
    } else {
        x.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> Tensor {
        Tensor::scalar(v)
    }

    #[test]
    fn relu_values() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![-1.0, 0.0, 2.0]));
        let y = g.relu(x).unwrap();
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn tanh_and_sigmoid_at_zero() {
        let mut g = Graph::new();
        let x = g.constant(s(0.0));
        let t = g.tanh(x).unwrap();
        let sg = g.sigmoid(x).unwrap();
        assert_eq!(g.value(t).item(), 0.0);
        assert_eq!(g.value(sg).item(), 0.5);
    }

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let x = g.leaf(s(3.0));
        let y = g.mul(x, x).unwrap();
        let grads = g.backward(y, &[x], false).unwrap();
        assert_eq!(grads[0].item(), 6.0);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut g = Graph::new();
        let x = g.leaf(s(0.0));
        let y = g.sigmoid(x).unwrap();
        assert_eq!(g.backward(y, &[x], false).unwrap()[0].item(), 0.25);
    }

    #[test]
    fn linear_gradient_is_outer_structure() {
        // root = sum(W x): d/dW_ij = x_i broadcast over output columns j.
        let mut g = Graph::new();
        let x = g.constant(Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]));
        let w = g.leaf(Tensor::matrix(3, 2, vec![0.5; 6]));
        let y = g.matmul(x, w).unwrap();
        let root = g.sum(y).unwrap();
        let gw = &g.backward(root, &[w], false).unwrap()[0];
        assert_eq!(gw.data(), &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn unreachable_leaf_gets_exact_zero() {
        let mut g = Graph::new();
        let x = g.leaf(s(2.0));
        let unused = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        let y = g.mul(x, x).unwrap();
        let grads = g.backward(y, &[x, unused], false).unwrap();
        assert_eq!(grads[1], Tensor::zeros(&[2]));
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(
            g.backward(x, &[x], false),
            Err(Error::NonScalarRoot(_))
        ));
    }

    #[test]
    fn non_leaf_wrt_is_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(s(1.0));
        let y = g.scale(x, 2.0).unwrap();
        let z = g.mul(y, y).unwrap();
        assert!(matches!(g.backward(z, &[y], false), Err(Error::NotLeaf(_))));
    }

    #[test]
    fn hvp_of_square() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.5, -2.0]));
        let sq = g.mul(x, x).unwrap();
        let root = g.sum(sq).unwrap();
        let v = Tensor::vector(vec![0.3, 4.0]);
        let hv = g.grad_of_grad(root, x, &v, x).unwrap();
        assert_eq!(hv.data(), &[0.6, 8.0]);
    }

    #[test]
    fn mixed_partial_of_product() {
        let mut g = Graph::new();
        let x = g.leaf(s(2.0));
        let y = g.leaf(s(-3.0));
        let root = g.mul(x, y).unwrap();
        let out = g.grad_of_grad(root, x, &s(1.0), y).unwrap();
        assert_eq!(out.item(), 1.0);
    }

    #[test]
    fn probe_shape_is_checked() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        let root = g.sum(x).unwrap();
        assert!(g.grad_of_grad(root, x, &s(1.0), x).is_err());
    }

    #[test]
    fn log_of_zero_is_an_overflow_error() {
        let mut g = Graph::new();
        let x = g.leaf(s(0.0));
        assert!(matches!(g.log(x), Err(Error::NonFinite { op: "log" })));
    }

    #[test]
    fn add_row_shape_errors_name_the_op() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::zeros(&[2, 3]));
        let b = g.leaf(Tensor::zeros(&[2]));
        match g.add_row(a, b) {
            Err(Error::Shape { op, .. }) => assert_eq!(op, "add_row"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn backward_without_retain_leaves_graph_size_unchanged() {
        let mut g = Graph::new();
        let x = g.leaf(s(3.0));
        let y = g.mul(x, x).unwrap();
        let before = g.len();
        g.backward(y, &[x], false).unwrap();
        assert_eq!(g.len(), before);
        g.backward(y, &[x], true).unwrap();
        assert!(g.len() > before);
    }
}
