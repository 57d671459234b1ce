use std::collections::BTreeMap;
use std::sync::Arc;

use super::{AutodiffError, BnState, ParamStore, Result, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Validated `(src, dst)` pairs for [`Tape::segment_mean`], with the
/// in-degree of every destination precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentIndex {
    pairs: Vec<(usize, usize)>,
    n_src: usize,
    n_dst: usize,
    in_degree: Vec<usize>,
}

impl SegmentIndex {
    pub fn new(pairs: Vec<(usize, usize)>, n_src: usize, n_dst: usize) -> Result<Self> {
        let mut in_degree = vec![0; n_dst];
        for &(s, d) in &pairs {
            if s >= n_src {
                return Err(AutodiffError::IndexOutOfRange { index: s, bound: n_src });
            }
            if d >= n_dst {
                return Err(AutodiffError::IndexOutOfRange { index: d, bound: n_dst });
            }
            in_degree[d] += 1;
        }
        Ok(SegmentIndex {
            pairs,
            n_src,
            n_dst,
            in_degree,
        })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn n_src(&self) -> usize {
        self.n_src
    }

    pub fn n_dst(&self) -> usize {
        self.n_dst
    }

    pub fn in_degree(&self) -> &[usize] {
        &self.in_degree
    }
}

/// Batch-norm behaviour: batch statistics (and running-stat updates) or the
/// stored running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    MeanPair(Var, Var),
    Relu(Var),
    Scale(Var, f64),
    Sum(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Arc<[usize]>),
    SegmentMean(Var, Arc<SegmentIndex>),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Tensor,
        inv_std: Vec<f64>,
        mode: BnMode,
    },
    L1(Var, Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Append-only record of executed operations. Nodes are stored in execution
/// order, which is a topological order for the reverse sweep.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: BTreeMap<String, Var>,
}

/// Adjoints from one reverse sweep.
#[derive(Debug)]
pub struct Gradients {
    by_var: Vec<Option<Tensor>>,
    params: BTreeMap<String, Var>,
}

impl Gradients {
    pub fn of(&self, v: Var) -> Option<&Tensor> {
        self.by_var[v.0].as_ref()
    }

    /// Adjoint of every parameter bound on the tape; zero when unreached.
    pub fn params(&self, store: &ParamStore) -> BTreeMap<String, Tensor> {
        store
            .iter()
            .map(|(name, t)| {
                let g = self
                    .params
                    .get(name)
                    .and_then(|&v| self.by_var[v.0].clone())
                    .unwrap_or_else(|| Tensor::zeros(t.rows(), t.cols()));
                (name.to_string(), g)
            })
            .collect()
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(AutodiffError::shape(op, a, b));
    }
    Ok(())
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

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Records a constant input.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Binds a named parameter. Repeated calls return the same handle, so
    /// every use accumulates into one adjoint.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let value = store.get(name)?.clone();
        let v = self.leaf(value);
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// Adds a `1 × cols` row to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(AutodiffError::shape("add_bias", x, b));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, &bv) in out.row_mut(r).iter_mut().zip(b.data()) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddBias(a, bias)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mul", self.value(a), self.value(b))?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Elementwise `(a + b) / 2`.
    pub fn mean_pair(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mean_pair", self.value(a), self.value(b))?;
        let out = self.value(a).zip_map(self.value(b), |x, y| 0.5 * (x + y));
        Ok(self.push(out, Op::MeanPair(a, b)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| c * x);
        self.push(out, Op::Scale(a, c))
    }

    /// Sum of all entries as a `1 × 1` tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows() != rows {
                return Err(AutodiffError::shape("concat_cols", self.value(parts[0]), t));
            }
            cols += t.cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut c0 = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                out.row_mut(r)[c0..c0 + src.len()].copy_from_slice(src);
                c0 += src.len();
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(AutodiffError::shape("concat_rows", self.value(parts[0]), t));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let out = Tensor::from_vec(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// Row `r` of the output is row `index[r]` of `a`.
    pub fn gather_rows(&mut self, a: Var, index: Arc<[usize]>) -> Result<Var> {
        let x = self.value(a);
        let mut out = Tensor::zeros(index.len(), x.cols());
        for (r, &i) in index.iter().enumerate() {
            if i >= x.rows() {
                return Err(AutodiffError::IndexOutOfRange { index: i, bound: x.rows() });
            }
            out.row_mut(r).copy_from_slice(x.row(i));
        }
        Ok(self.push(out, Op::GatherRows(a, index)))
    }

    /// Row `d` is the mean of source rows `s` over pairs `(s, d)`; rows
    /// without incoming pairs are zero.
    pub fn segment_mean(&mut self, x: Var, index: Arc<SegmentIndex>) -> Result<Var> {
        let t = self.value(x);
        if t.rows() != index.n_src {
            return Err(AutodiffError::IndexOutOfRange {
                index: index.n_src,
                bound: t.rows(),
            });
        }
        let mut out = Tensor::zeros(index.n_dst, t.cols());
        for &(s, d) in &index.pairs {
            let w = 1.0 / index.in_degree[d] as f64;
            let src = t.row(s);
            for (o, &v) in out.row_mut(d).iter_mut().zip(src) {
                *o += w * v;
            }
        }
        Ok(self.push(out, Op::SegmentMean(x, index)))
    }

    /// Per-column normalization followed by `gamma * xhat + beta`. In train
    /// mode the batch statistics are used (biased variance) and `state` is
    /// moved towards them; the running variance tracks the unbiased estimate.
    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var, mode: BnMode, state: &mut BnState) -> Result<Var> {
        let t = self.value(x);
        let (n, c) = t.shape();
        for p in [gamma, beta] {
            let pv = self.value(p);
            if pv.shape() != (1, c) {
                return Err(AutodiffError::shape("batch_norm", t, pv));
            }
        }
        if state.running_mean.len() != c {
            return Err(AutodiffError::shape("batch_norm", t, &Tensor::zeros(1, state.running_mean.len())));
        }
        let (mean, var) = match mode {
            BnMode::Train => {
                if n < 2 {
                    return Err(AutodiffError::SingleRowTrainBatch);
                }
                let mut mean = vec![0.0; c];
                for r in 0..n {
                    for (m, &v) in mean.iter_mut().zip(t.row(r)) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                let mut var = vec![0.0; c];
                for r in 0..n {
                    for ((s, &v), &m) in var.iter_mut().zip(t.row(r)).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s /= n as f64);
                let unbias = n as f64 / (n - 1) as f64;
                for j in 0..c {
                    state.running_mean[j] = (1.0 - BN_MOMENTUM) * state.running_mean[j] + BN_MOMENTUM * mean[j];
                    state.running_var[j] = (1.0 - BN_MOMENTUM) * state.running_var[j] + BN_MOMENTUM * var[j] * unbias;
                }
                (mean, var)
            }
            BnMode::Eval => (state.running_mean.clone(), state.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = t.clone();
        for r in 0..n {
            for ((v, &m), &is) in xhat.row_mut(r).iter_mut().zip(&mean).zip(&inv_std) {
                *v = (*v - m) * is;
            }
        }
        let (g, b) = (self.value(gamma), self.value(beta));
        let mut out = xhat.clone();
        for r in 0..n {
            for ((v, &gv), &bv) in out.row_mut(r).iter_mut().zip(g.data()).zip(b.data()) {
                *v = gv * *v + bv;
            }
        }
        Ok(self.push(
            out,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                mode,
            },
        ))
    }

    /// Mean absolute error as a `1 × 1` tensor.
    pub fn l1_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (self.value(pred), self.value(target));
        same_shape("l1_loss", p, t)?;
        let n = p.len().max(1) as f64;
        let v = p.data().iter().zip(t.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
        Ok(self.push(Tensor::scalar(v), Op::L1(pred, target)))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(AutodiffError::NonScalarLoss(lv.shape()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients {
            by_var: grads,
            params: self.params.clone(),
        })
    }

    fn propagate(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut acc = |v: Var, d: Tensor| match &mut grads[v.0] {
            Some(t) => t.add_assign(&d),
            slot @ None => *slot = Some(d),
        };
        let val = |v: Var| &self.nodes[v.0].value;
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                acc(*a, g.matmul_nt(val(*b)));
                acc(*b, val(*a).matmul_tn(g));
            }
            Op::AddBias(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.column_sums());
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Mul(a, b) => {
                acc(*a, g.zip_map(val(*b), |x, y| x * y));
                acc(*b, g.zip_map(val(*a), |x, y| x * y));
            }
            Op::MeanPair(a, b) => {
                let h = g.map(|x| 0.5 * x);
                acc(*a, h.clone());
                acc(*b, h);
            }
            Op::Relu(a) => acc(*a, g.zip_map(val(*a), |d, x| if x > 0.0 { d } else { 0.0 })),
            Op::Scale(a, c) => acc(*a, g.map(|x| c * x)),
            Op::Sum(a) => {
                let t = val(*a);
                acc(*a, Tensor::filled(t.rows(), t.cols(), g.get(0, 0)));
            }
            Op::ConcatCols(parts) => {
                let mut c0 = 0;
                for &p in parts {
                    let w = val(p).cols();
                    let mut d = Tensor::zeros(g.rows(), w);
                    for r in 0..g.rows() {
                        d.row_mut(r).copy_from_slice(&g.row(r)[c0..c0 + w]);
                    }
                    acc(p, d);
                    c0 += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut r0 = 0;
                for &p in parts {
                    let (h, w) = val(p).shape();
                    let d = Tensor::from_vec(h, w, g.data()[r0 * w..(r0 + h) * w].to_vec()).expect("slice shape");
                    acc(p, d);
                    r0 += h;
                }
            }
            Op::GatherRows(a, index) => {
                let t = val(*a);
                let mut d = Tensor::zeros(t.rows(), t.cols());
                for (r, &src) in index.iter().enumerate() {
                    for (o, &x) in d.row_mut(src).iter_mut().zip(g.row(r)) {
                        *o += x;
                    }
                }
                acc(*a, d);
            }
            Op::SegmentMean(x, index) => {
                let mut d = Tensor::zeros(index.n_src, g.cols());
                for &(s, dst) in &index.pairs {
                    let w = 1.0 / index.in_degree[dst] as f64;
                    for (o, &x) in d.row_mut(s).iter_mut().zip(g.row(dst)) {
                        *o += w * x;
                    }
                }
                acc(*x, d);
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                mode,
            } => {
                let (n, c) = g.shape();
                let gam = val(*gamma);
                let dbeta = g.column_sums();
                let dgamma = g.zip_map(xhat, |a, b| a * b).column_sums();
                let mut dx = Tensor::zeros(n, c);
                match mode {
                    BnMode::Eval => {
                        for r in 0..n {
                            for j in 0..c {
                                dx.set(r, j, g.get(r, j) * gam.get(0, j) * inv_std[j]);
                            }
                        }
                    }
                    BnMode::Train => {
                        let nf = n as f64;
                        for r in 0..n {
                            for j in 0..c {
                                let v = g.get(r, j) * nf - dbeta.get(0, j) - xhat.get(r, j) * dgamma.get(0, j);
                                dx.set(r, j, gam.get(0, j) * inv_std[j] * v / nf);
                            }
                        }
                    }
                }
                acc(*x, dx);
                acc(*gamma, dgamma);
                acc(*beta, dbeta);
            }
            Op::L1(p, t) => {
                let (pv, tv) = (val(*p), val(*t));
                let n = pv.len().max(1) as f64;
                let s = g.get(0, 0) / n;
                let d = pv.zip_map(tv, |a, b| {
                    let diff = a - b;
                    if diff > 0.0 {
                        s
                    } else if diff < 0.0 {
                        -s
                    } else {
                        0.0
                    }
                });
                acc(*t, d.map(|x| -x));
                acc(*p, d);
            }
        }
    }
}
