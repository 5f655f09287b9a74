//! Reverse-mode differentiation over a linear tape of tensor operations.
//!
//! Every operation appends a node holding its value; [`Tape::backward`]
//! walks the tape from the end and accumulates adjoints. Only the operations
//! the GNN uses are provided.

use std::rc::Rc;

use crate::tensor::{gemm_acc, matmul, Tensor, Trans};

/// Lower clamp for probabilities inside `ln`.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Weighted row scatter: `out[dst] += weight · x[src]` for every entry.
#[derive(Debug, Clone)]
pub struct Scatter {
    pub entries: Vec<(usize, usize, f64)>,
    pub out_rows: usize,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Concat(Var, Var),
    Broadcast(Var),
    Scatter(Var, Rc<Scatter>),
    /// Row `r` of the input is added to output row `segment[r]`.
    SegmentSum(Var, Rc<Vec<usize>>),
    Bce(Var, Rc<Vec<f64>>),
    Mse(Var, Rc<Vec<f64>>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = matmul(self.value(a), self.value(b));
        self.push(value, Op::MatMul(a, b))
    }

    /// `x + bias` with `bias` (`1 × c`) added to every row.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Var {
        let mut value = self.value(x).clone();
        let b = self.value(bias);
        assert_eq!(b.len(), value.cols(), "bias width");
        for r in 0..value.rows() {
            value.row_mut(r).iter_mut().zip(b.data()).for_each(|(v, b)| *v += b);
        }
        self.push(value, Op::AddRow(x, bias))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        self.push(value, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(logistic);
        self.push(value, Op::Sigmoid(x))
    }

    /// Column-wise concatenation of two tensors with equal row counts.
    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.rows(), tb.rows(), "concat rows");
        let (ca, cb) = (ta.cols(), tb.cols());
        let mut data = Vec::with_capacity(ta.rows() * (ca + cb));
        for r in 0..ta.rows() {
            data.extend_from_slice(ta.row(r));
            data.extend_from_slice(tb.row(r));
        }
        let value = Tensor::from_rows(ta.rows(), ca + cb, data);
        self.push(value, Op::Concat(a, b))
    }

    /// Repeats a `1 × c` row `rows` times.
    pub fn broadcast(&mut self, row: Var, rows: usize) -> Var {
        let t = self.value(row);
        let c = t.len();
        let mut data = Vec::with_capacity(rows * c);
        for _ in 0..rows {
            data.extend_from_slice(t.data());
        }
        self.push(Tensor::from_rows(rows, c, data), Op::Broadcast(row))
    }

    pub fn scatter(&mut self, x: Var, s: Rc<Scatter>) -> Var {
        let t = self.value(x);
        let mut value = Tensor::zeros(s.out_rows, t.cols());
        for &(dst, src, w) in &s.entries {
            let src_row = t.row(src);
            value.row_mut(dst).iter_mut().zip(src_row).for_each(|(o, x)| *o += w * x);
        }
        self.push(value, Op::Scatter(x, s))
    }

    pub fn segment_sum(&mut self, x: Var, segment: Rc<Vec<usize>>, segments: usize) -> Var {
        let t = self.value(x);
        assert_eq!(segment.len(), t.rows(), "segment index length");
        let mut value = Tensor::zeros(segments, t.cols());
        for (r, &s) in segment.iter().enumerate() {
            value.row_mut(s).iter_mut().zip(t.row(r)).for_each(|(o, x)| *o += x);
        }
        self.push(value, Op::SegmentSum(x, segment))
    }

    /// Mean binary cross-entropy of probabilities `p` against `targets`.
    pub fn bce(&mut self, p: Var, targets: Rc<Vec<f64>>) -> Var {
        let value = bce_value(self.value(p).data(), &targets);
        self.push(Tensor::from_rows(1, 1, vec![value]), Op::Bce(p, targets))
    }

    pub fn mse(&mut self, p: Var, targets: Rc<Vec<f64>>) -> Var {
        let value = mse_value(self.value(p).data(), &targets);
        self.push(Tensor::from_rows(1, 1, vec![value]), Op::Mse(p, targets))
    }

    /// Sign pattern of every ReLU input on the tape.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu(x) => Some(&self.nodes[x.0].value),
                _ => None,
            })
            .flat_map(|t| t.data().iter().map(|&v| v > 0.0))
            .collect()
    }

    /// Adjoints of every node with respect to the scalar `output`.
    pub fn backward(&self, output: Var) -> Gradients {
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        let seed = self.value(output).map(|_| 1.0);
        grads[output.0] = Some(seed);
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let da = acc(&mut grads, *a, ta);
                    gemm_acc(&g, Trans::No, tb, Trans::Yes, da);
                    let db = acc(&mut grads, *b, tb);
                    gemm_acc(ta, Trans::Yes, &g, Trans::No, db);
                }
                Op::AddRow(x, bias) => {
                    acc(&mut grads, *x, &g).add_assign(&g);
                    let sums = g.col_sums();
                    let tb = self.value(*bias);
                    let db = acc(&mut grads, *bias, tb);
                    db.data_mut().iter_mut().zip(sums.data()).for_each(|(d, s)| *d += s);
                }
                Op::Relu(x) => {
                    let tx = self.value(*x);
                    let dx = acc(&mut grads, *x, tx);
                    for ((d, &xv), &gv) in dx.data_mut().iter_mut().zip(tx.data()).zip(g.data()) {
                        if xv > 0.0 {
                            *d += gv;
                        }
                    }
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    let dx = acc(&mut grads, *x, y);
                    for ((d, &yv), &gv) in dx.data_mut().iter_mut().zip(y.data()).zip(g.data()) {
                        *d += gv * yv * (1.0 - yv);
                    }
                }
                Op::Concat(a, b) => {
                    let ca = self.value(*a).cols();
                    let cb = self.value(*b).cols();
                    {
                        let da = acc(&mut grads, *a, self.value(*a));
                        for r in 0..g.rows() {
                            da.row_mut(r).iter_mut().zip(&g.row(r)[..ca]).for_each(|(d, x)| *d += x);
                        }
                    }
                    let db = acc(&mut grads, *b, self.value(*b));
                    for r in 0..g.rows() {
                        db.row_mut(r).iter_mut().zip(&g.row(r)[ca..ca + cb]).for_each(|(d, x)| *d += x);
                    }
                }
                Op::Broadcast(row) => {
                    let sums = g.col_sums();
                    let dr = acc(&mut grads, *row, self.value(*row));
                    dr.data_mut().iter_mut().zip(sums.data()).for_each(|(d, s)| *d += s);
                }
                Op::Scatter(x, s) => {
                    let dx = acc(&mut grads, *x, self.value(*x));
                    for &(dst, src, w) in &s.entries {
                        let grow = g.row(dst);
                        dx.row_mut(src).iter_mut().zip(grow).for_each(|(d, gv)| *d += w * gv);
                    }
                }
                Op::SegmentSum(x, segment) => {
                    let dx = acc(&mut grads, *x, self.value(*x));
                    for (r, &s) in segment.iter().enumerate() {
                        dx.row_mut(r).iter_mut().zip(g.row(s)).for_each(|(d, gv)| *d += gv);
                    }
                }
                Op::Bce(p, targets) => {
                    let tp = self.value(*p);
                    let scale = g.data()[0] / targets.len() as f64;
                    let dp = acc(&mut grads, *p, tp);
                    for ((d, &pv), &y) in dp.data_mut().iter_mut().zip(tp.data()).zip(targets.iter()) {
                        // the clamp is flat outside [eps, 1 - eps]
                        if pv > PROB_EPS && pv < 1.0 - PROB_EPS {
                            *d += scale * (-(y / pv) + (1.0 - y) / (1.0 - pv));
                        }
                    }
                }
                Op::Mse(p, targets) => {
                    let tp = self.value(*p);
                    let scale = g.data()[0] / targets.len() as f64;
                    let dp = acc(&mut grads, *p, tp);
                    for ((d, &pv), &y) in dp.data_mut().iter_mut().zip(tp.data()).zip(targets.iter()) {
                        *d += scale * 2.0 * (pv - y);
                    }
                }
            }
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }
}

fn acc<'a>(grads: &'a mut [Option<Tensor>], v: Var, like: &Tensor) -> &'a mut Tensor {
    grads[v.0].get_or_insert_with(|| Tensor::zeros_like(like))
}

pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Adjoint of `v`; `None` when `v` does not influence the output.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads[v.0].take()
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn bce_value(p: &[f64], y: &[f64]) -> f64 {
    assert_eq!(p.len(), y.len(), "prediction/target lengths");
    let sum: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    sum / p.len() as f64
}

pub fn mse_value(p: &[f64], y: &[f64]) -> f64 {
    assert_eq!(p.len(), y.len(), "prediction/target lengths");
    p.iter().zip(y).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / p.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central differences of `f` around every entry of `x`.
    fn numeric_grad(x: &Tensor, f: impl Fn(&Tensor) -> f64) -> Tensor {
        let h = 1e-6;
        let mut g = Tensor::zeros_like(x);
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += h;
            let mut xm = x.clone();
            xm.data_mut()[i] -= h;
            g.data_mut()[i] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }

    fn close(a: &Tensor, b: &Tensor, tol: f64) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())), "{x} vs {y}");
        }
    }

    fn sample(rows: usize, cols: usize, salt: f64) -> Tensor {
        Tensor::from_rows(rows, cols, (0..rows * cols).map(|i| ((i as f64 + salt) * 1.7).sin()).collect())
    }

    // A composite exercising every op except the losses.
    fn composite(tape: &mut Tape, x: Var, w: Var, b: Var, v: Var) -> Var {
        let h = tape.matmul(x, w);
        let h = tape.add_row(h, b);
        let h = tape.relu(h);
        let s = Rc::new(Scatter { entries: vec![(0, 1, 1.0), (1, 0, -1.0), (1, 2, 1.0), (0, 2, 0.5)], out_rows: 2 });
        let agg = tape.scatter(h, s);
        let bv = tape.broadcast(v, 2);
        let c = tape.concat(agg, bv);
        let pooled = tape.segment_sum(c, Rc::new(vec![0, 0]), 1);
        let sq = tape.sigmoid(pooled);
        let t = tape.leaf(Tensor::from_rows(5, 1, vec![0.3, -0.2, 0.5, 0.1, -0.4]));
        tape.matmul(sq, t)
    }

    #[test]
    fn backward_matches_differences() {
        let x = sample(3, 4, 0.1);
        let w = sample(4, 3, 2.0);
        let b = sample(1, 3, 5.0);
        let v = sample(1, 2, 7.0);
        let eval = |x: &Tensor, w: &Tensor, b: &Tensor, v: &Tensor| {
            let mut tape = Tape::new();
            let ids = [tape.leaf(x.clone()), tape.leaf(w.clone()), tape.leaf(b.clone()), tape.leaf(v.clone())];
            let out = composite(&mut tape, ids[0], ids[1], ids[2], ids[3]);
            (tape, ids, out)
        };
        let (tape, ids, out) = eval(&x, &w, &b, &v);
        let grads = tape.backward(out);
        let scalar = |t: (Tape, [Var; 4], Var)| t.0.value(t.2).data()[0];
        close(grads.get(ids[0]).unwrap(), &numeric_grad(&x, |x| scalar(eval(x, &w, &b, &v))), 1e-6);
        close(grads.get(ids[1]).unwrap(), &numeric_grad(&w, |w| scalar(eval(&x, w, &b, &v))), 1e-6);
        close(grads.get(ids[2]).unwrap(), &numeric_grad(&b, |b| scalar(eval(&x, &w, b, &v))), 1e-6);
        close(grads.get(ids[3]).unwrap(), &numeric_grad(&v, |v| scalar(eval(&x, &w, &b, v))), 1e-6);
    }

    #[test]
    fn loss_gradients() {
        let p = Tensor::from_rows(3, 1, vec![0.2, 0.7, 0.5]);
        let y = Rc::new(vec![0.0, 1.0, 1.0]);
        for mse in [false, true] {
            let run = |p: &Tensor| {
                let mut tape = Tape::new();
                let pv = tape.leaf(p.clone());
                let l = if mse { tape.mse(pv, y.clone()) } else { tape.bce(pv, y.clone()) };
                (tape, pv, l)
            };
            let (tape, pv, l) = run(&p);
            let g = tape.backward(l);
            let num = numeric_grad(&p, |p| {
                let (t, _, l) = run(p);
                t.value(l).data()[0]
            });
            close(g.get(pv).unwrap(), &num, 1e-6);
        }
    }

    #[test]
    fn loss_values() {
        assert!((bce_value(&[0.5], &[1.0]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(mse_value(&[0.5], &[1.0]), 0.25);
        assert!(bce_value(&[1.0 - 1e-13, 1e-13], &[1.0, 0.0]) < 1e-11);
        assert!(mse_value(&[1.0 - 1e-9, 1e-9], &[1.0, 0.0]) < 1e-17);
        assert!(bce_value(&[0.0], &[1.0]).is_finite());
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert!(logistic(-800.0) >= 0.0 && logistic(800.0) <= 1.0);
    }

    #[test]
    fn unused_leaf_has_no_gradient() {
        let mut tape = Tape::new();
        let a = tape.leaf(sample(1, 1, 0.0));
        let unused = tape.leaf(sample(1, 1, 1.0));
        let s = tape.sigmoid(a);
        let g = tape.backward(s);
        assert!(g.get(unused).is_none());
        assert!(g.get(a).is_some());
    }
}
