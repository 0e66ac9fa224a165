//! Reverse-mode tape over a fixed operation set.

use std::collections::HashMap;

use super::tensor::{log_sum_exp, sigmoid, softmax};
use super::{DiffError, ParamId, ParameterStore, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Const,
    Param(ParamId),
    /// One row of a parameter matrix, as a column vector.
    ParamRow(ParamId, usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    Concat(Vec<Var>),
    Mean(Vec<Var>),
    Square(Var),
    Sum(Var),
    Pick(Var, usize),
    /// `-log softmax(logits)[gold]`.
    SoftmaxXent(Var, usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a forward computation so it can be differentiated.
///
/// Parameter values are copied onto the tape when first referenced; the same
/// parameter referenced twice yields the same [`Var`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    loaded: HashMap<ParamId, Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
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

    pub fn scalar(&self, v: Var) -> f64 {
        let t = self.value(v);
        debug_assert_eq!(t.len(), 1);
        t.data()[0]
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Const)
    }

    pub fn param(&mut self, store: &ParameterStore, id: ParamId) -> Var {
        if let Some(&v) = self.loaded.get(&id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Param(id));
        self.loaded.insert(id, v);
        v
    }

    /// Row lookup (embedding gather) without copying the whole matrix.
    pub fn param_row(&mut self, store: &ParameterStore, id: ParamId, row: usize) -> Var {
        let value = Tensor::column(store.value(id).row(row).to_vec());
        self.push(value, Op::ParamRow(id, row))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        self.push(value, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(value, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(value, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x * c);
        self.push(value, Op::Scale(a, c))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    /// Softmax over all entries of a column vector.
    pub fn softmax(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let value = Tensor::from_vec(t.rows(), t.cols(), softmax(t.data()));
        self.push(value, Op::Softmax(a))
    }

    /// Stacks column vectors (or same-width matrices) vertically.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of nothing");
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols(), cols, "concat width mismatch");
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        self.push(Tensor::from_vec(rows, cols, data), Op::Concat(parts.to_vec()))
    }

    /// Elementwise mean of same-shaped nodes.
    pub fn mean(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "mean of nothing");
        let mut acc = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            acc.add_assign(self.value(p));
        }
        let n = parts.len() as f64;
        let value = acc.map(|x| x / n);
        self.push(value, Op::Mean(parts.to_vec()))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x * x);
        self.push(value, Op::Square(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(value, Op::Sum(a))
    }

    /// Scalar entry `i` of a node.
    pub fn pick(&mut self, a: Var, i: usize) -> Var {
        let value = Tensor::scalar(self.value(a).data()[i]);
        self.push(value, Op::Pick(a, i))
    }

    /// Cross-entropy of softmax(`logits`) against class `gold`, computed in
    /// log-space.
    pub fn softmax_xent(&mut self, logits: Var, gold: usize) -> Result<Var, DiffError> {
        let z = self.value(logits).data();
        if gold >= z.len() {
            return Err(DiffError::ClassOutOfRange { gold, classes: z.len() });
        }
        let loss = log_sum_exp(z) - z[gold];
        Ok(self.push(Tensor::scalar(loss), Op::SoftmaxXent(logits, gold)))
    }

    /// `W x + b`.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Var {
        let wx = self.matmul(w, x);
        self.add(wx, b)
    }

    /// Back-propagates from the scalar `root`, accumulating into the
    /// gradient slots of `store`. Parameters the root does not depend on are
    /// left untouched.
    pub fn backward(&self, root: Var, store: &mut ParameterStore) -> Result<(), DiffError> {
        let root_value = self.value(root);
        if root_value.len() != 1 {
            return Err(DiffError::NonScalarRoot(root_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::scalar(1.0));

        fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Const => {}
                Op::Param(id) => store.get_mut(*id).grad.add_assign(&g),
                Op::ParamRow(id, row) => {
                    let dst = store.get_mut(*id).grad.row_mut(*row);
                    for (d, s) in dst.iter_mut().zip(g.data()) {
                        *d += s;
                    }
                }
                Op::MatMul(a, b) => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let mut ga = Tensor::zeros(av.rows(), av.cols());
                    // dA = G Bᵀ, dB = Aᵀ G
                    ga.add_matmul_t(&g, bv);
                    let gb = av.t_matmul(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *b, g.map(|x| -x));
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(*b), |x, y| x * y);
                    let gb = g.zip_map(self.value(*a), |x, y| x * y);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Scale(a, c) => acc(&mut grads, *a, g.map(|x| x * c)),
                Op::Sigmoid(a) => acc(&mut grads, *a, g.zip_map(&node.value, |x, s| x * s * (1.0 - s))),
                Op::Tanh(a) => acc(&mut grads, *a, g.zip_map(&node.value, |x, t| x * (1.0 - t * t))),
                Op::Softmax(a) => {
                    let p = node.value.data();
                    let dot: f64 = g.data().iter().zip(p).map(|(x, y)| x * y).sum();
                    let ga = g.zip_map(&node.value, |x, pi| pi * (x - dot));
                    acc(&mut grads, *a, ga);
                }
                Op::Concat(parts) => {
                    let cols = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let rows = self.value(p).rows();
                        let slice = g.data()[offset * cols..(offset + rows) * cols].to_vec();
                        acc(&mut grads, p, Tensor::from_vec(rows, cols, slice));
                        offset += rows;
                    }
                }
                Op::Mean(parts) => {
                    let n = parts.len() as f64;
                    let share = g.map(|x| x / n);
                    for &p in parts {
                        acc(&mut grads, p, share.clone());
                    }
                }
                Op::Square(a) => acc(&mut grads, *a, g.zip_map(self.value(*a), |x, v| 2.0 * v * x)),
                Op::Sum(a) => {
                    let av = self.value(*a);
                    acc(&mut grads, *a, Tensor::filled(av.rows(), av.cols(), g.data()[0]));
                }
                Op::Pick(a, i) => {
                    let av = self.value(*a);
                    let mut ga = Tensor::zeros(av.rows(), av.cols());
                    ga.data_mut()[*i] = g.data()[0];
                    acc(&mut grads, *a, ga);
                }
                Op::SoftmaxXent(logits, gold) => {
                    let z = self.value(*logits);
                    let mut p = softmax(z.data());
                    p[*gold] -= 1.0;
                    let scale = g.data()[0];
                    let ga = Tensor::from_vec(z.rows(), z.cols(), p.into_iter().map(|x| x * scale).collect());
                    acc(&mut grads, *logits, ga);
                }
            }
        }
        Ok(())
    }
}
