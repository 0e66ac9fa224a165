//! LSTM cells and bidirectional encoders on the tape.

use rand::Rng;

use super::{DiffError, ParamId, ParameterStore, Tape, Tensor, Var};

pub const INIT_BOUND: f64 = 0.08;
pub const FORGET_BIAS: f64 = 1.0;

/// Gate order used for every per-gate array below.
pub const GATES: [&str; 4] = ["input", "forget", "output", "candidate"];

/// One direction of an LSTM: per-gate input weights `W`, recurrent weights
/// `U` and biases `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmParams {
    pub w: [ParamId; 4],
    pub u: [ParamId; 4],
    pub b: [ParamId; 4],
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl LstmParams {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, DiffError> {
        let mut w = Vec::with_capacity(4);
        let mut u = Vec::with_capacity(4);
        let mut b = Vec::with_capacity(4);
        for gate in GATES {
            w.push(store.add(&format!("{prefix}.W_{gate}"), Tensor::uniform(hidden_dim, input_dim, INIT_BOUND, rng))?);
            u.push(store.add(&format!("{prefix}.U_{gate}"), Tensor::uniform(hidden_dim, hidden_dim, INIT_BOUND, rng))?);
            let bias = if gate == "forget" {
                Tensor::filled(hidden_dim, 1, FORGET_BIAS)
            } else {
                Tensor::uniform(hidden_dim, 1, INIT_BOUND, rng)
            };
            b.push(store.add(&format!("{prefix}.b_{gate}"), bias)?);
        }
        Ok(Self {
            w: w.try_into().expect("four gates"),
            u: u.try_into().expect("four gates"),
            b: b.try_into().expect("four gates"),
            input_dim,
            hidden_dim,
        })
    }

    fn load(&self, tape: &mut Tape, store: &ParameterStore) -> LoadedLstm {
        let load = |tape: &mut Tape, ids: &[ParamId; 4]| ids.map(|id| tape.param(store, id));
        LoadedLstm { w: load(tape, &self.w), u: load(tape, &self.u), b: load(tape, &self.b), hidden_dim: self.hidden_dim }
    }
}

struct LoadedLstm {
    w: [Var; 4],
    u: [Var; 4],
    b: [Var; 4],
    hidden_dim: usize,
}

impl LoadedLstm {
    fn step(&self, tape: &mut Tape, x: Var, h: Var, c: Var) -> (Var, Var) {
        let mut pre = [x; 4];
        for g in 0..4 {
            let wx = tape.matmul(self.w[g], x);
            let uh = tape.matmul(self.u[g], h);
            let s = tape.add(wx, uh);
            pre[g] = tape.add(s, self.b[g]);
        }
        let i = tape.sigmoid(pre[0]);
        let f = tape.sigmoid(pre[1]);
        let o = tape.sigmoid(pre[2]);
        let cand = tape.tanh(pre[3]);
        let keep = tape.mul(f, c);
        let write = tape.mul(i, cand);
        let c_next = tape.add(keep, write);
        let squashed = tape.tanh(c_next);
        let h_next = tape.mul(o, squashed);
        (h_next, c_next)
    }

    /// Hidden states for each input, in input order.
    fn run(&self, tape: &mut Tape, inputs: impl Iterator<Item = Var>) -> Vec<Var> {
        let mut h = tape.constant(Tensor::zeros(self.hidden_dim, 1));
        let mut c = tape.constant(Tensor::zeros(self.hidden_dim, 1));
        let mut out = Vec::new();
        for x in inputs {
            (h, c) = self.step(tape, x, h, c);
            out.push(h);
        }
        out
    }
}

/// Forward and backward LSTM over the same sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiLstmParams {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstmParams {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, DiffError> {
        Ok(Self {
            forward: LstmParams::new(store, &format!("{prefix}.fwd"), input_dim, hidden_dim, rng)?,
            backward: LstmParams::new(store, &format!("{prefix}.bwd"), input_dim, hidden_dim, rng)?,
        })
    }

    pub fn output_dim(&self) -> usize {
        2 * self.forward.hidden_dim
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmOutput {
    /// `[h→_t; h←_t]` for every position `t`.
    pub steps: Vec<Var>,
    /// `[h→_T; h←_1]`: the last state each direction reached.
    pub final_state: Var,
}

pub fn bilstm_encode(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &BiLstmParams,
    sequence: &[Var],
) -> Result<BiLstmOutput, DiffError> {
    if sequence.is_empty() {
        return Err(DiffError::EmptySequence);
    }
    let fwd = params.forward.load(tape, store);
    let bwd = params.backward.load(tape, store);
    let forward_states = fwd.run(tape, sequence.iter().copied());
    let mut backward_states = bwd.run(tape, sequence.iter().rev().copied());
    backward_states.reverse();
    let steps = forward_states
        .iter()
        .zip(&backward_states)
        .map(|(&f, &b)| tape.concat(&[f, b]))
        .collect();
    let final_state = tape.concat(&[*forward_states.last().expect("nonempty"), backward_states[0]]);
    Ok(BiLstmOutput { steps, final_state })
}
