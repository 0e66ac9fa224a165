//! A small reverse-mode differentiation core: dense tensors, a tape over a
//! fixed operation set, LSTM encoders, Adam, and a finite-difference checker.

mod gradcheck;
mod lstm;
mod optim;
mod params;
mod tape;
mod tensor;

use thiserror::Error;

pub use gradcheck::{check_gradients, relative_error, GradCheck};
pub use lstm::{bilstm_encode, BiLstmOutput, BiLstmParams, LstmParams, FORGET_BIAS, GATES, INIT_BOUND};
pub use optim::Adam;
pub use params::{ParamId, Parameter, ParameterStore};
pub use tape::{Tape, Var};
pub use tensor::{log_sum_exp, sigmoid, softmax, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum DiffError {
    #[error("loss root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("gold class {gold} out of range for {classes} classes")]
    ClassOutOfRange { gold: usize, classes: usize },
    #[error("empty input sequence")]
    EmptySequence,
    #[error("duplicate parameter name {0:?}")]
    DuplicateParameter(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
}

/// Softmax probabilities and `-log p[gold]` for a logit vector.
pub fn softmax_xent(logits: &[f64], gold: usize) -> Result<(Vec<f64>, f64), DiffError> {
    if gold >= logits.len() {
        return Err(DiffError::ClassOutOfRange { gold, classes: logits.len() });
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(DiffError::NonFinite("logits".into()));
    }
    let loss = log_sum_exp(logits) - logits[gold];
    Ok((softmax(logits), loss))
}

#[cfg(test)]
mod tests;
