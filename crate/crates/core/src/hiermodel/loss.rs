//! Loss terms on plain prediction values. The model builds the same terms on
//! the tape for training; these are used for reporting and testing.

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;

use super::{ModelConfig, ModelError, Prediction};

/// Values of the individual loss terms and their weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub sentence: f64,
    pub polarity: f64,
    pub document: f64,
    pub structured: f64,
    pub total: f64,
}

fn mean_xent<'a>(dists: impl Iterator<Item = &'a [f64]>, gold: &[usize]) -> Result<f64, ModelError> {
    let mut sum = 0.0;
    let mut n = 0;
    for (d, &g) in dists.zip(gold) {
        let p = *d.get(g).ok_or_else(|| ModelError::MissingGold(format!("class {g} out of range")))?;
        sum -= p.ln();
        n += 1;
    }
    if n == 0 || n != gold.len() {
        return Err(ModelError::MissingGold("gold labels do not match sentences".into()));
    }
    Ok(sum / n as f64)
}

/// Mean cross-entropy of the 57-class distributions against gold class indices.
pub fn loss_sentence(pred: &Prediction, gold: &[Option<usize>]) -> Result<f64, ModelError> {
    let gold = require_all(gold, pred.sentences.len())?;
    mean_xent(pred.sentences.iter().map(|s| s.y.as_slice()), &gold)
}

pub fn loss_polarity(pred: &Prediction, gold: &[Option<Polarity>]) -> Result<f64, ModelError> {
    let gold: Vec<Option<usize>> = gold.iter().map(|p| p.map(Polarity::index)).collect();
    let gold = require_all(&gold, pred.sentences.len())?;
    mean_xent(pred.sentences.iter().map(|s| s.p.as_slice()), &gold)
}

fn require_all(gold: &[Option<usize>], n: usize) -> Result<Vec<usize>, ModelError> {
    if gold.len() != n {
        return Err(ModelError::MissingGold(format!("{} labels for {n} sentences", gold.len())));
    }
    gold.iter()
        .enumerate()
        .map(|(i, g)| g.ok_or_else(|| ModelError::MissingGold(format!("sentence {} has no gold label", i + 1))))
        .collect()
}

/// Mean squared error of document scores over a batch.
pub fn loss_document(pairs: &[(f64, Option<f64>)]) -> Result<f64, ModelError> {
    if pairs.is_empty() {
        return Err(ModelError::MissingGold("empty batch".into()));
    }
    let mut sum = 0.0;
    for (i, &(r_hat, gold)) in pairs.iter().enumerate() {
        let gold = gold.ok_or_else(|| ModelError::MissingGold(format!("document {} has no rile", i + 1)))?;
        sum += (r_hat - gold).powi(2);
    }
    Ok(sum / pairs.len() as f64)
}

/// Mean over sentences of `p_right - p_left`.
pub fn mean_balance(pred: &Prediction) -> f64 {
    pred.sentences.iter().map(|s| s.balance()).sum::<f64>() / pred.sentences.len() as f64
}

/// Squared gap between mean sentence balance and the document score,
/// averaged over documents.
pub fn loss_structured(batch: &[(&Prediction, Option<f64>)]) -> Result<f64, ModelError> {
    let pairs: Vec<(f64, Option<f64>)> = batch.iter().map(|(p, r)| (mean_balance(p), *r)).collect();
    loss_document(&pairs)
}

/// Fills in `total` from the four component values.
pub fn loss_total(components: LossComponents, config: &ModelConfig) -> LossComponents {
    let joint = config.alpha * components.sentence + (1.0 - config.alpha) * components.document;
    let total = joint + config.beta * components.polarity + config.gamma * components.structured;
    LossComponents { total, ..components }
}
