use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Polarity};
use crate::embedalign::EmbeddingTable;
use crate::hiermodel::{predict, train, HierModel, ModelConfig, ModelError, Prediction};

use super::CalibrationError;

/// Model outputs the calibration network needs for one manifesto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestoEstimate {
    pub r_hat: f64,
    pub v_d: Vec<f64>,
    /// Argmax sentence polarities.
    pub polarities: Vec<Polarity>,
}

impl ManifestoEstimate {
    /// Position on the [0, 1] scale.
    pub fn pos(&self) -> f64 {
        (self.r_hat + 1.0) / 2.0
    }
}

impl From<&Prediction> for ManifestoEstimate {
    fn from(p: &Prediction) -> Self {
        Self { r_hat: p.r_hat, v_d: p.v_d.clone(), polarities: p.predicted_polarities() }
    }
}

/// Where an estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Model trained without this fold.
    HeldOutFold(usize),
    /// Model trained on the whole training set.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedEstimates {
    pub estimates: BTreeMap<String, ManifestoEstimate>,
    pub provenance: BTreeMap<String, Provenance>,
}

/// Fold of each index: a seeded shuffle dealt round-robin into `k` folds.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        folds[i] = rank % k;
    }
    folds
}

pub fn estimates_from(model: &HierModel, corpus: &Corpus) -> Result<BTreeMap<String, ManifestoEstimate>, ModelError> {
    let preds = predict(model, corpus)?;
    Ok(corpus.manifestos.iter().zip(&preds).map(|(m, p)| (m.id.clone(), p.into())).collect())
}

/// Out-of-fold estimates for every manifesto of `train_corpus`.
pub fn stacked_estimates(
    train_corpus: &Corpus,
    config: &ModelConfig,
    k: usize,
    seed: u64,
    pretrained: Option<&EmbeddingTable>,
) -> Result<StackedEstimates, CalibrationError> {
    if k < 2 {
        return Err(CalibrationError::Config("stacking needs at least 2 folds".into()));
    }
    let folds = fold_assignment(train_corpus.len(), k, seed);
    let per_fold: Vec<BTreeMap<String, ManifestoEstimate>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let inside: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != f).collect();
            let held: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == f).collect();
            let (model, _) = match train(&train_corpus.subset(&inside), config, pretrained) {
                Err(ModelError::NoSupervision) => return Err(CalibrationError::NoSupervisedFold(f)),
                other => other?,
            };
            Ok(estimates_from(&model, &train_corpus.subset(&held))?)
        })
        .collect::<Result<_, CalibrationError>>()?;

    let mut out = StackedEstimates { estimates: BTreeMap::new(), provenance: BTreeMap::new() };
    for (f, estimates) in per_fold.into_iter().enumerate() {
        for (id, e) in estimates {
            out.provenance.insert(id.clone(), Provenance::HeldOutFold(f));
            out.estimates.insert(id, e);
        }
    }
    Ok(out)
}
