use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Manifesto};
use crate::diffcore::{Adam, Tape};
use crate::embedalign::EmbeddingTable;

use super::{DocumentTargets, HierModel, LossComponents, ModelConfig, ModelError, Prediction, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-document loss seen during the epoch's updates.
    pub running_loss: f64,
    /// Mean per-document loss with the parameters at the end of the epoch.
    pub loss: LossComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: LossComponents,
    pub epochs: Vec<EpochStats>,
    pub supervised_docs: usize,
    pub sentence_labelled_docs: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> LossComponents {
        self.epochs.last().map(|e| e.loss).unwrap_or(self.initial_loss)
    }
}

fn supervised(corpus: &Corpus) -> Result<Vec<(&Manifesto, DocumentTargets)>, ModelError> {
    let mut out = Vec::new();
    for m in &corpus.manifestos {
        let t = DocumentTargets::of(m, &corpus.scheme)?;
        if !t.is_empty() {
            out.push((m, t));
        }
    }
    if out.iter().all(|(_, t)| t.rile.is_none()) {
        return Err(ModelError::NoSupervision);
    }
    Ok(out)
}

/// Trains a fresh model. Documents without any label are ignored, including
/// for vocabulary construction.
pub fn train(
    corpus: &Corpus,
    config: &ModelConfig,
    pretrained: Option<&EmbeddingTable>,
) -> Result<(HierModel, TrainReport), ModelError> {
    config.validate()?;
    let docs = supervised(corpus)?;
    let vocab = Vocabulary::build(docs.iter().map(|(m, _)| *m), config.vocab_cap);
    let model = HierModel::new(config, &corpus.scheme, vocab, pretrained)?;
    train_from(model, corpus)
}

/// Continues training `model` for `model.config.epochs` passes.
pub fn train_from(mut model: HierModel, corpus: &Corpus) -> Result<(HierModel, TrainReport), ModelError> {
    model.check_scheme(&corpus.scheme)?;
    let docs = supervised(corpus)?;
    let mut adam = Adam::new(&model.store, model.config.learning_rate);
    adam.clip_norm = Some(model.config.clip_norm);
    let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..docs.len()).collect();

    let mut report = TrainReport {
        initial_loss: mean_loss(&model, &docs)?,
        epochs: Vec::new(),
        supervised_docs: docs.len(),
        sentence_labelled_docs: docs.iter().filter(|(_, t)| t.classes.is_some()).count(),
    };
    info!("training on {} documents, initial loss {:.6}", docs.len(), report.initial_loss.total);

    for epoch in 1..=model.config.epochs {
        order.shuffle(&mut rng);
        let mut running = 0.0;
        for &i in &order {
            let (m, targets) = &docs[i];
            let mut tape = Tape::new();
            let graph = model.forward(&mut tape, m)?;
            let (root, comps) = model.document_loss(&mut tape, &graph, targets)?;
            model.store.zero_grad();
            tape.backward(root, &mut model.store)?;
            adam.step(&mut model.store);
            running += comps.total;
        }
        let stats = EpochStats { epoch, running_loss: running / docs.len() as f64, loss: mean_loss(&model, &docs)? };
        info!("epoch {epoch}: loss {:.6}", stats.loss.total);
        report.epochs.push(stats);
    }
    model.store.zero_grad();
    Ok((model, report))
}

fn mean_loss(model: &HierModel, docs: &[(&Manifesto, DocumentTargets)]) -> Result<LossComponents, ModelError> {
    let per_doc: Vec<LossComponents> = docs
        .par_iter()
        .map(|(m, t)| {
            let mut tape = Tape::new();
            let g = model.forward(&mut tape, m)?;
            Ok(model.document_loss(&mut tape, &g, t)?.1)
        })
        .collect::<Result<_, ModelError>>()?;
    let n = per_doc.len() as f64;
    let mut acc = LossComponents::default();
    for c in per_doc {
        acc.sentence += c.sentence / n;
        acc.polarity += c.polarity / n;
        acc.document += c.document / n;
        acc.structured += c.structured / n;
        acc.total += c.total / n;
    }
    Ok(acc)
}

/// Mean per-document training objective over the labelled documents of
/// `corpus`.
pub fn corpus_loss(model: &HierModel, corpus: &Corpus) -> Result<LossComponents, ModelError> {
    model.check_scheme(&corpus.scheme)?;
    mean_loss(model, &supervised(corpus)?)
}

/// Predictions for every manifesto, in corpus order.
pub fn predict(model: &HierModel, corpus: &Corpus) -> Result<Vec<Prediction>, ModelError> {
    corpus.manifestos.par_iter().map(|m| model.encode_document(m)).collect()
}
