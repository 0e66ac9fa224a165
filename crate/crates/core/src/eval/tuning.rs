use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedalign::EmbeddingTable;
use crate::hiermodel::{train, ModelConfig};

use super::experiment::score_model;
use super::split::{make_split, SplitSpec};
use super::{stage, EvalError};

/// Candidate values, searched one parameter at a time: alpha, then gamma,
/// then beta, each step keeping the best value found so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningGrid {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            alpha: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            gamma: vec![0.0, 0.3, 0.5, 0.7, 1.0],
            beta: vec![0.0, 0.1, 0.3, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningStep {
    pub parameter: String,
    pub value: f64,
    pub dev_micro_f: Option<f64>,
    pub dev_pearson: Option<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub steps: Vec<TuningStep>,
    pub best: ModelConfig,
}

/// Mean of the available dev metrics; sentence and document quality count
/// equally.
fn dev_score(f: Option<f64>, r: Option<f64>) -> f64 {
    let xs: Vec<f64> = [f, r].into_iter().flatten().collect();
    if xs.is_empty() {
        f64::NEG_INFINITY
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Tunes the loss weights on the dev part of `split` (repeat 0). Ties keep
/// the earlier grid value.
pub fn tune(
    corpus: &Corpus,
    base: &ModelConfig,
    grid: &TuningGrid,
    split: &SplitSpec,
    exclude: &[String],
    pretrained: Option<&EmbeddingTable>,
) -> Result<TuningReport, EvalError> {
    let s = make_split(corpus, split, 0)?;
    if s.dev.is_empty() {
        return Err(EvalError::EmptyPartition("dev".into()));
    }
    let train_c = corpus.subset(&s.train);
    let dev_c = corpus.subset(&s.dev);
    let mut best = base.clone();
    let mut steps = Vec::new();
    type Setter = fn(&mut ModelConfig, f64);
    let params: [(&str, &Vec<f64>, Setter); 3] = [
        ("alpha", &grid.alpha, |c, v| c.alpha = v),
        ("gamma", &grid.gamma, |c, v| c.gamma = v),
        ("beta", &grid.beta, |c, v| c.beta = v),
    ];
    for (name, values, set) in params {
        if values.is_empty() {
            continue;
        }
        let results: Vec<TuningStep> = values
            .par_iter()
            .map(|&v| {
                let mut c = best.clone();
                set(&mut c, v);
                c.validate().map_err(stage("tune"))?;
                let (model, _) = train(&train_c, &c, pretrained).map_err(stage("tune"))?;
                let scores = score_model(&model, &dev_c, exclude)?;
                Ok(TuningStep {
                    parameter: name.into(),
                    value: v,
                    dev_micro_f: scores.micro_f,
                    dev_pearson: scores.pearson,
                    score: dev_score(scores.micro_f, scores.pearson),
                })
            })
            .collect::<Result<_, EvalError>>()?;
        let winner = results.iter().fold(&results[0], |b, r| if r.score > b.score { r } else { b });
        set(&mut best, winner.value);
        steps.extend(results);
    }
    Ok(TuningReport { steps, best })
}
