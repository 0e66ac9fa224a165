use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    RandomStratified,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub test_fraction: f64,
    /// Temporal splits train on elections strictly before this date.
    pub cutoff_date: NaiveDate,
    pub repeats: usize,
    /// Share of the training part held out as a development set.
    pub dev_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            kind: SplitKind::RandomStratified,
            test_fraction: 0.2,
            cutoff_date: NaiveDate::from_ymd_opt(2009, 1, 1).expect("valid date"),
            repeats: 10,
            dev_fraction: 0.1,
            seed: 13,
        }
    }
}

impl SplitSpec {
    pub fn temporal(cutoff_date: NaiveDate) -> Self {
        Self { kind: SplitKind::Temporal, cutoff_date, repeats: 1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(EvalError::Config("test_fraction must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(EvalError::Config("dev_fraction must lie in [0, 1)".into()));
        }
        if self.repeats == 0 {
            return Err(EvalError::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// Indices into the corpus, each list in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partition for repeat `repeat` (0-based); repeats differ only in seed.
pub fn make_split(corpus: &Corpus, spec: &SplitSpec, repeat: usize) -> Result<Split, EvalError> {
    spec.validate()?;
    let seed = spec.seed.wrapping_add(repeat as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    match spec.kind {
        SplitKind::Temporal => {
            for (i, m) in corpus.manifestos.iter().enumerate() {
                if m.election_date < spec.cutoff_date {
                    train.push(i);
                } else {
                    test.push(i);
                }
            }
        }
        SplitKind::RandomStratified => {
            let mut by_country: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, m) in corpus.manifestos.iter().enumerate() {
                by_country.entry(m.country.as_str()).or_default().push(i);
            }
            for (_, mut idx) in by_country {
                idx.shuffle(&mut rng);
                let k = (spec.test_fraction * idx.len() as f64).round() as usize;
                test.extend_from_slice(&idx[..k]);
                train.extend_from_slice(&idx[k..]);
            }
        }
    }
    if train.is_empty() {
        return Err(EvalError::EmptyPartition("train".into()));
    }
    if test.is_empty() {
        return Err(EvalError::EmptyPartition("test".into()));
    }
    if spec.dev_fraction > 0.0 && train.len() < 2 {
        return Err(EvalError::EmptyPartition("dev".into()));
    }
    train.shuffle(&mut rng);
    let k = (spec.dev_fraction * train.len() as f64).round() as usize;
    let k = if spec.dev_fraction > 0.0 { k.clamp(1, train.len() - 1) } else { 0 };
    let mut dev = train.split_off(train.len() - k);
    train.sort_unstable();
    dev.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, dev, test })
}
