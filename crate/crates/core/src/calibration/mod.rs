//! Relational calibration of document positions: builds the observed
//! database for the shipped rule program from model estimates, party
//! coalition graphs and election metadata, then runs MAP inference.

mod database;
mod features;
mod graph;
mod stacking;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embedalign::EmbeddingTable;
use crate::hiermodel::{train, HierModel, ModelConfig, ModelError, TrainReport};
use crate::pslengine::{ground, map_inference, parse_program, Database, Literal, Predicate, Program, PslError, Rule, SolverConfig};

pub use database::{build_database, previous_manifestos, recent_pairs, same_election_pairs, PRIOR_PREDICATE};
pub use features::{lw_right_left_ratio, restrict_program, squash, FeatureGroup};
pub use graph::{ChesScores, CoalitionKind, PartyGraph};
pub use stacking::{estimates_from, fold_assignment, stacked_estimates, ManifestoEstimate, Provenance, StackedEstimates};

/// Source of the shipped calibration program.
pub const CALIBRATION_PROGRAM: &str = include_str!("../../assets/calibration.psl");

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("no prediction for manifesto {0}")]
    MissingPrediction(String),
    #[error("squash input must be nonnegative, got {0}")]
    NegativeInput(f64),
    #[error("empty document")]
    EmptyDocument,
    #[error("fold {0} leaves no supervised training documents")]
    NoSupervisedFold(usize),
    #[error("invalid calibration configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Psl(#[from] PslError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub recency_window_years: f64,
    /// Clamp negative cosine similarity to 0 (otherwise rescale to [0, 1]).
    pub similarity_clamp: bool,
    /// Folds for out-of-fold training estimates.
    pub folds: usize,
    pub seed: u64,
    /// Weight of an optional rule pair anchoring `pos` to its warm start.
    pub prior_weight: Option<f64>,
    pub features: Vec<FeatureGroup>,
    pub solver: SolverConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            recency_window_years: 4.0,
            similarity_clamp: true,
            folds: 5,
            seed: 29,
            prior_weight: None,
            features: FeatureGroup::ALL.to_vec(),
            solver: SolverConfig::default(),
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if !(self.recency_window_years > 0.0) {
            return Err(CalibrationError::Config("recency window must be positive".into()));
        }
        if self.folds < 2 {
            return Err(CalibrationError::Config("folds must be at least 2".into()));
        }
        if self.prior_weight.is_some_and(|w| !(w >= 0.0)) {
            return Err(CalibrationError::Config("prior weight must be nonnegative".into()));
        }
        Ok(())
    }
}

pub fn default_program() -> Program {
    parse_program(CALIBRATION_PROGRAM).expect("shipped program parses")
}

/// The program actually run for `config`: feature groups applied, prior
/// rules appended when enabled.
pub fn effective_program(program: &Program, config: &CalibrationConfig) -> Program {
    let mut p = restrict_program(program, &config.features);
    if let Some(w) = config.prior_weight {
        if p.predicate(PRIOR_PREDICATE).is_none() {
            p.predicates.push(Predicate { name: PRIOR_PREDICATE.into(), arity: 1, closed: true });
        }
        let m = Literal::positive("Manifesto", &["x"]);
        p.rules.push(Rule {
            weight: w,
            body: vec![m.clone(), Literal::positive(PRIOR_PREDICATE, &["x"])],
            head: Literal::positive("pos", &["x"]),
            exponent: 2,
        });
        p.rules.push(Rule {
            weight: w,
            body: vec![m, Literal::negative(PRIOR_PREDICATE, &["x"])],
            head: Literal::negative("pos", &["x"]),
            exponent: 2,
        });
    }
    p
}

/// Predicates the program reads that the database never provides, and
/// predicates the database provides that the program never reads.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrphanReport {
    pub missing_from_database: Vec<String>,
    pub unused_by_program: Vec<String>,
}

impl OrphanReport {
    pub fn is_clean(&self) -> bool {
        self.missing_from_database.is_empty() && self.unused_by_program.is_empty()
    }
}

pub fn orphan_predicates(program: &Program, db: &Database) -> OrphanReport {
    let used: BTreeSet<&str> = program.rules.iter().flat_map(|r| r.literals().map(|l| l.predicate.as_str())).collect();
    let provided: BTreeSet<&str> = db.predicates().collect();
    OrphanReport {
        missing_from_database: used.difference(&provided).map(|s| s.to_string()).collect(),
        unused_by_program: provided.difference(&used).map(|s| s.to_string()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Calibrated position in [0, 1] per target manifesto.
    pub pos: BTreeMap<String, f64>,
    /// The same positions on the [-1, 1] scale.
    pub rile: BTreeMap<String, f64>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ground_rules: usize,
}

/// Grounds `program` on `db` and solves for the `pos` targets.
pub fn calibrate(db: &Database, program: &Program, solver: &SolverConfig) -> Result<Calibration, CalibrationError> {
    let network = ground(program, db)?;
    let result = map_inference(&network, solver);
    let mut pos = BTreeMap::new();
    for (atom, v) in network.assignment_map(&result.values) {
        if atom.predicate == "pos" {
            pos.insert(atom.args[0].clone(), v);
        }
    }
    let rile = pos.iter().map(|(k, &p)| (k.clone(), 2.0 * p - 1.0)).collect();
    Ok(Calibration {
        pos,
        rile,
        energy: result.energy,
        iterations: result.iterations,
        converged: result.converged,
        ground_rules: network.rules.len(),
    })
}

/// Everything the two-stage protocol produces.
#[derive(Debug, Clone)]
pub struct StackedRun {
    pub model: HierModel,
    pub report: TrainReport,
    /// Estimates for training (out-of-fold) and test (full model) manifestos.
    pub stacked: StackedEstimates,
    pub database: Database,
    pub calibration: Calibration,
}

/// Trains on `train_corpus`, estimates training inputs out of fold and test
/// inputs with the full model, then calibrates the test manifestos.
pub fn run_stacked(
    train_corpus: &Corpus,
    test_corpus: &Corpus,
    model_config: &ModelConfig,
    graph: &PartyGraph,
    program: &Program,
    config: &CalibrationConfig,
    pretrained: Option<&EmbeddingTable>,
) -> Result<StackedRun, CalibrationError> {
    config.validate()?;
    let mut stacked = stacked_estimates(train_corpus, model_config, config.folds, config.seed, pretrained)?;
    let (model, report) = train(train_corpus, model_config, pretrained)?;
    for (id, e) in estimates_from(&model, test_corpus)? {
        stacked.provenance.insert(id.clone(), Provenance::Full);
        stacked.estimates.insert(id, e);
    }
    let mut all = train_corpus.manifestos.clone();
    all.extend(test_corpus.manifestos.iter().cloned());
    let combined = Corpus::new(all, train_corpus.scheme.clone());
    let targets: BTreeSet<String> = test_corpus.manifestos.iter().map(|m| m.id.clone()).collect();
    let database = build_database(&combined, &stacked.estimates, &targets, graph, config)?;
    let calibration = calibrate(&database, &effective_program(program, config), &config.solver)?;
    Ok(StackedRun { model, report, stacked, database, calibration })
}
