use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{calibrate, effective_program, run_stacked, CalibrationConfig, FeatureGroup, PartyGraph};
use crate::corpus::{compute_rile, write_corpus, Corpus};
use crate::embedalign::{write_embeddings, EmbeddingTable};
use crate::hiermodel::{predict, train, HierModel, ModelConfig};
use crate::pslengine::Program;

use super::metrics::{pearson, pooled_counts, spearman, PooledCounts};
use super::split::{make_split, SplitKind, SplitSpec};
use super::{stage, EvalError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub calibration: CalibrationConfig,
    /// Repeated split for sentence and document scores.
    pub sentence_split: SplitSpec,
    /// Chronological split for the calibration ablation.
    pub calibration_split: SplitSpec,
    /// Codes left out of micro-F.
    pub exclude_codes: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let temporal = SplitSpec::temporal(SplitSpec::default().cutoff_date);
        Self {
            model: ModelConfig::default(),
            calibration: CalibrationConfig::default(),
            sentence_split: SplitSpec::default(),
            calibration_split: temporal,
            exclude_codes: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.model.validate().map_err(stage("config"))?;
        self.calibration.validate().map_err(stage("config"))?;
        self.sentence_split.validate()?;
        self.calibration_split.validate()?;
        if self.sentence_split.kind != SplitKind::RandomStratified {
            return Err(EvalError::Config("sentence_split must be random_stratified".into()));
        }
        if self.calibration_split.kind != SplitKind::Temporal {
            return Err(EvalError::Config("calibration_split must be temporal".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub struct ExperimentInputs<'a> {
    pub corpus: &'a Corpus,
    pub graph: &'a PartyGraph,
    pub program: &'a Program,
    pub pretrained: Option<&'a EmbeddingTable>,
}

impl ExperimentInputs<'_> {
    /// Content hash over the corpus, graph, program and embeddings.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let mut buf = Vec::new();
        write_corpus(self.corpus, &mut buf).expect("write to memory");
        h.update(&buf);
        h.update(self.corpus.scheme.to_tsv());
        h.update(self.graph.to_tsv());
        h.update(self.program.to_string());
        if let Some(t) = self.pretrained {
            buf.clear();
            write_embeddings(t, &mut buf).expect("write to memory");
            h.update(&buf);
        }
        format!("{:x}", h.finalize())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Scores of one trained model on a held-out corpus.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HeldOutScores {
    /// Pooled sentence counts per language, over fully coded documents.
    pub counts: BTreeMap<String, (usize, usize, usize)>,
    pub sentences: BTreeMap<String, usize>,
    pub micro_f: Option<f64>,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// Correlations of the RILE recomputed from predicted sentence codes.
    pub code_pearson: Option<f64>,
    pub code_spearman: Option<f64>,
    pub documents: usize,
}

pub fn score_model(model: &HierModel, corpus: &Corpus, exclude: &[String]) -> Result<HeldOutScores, EvalError> {
    let preds = predict(model, corpus).map_err(stage("predict"))?;
    let exclude: Vec<&str> = exclude.iter().map(String::as_str).collect();
    let mut out = HeldOutScores::default();
    let mut total = PooledCounts::default();
    let (mut r_hat, mut code_rile, mut gold) = (Vec::new(), Vec::new(), Vec::new());
    for (m, p) in corpus.manifestos.iter().zip(&preds) {
        let predicted = p.predicted_codes(&corpus.scheme);
        if let Some(codes) = m.gold_codes() {
            let c = pooled_counts(&predicted, &codes, &exclude)?;
            total.add(c);
            let e = out.counts.entry(m.language.clone()).or_default();
            *e = (e.0 + c.tp, e.1 + c.fp, e.2 + c.fn_);
            *out.sentences.entry(m.language.clone()).or_default() += codes.len();
        }
        if let Some(g) = m.rile_gold {
            r_hat.push(p.r_hat);
            code_rile.push(compute_rile(&predicted, &corpus.scheme).map_err(stage("predict"))?);
            gold.push(g);
        }
    }
    out.micro_f = total.f().ok();
    out.documents = gold.len();
    out.pearson = pearson(&r_hat, &gold).ok();
    out.spearman = spearman(&r_hat, &gold).ok();
    out.code_pearson = pearson(&code_rile, &gold).ok();
    out.code_spearman = spearman(&code_rile, &gold).ok();
    Ok(out)
}

/// Undefined aggregates (no repeat produced a value) are stored as null.
mod nan_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: String,
    #[serde(with = "nan_null")]
    pub micro_f: f64,
    #[serde(with = "nan_null")]
    pub std: f64,
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRow {
    pub method: String,
    #[serde(with = "nan_null")]
    pub pearson: f64,
    #[serde(with = "nan_null")]
    pub pearson_std: f64,
    #[serde(with = "nan_null")]
    pub spearman: f64,
    #[serde(with = "nan_null")]
    pub spearman_std: f64,
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub features: String,
    pub spearman: f64,
    pub pearson: f64,
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model_seed: u64,
    pub split_seed: u64,
    pub calibration_seed: u64,
    pub repeats: usize,
    pub config_hash: String,
    pub input_hash: String,
    /// Output file name to SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub sentence_f: Vec<LanguageRow>,
    pub documents: Vec<DocumentRow>,
    pub calibration: Vec<CalibrationRow>,
    /// Stage-one scores on the calibration test set, before calibration.
    pub uncalibrated: CalibrationRow,
    /// What calibrated scores are compared against: `ches` or `rile`.
    pub reference: String,
    pub manifest: RunManifest,
}

/// The incremental feature sets of the calibration ablation.
pub fn ablation_steps() -> Vec<Vec<FeatureGroup>> {
    (1..=FeatureGroup::ALL.len()).map(|k| FeatureGroup::ALL[..k].to_vec()).collect()
}

pub fn feature_label(groups: &[FeatureGroup]) -> String {
    groups.iter().map(|g| g.name()).collect::<Vec<_>>().join("+")
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Repeated random splits: train, predict, score. Repeats run in parallel
/// and are reduced in repeat order.
pub fn sentence_and_document_tables(
    inputs: &ExperimentInputs,
    config: &ExperimentConfig,
) -> Result<(Vec<LanguageRow>, Vec<DocumentRow>), EvalError> {
    let spec = &config.sentence_split;
    let runs: Vec<HeldOutScores> = (0..spec.repeats)
        .into_par_iter()
        .map(|r| {
            let split = make_split(inputs.corpus, spec, r)?;
            let train_c = inputs.corpus.subset(&split.train);
            let (model, _) = train(&train_c, &config.model, inputs.pretrained).map_err(stage("train"))?;
            info!("repeat {r}: trained on {} documents", split.train.len());
            score_model(&model, &inputs.corpus.subset(&split.test), &config.exclude_codes)
        })
        .collect::<Result<_, EvalError>>()?;

    let mut languages: Vec<String> = runs.iter().flat_map(|s| s.counts.keys().cloned()).collect();
    languages.sort();
    languages.dedup();
    let mut rows = Vec::new();
    for lang in &languages {
        let fs: Vec<f64> = runs
            .iter()
            .filter_map(|s| s.counts.get(lang))
            .filter_map(|&(tp, fp, fn_)| PooledCounts { tp, fp, fn_ }.f().ok())
            .collect();
        let (m, sd) = mean_std(&fs);
        let sentences = runs.iter().filter_map(|s| s.sentences.get(lang)).sum();
        rows.push(LanguageRow { language: lang.clone(), micro_f: m, std: sd, sentences });
    }
    let all: Vec<f64> = runs.iter().filter_map(|s| s.micro_f).collect();
    let (m, sd) = mean_std(&all);
    rows.push(LanguageRow { language: "all".into(), micro_f: m, std: sd, sentences: rows.iter().map(|r| r.sentences).sum() });

    let doc_row = |method: &str, p: fn(&HeldOutScores) -> Option<f64>, s: fn(&HeldOutScores) -> Option<f64>| {
        let (pm, psd) = mean_std(&runs.iter().filter_map(p).collect::<Vec<_>>());
        let (sm, ssd) = mean_std(&runs.iter().filter_map(s).collect::<Vec<_>>());
        DocumentRow {
            method: method.into(),
            pearson: pm,
            pearson_std: psd,
            spearman: sm,
            spearman_std: ssd,
            documents: runs.iter().map(|r| r.documents).sum(),
        }
    };
    let docs = vec![
        doc_row("joint_struc", |s| s.pearson, |s| s.spearman),
        doc_row("predicted_codes_rile", |s| s.code_pearson, |s| s.code_spearman),
    ];
    Ok((rows, docs))
}

/// Stacked two-stage run on the chronological split, then one calibration
/// per incremental feature set.
pub fn calibration_table(
    inputs: &ExperimentInputs,
    config: &ExperimentConfig,
) -> Result<(Vec<CalibrationRow>, CalibrationRow, String), EvalError> {
    let split = make_split(inputs.corpus, &config.calibration_split, 0)?;
    // The dev part is only for tuning; the second stage trains on all of it.
    let mut train_idx = split.train.clone();
    train_idx.extend(&split.dev);
    train_idx.sort_unstable();
    let train_c = inputs.corpus.subset(&train_idx);
    let test_c = inputs.corpus.subset(&split.test);

    let with_ches: Vec<&str> = test_c.manifestos.iter().filter(|m| m.ches_gold.is_some()).map(|m| m.id.as_str()).collect();
    let (reference, refs): (&str, BTreeMap<&str, f64>) = if !with_ches.is_empty() {
        ("ches", test_c.manifestos.iter().filter_map(|m| m.ches_gold.map(|v| (m.id.as_str(), v))).collect())
    } else {
        warn!("no test manifesto has an expert score; comparing calibrated positions with RILE");
        ("rile", test_c.manifestos.iter().filter_map(|m| m.rile_gold.map(|v| (m.id.as_str(), v))).collect())
    };
    if refs.len() < 2 {
        return Err(EvalError::Degenerate("fewer than two test manifestos carry a reference score".into()));
    }

    let run = run_stacked(&train_c, &test_c, &config.model, inputs.graph, inputs.program, &config.calibration, inputs.pretrained)
        .map_err(stage("calibrate"))?;
    let gold: Vec<f64> = refs.values().copied().collect();
    let row = |features: String, scores: &BTreeMap<String, f64>| -> Result<CalibrationRow, EvalError> {
        let xs: Vec<f64> = refs.keys().map(|id| scores[*id]).collect();
        Ok(CalibrationRow { features, spearman: spearman(&xs, &gold)?, pearson: pearson(&xs, &gold)?, documents: xs.len() })
    };
    let uncal: BTreeMap<String, f64> = refs.keys().map(|id| (id.to_string(), run.stacked.estimates[*id].r_hat)).collect();
    let uncalibrated = row("uncalibrated".into(), &uncal)?;

    let mut rows = Vec::new();
    for groups in ablation_steps() {
        let c = CalibrationConfig { features: groups.clone(), ..config.calibration.clone() };
        let cal = calibrate(&run.database, &effective_program(inputs.program, &c), &c.solver).map_err(stage("calibrate"))?;
        rows.push(row(feature_label(&groups), &cal.rile)?);
    }
    Ok((rows, uncalibrated, reference.to_string()))
}

pub fn run_experiment(inputs: &ExperimentInputs, config: &ExperimentConfig) -> Result<ExperimentReport, EvalError> {
    config.validate()?;
    let (sentence_f, documents) = sentence_and_document_tables(inputs, config)?;
    let (calibration, uncalibrated, reference) = calibration_table(inputs, config)?;
    Ok(ExperimentReport {
        sentence_f,
        documents,
        calibration,
        uncalibrated,
        reference,
        manifest: RunManifest {
            model_seed: config.model.seed,
            split_seed: config.sentence_split.seed,
            calibration_seed: config.calibration.seed,
            repeats: config.sentence_split.repeats,
            config_hash: config.hash(),
            input_hash: inputs.hash(),
            outputs: BTreeMap::new(),
        },
    })
}

pub const SENTENCE_TABLE: &str = "sentence_f.csv";
pub const DOCUMENT_TABLE: &str = "document_scores.csv";
pub const CALIBRATION_TABLE: &str = "calibration_ablation.csv";

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(stage("report"))?;
    }
    w.into_inner().map_err(|e| EvalError::Stage { stage: "report", source: e.to_string().into() })
}

fn gnuplot_script(csv: &str, column: &str, ylabel: &str) -> String {
    let png = csv.replace(".csv", ".png");
    format!(
        "set datafile separator ','\nset terminal pngcairo size 800,500\nset output '{png}'\n\
         set style data histograms\nset style fill solid 0.6\nset key off\nset ylabel '{ylabel}'\n\
         plot '{csv}' using '{column}':xtic(1)\n"
    )
}

/// Writes the three tables, `summary.json` and `manifest.json` (plus
/// gnuplot scripts when asked). Returns the written paths.
pub fn write_report(report: &ExperimentReport, dir: &Path, gnuplot: bool) -> Result<Vec<PathBuf>, EvalError> {
    std::fs::create_dir_all(dir).map_err(|source| EvalError::Io { path: dir.display().to_string(), source })?;
    let mut files: Vec<(String, Vec<u8>)> = vec![
        (SENTENCE_TABLE.into(), csv_bytes(&report.sentence_f)?),
        (DOCUMENT_TABLE.into(), csv_bytes(&report.documents)?),
        (CALIBRATION_TABLE.into(), csv_bytes(&report.calibration)?),
    ];
    if gnuplot {
        files.push(("sentence_f.gp".into(), gnuplot_script(SENTENCE_TABLE, "micro_f", "micro F").into_bytes()));
        files.push(("document_scores.gp".into(), gnuplot_script(DOCUMENT_TABLE, "pearson", "Pearson r").into_bytes()));
        files.push(("calibration_ablation.gp".into(), gnuplot_script(CALIBRATION_TABLE, "spearman", "Spearman rho").into_bytes()));
    }
    let mut manifest = report.manifest.clone();
    for (name, bytes) in &files {
        manifest.outputs.insert(name.clone(), hex_digest(bytes));
    }
    let summary = ExperimentReport { manifest: manifest.clone(), ..report.clone() };
    files.push(("summary.json".into(), serde_json::to_vec_pretty(&summary).map_err(stage("report"))?));
    files.push(("manifest.json".into(), serde_json::to_vec_pretty(&manifest).map_err(stage("report"))?));

    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
        written.push(path);
    }
    Ok(written)
}
