use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use serde::Serialize;

use polyscale::calibration::{
    default_program, effective_program, lw_right_left_ratio, run_stacked, CalibrationError, PartyGraph,
};
use polyscale::corpus::{load_corpus_with, save_corpus, Corpus, CorpusError, LabelScheme};
use polyscale::embedalign::{
    align_with, build_multilingual, load_embeddings, save_embeddings, AlignError, AlignOptions, BilingualLexicon,
    EmbeddingTable,
};
use polyscale::eval::{
    make_split, run_experiment, tune as tune_weights, write_report, EvalError, ExperimentInputs, ExperimentReport,
    RunManifest,
};
use polyscale::hiermodel::{load_checkpoint, predict as predict_corpus, save_checkpoint, train as train_model, ModelError};
use polyscale::pslengine::{ground as ground_program, map_inference, parse_program, rule_counts, Database, Program, PslError};
use polyscale::synth::generate;

use crate::config::CliConfig;
use crate::CliError;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        match e {
            AlignError::TooFewPairs(_) | AlignError::Degenerate => CliError::Stage { stage: "align", message: e.to_string() },
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Diff(_) => CliError::Stage { stage: "train", message: e.to_string() },
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PslError> for CliError {
    fn from(e: PslError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::Model(m) => m.into(),
            CalibrationError::NoSupervisedFold(_) => CliError::Stage { stage: "calibrate", message: e.to_string() },
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match &e {
            EvalError::Stage { stage, .. } => CliError::Stage { stage, message: e.to_string() },
            _ if e.is_validation() => CliError::Validation(e.to_string()),
            _ => CliError::Stage { stage: "report", message: e.to_string() },
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Stage { stage: "write", message: format!("{}: {e}", path.display()) }
}

fn create_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    write(path, serde_json::to_vec_pretty(value).expect("serializable"))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn scheme(config: &CliConfig) -> Result<LabelScheme, CliError> {
    match &config.scheme {
        Some(p) => Ok(LabelScheme::load(p)?),
        None => Ok(LabelScheme::cmp_default()),
    }
}

fn corpus(config: &CliConfig, path: &Path) -> Result<Corpus, CliError> {
    Ok(load_corpus_with(path, &scheme(config)?, &config.load_options())?)
}

fn embeddings(path: Option<&Path>) -> Result<Option<EmbeddingTable>, CliError> {
    Ok(path.map(|p| load_embeddings(p, "multi")).transpose()?)
}

fn program(path: Option<&Path>) -> Result<Program, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            parse_program(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
        }
        None => Ok(default_program()),
    }
}

fn database(path: &Path) -> Result<Database, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Database::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn key_value(spec: &str) -> Result<(&str, &Path), CliError> {
    spec.split_once('=')
        .map(|(k, v)| (k, Path::new(v)))
        .ok_or_else(|| CliError::Validation(format!("expected LANG=PATH, got {spec:?}")))
}

#[derive(Serialize)]
struct AlignmentSummary {
    language: String,
    used_pairs: usize,
    dropped_pairs: usize,
    orthogonality_error: f64,
}

pub fn align(
    english: &Path,
    tables: &[String],
    lexicons: &[String],
    mean_center: bool,
    unit_normalize: bool,
    out: &Path,
) -> Result<(), CliError> {
    let en = load_embeddings(english, "en")?;
    let lex: BTreeMap<&str, &Path> = lexicons.iter().map(|s| key_value(s)).collect::<Result<_, _>>()?;
    let options = AlignOptions { mean_center, unit_normalize };
    let mut all = vec![en.clone()];
    let mut projections = BTreeMap::new();
    let mut summary = Vec::new();
    for spec in tables {
        let (lang, path) = key_value(spec)?;
        let table = load_embeddings(path, lang)?;
        let lexicon = BilingualLexicon::load(lex.get(lang).ok_or_else(|| CliError::Validation(format!("no lexicon for {lang}")))?)?;
        let a = align_with(&table, &en, &lexicon, options)?;
        summary.push(AlignmentSummary {
            language: lang.into(),
            used_pairs: a.used_pairs,
            dropped_pairs: a.dropped_pairs,
            orthogonality_error: a.projection.orthogonality_error(),
        });
        projections.insert(lang.to_string(), a.projection);
        all.push(table);
    }
    let multi = build_multilingual(&all, &projections)?;
    create_dir(out)?;
    save_embeddings(&multi, &out.join("embeddings.txt"))?;
    write_json(&out.join("alignment.json"), &summary)
}

pub fn train(config: &CliConfig, corpus_path: &Path, emb: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let c = corpus(config, corpus_path)?;
    let pretrained = embeddings(emb)?;
    let (model, report) = train_model(&c, &config.model, pretrained.as_ref())?;
    create_dir(out)?;
    save_checkpoint(&model, &out.join("model.pscl"))?;
    write_json(&out.join("train_report.json"), &report)
}

#[derive(Serialize)]
struct DocumentPrediction<'a> {
    id: &'a str,
    r_hat: f64,
    pos: f64,
    lw_right_left_ratio: f64,
}

#[derive(Serialize)]
struct SentencePredictionRow<'a> {
    id: &'a str,
    position: usize,
    code: &'a str,
    polarity: String,
}

pub fn predict(config: &CliConfig, model_path: &Path, corpus_path: &Path, out: &Path) -> Result<(), CliError> {
    let c = corpus(config, corpus_path)?;
    let model = load_checkpoint(model_path, &c.scheme)?;
    let preds = predict_corpus(&model, &c)?;
    let mut docs = Vec::new();
    let mut sentences = Vec::new();
    for (m, p) in c.manifestos.iter().zip(&preds) {
        let ratio = lw_right_left_ratio(&p.predicted_polarities())?;
        docs.push(DocumentPrediction { id: &m.id, r_hat: p.r_hat, pos: p.pos(), lw_right_left_ratio: ratio });
        for (i, (code, pol)) in p.predicted_codes(&c.scheme).into_iter().zip(p.predicted_polarities()).enumerate() {
            sentences.push(SentencePredictionRow { id: &m.id, position: i + 1, code, polarity: pol.to_string() });
        }
    }
    create_dir(out)?;
    write_csv(&out.join("documents.csv"), &docs)?;
    write_csv(&out.join("sentences.csv"), &sentences)
}

#[derive(Serialize)]
struct GroundSummary {
    free_atoms: usize,
    ground_rules: usize,
    pruned: usize,
    constant_energy: f64,
    /// Ground rules per template rule (1-based).
    per_rule: BTreeMap<usize, usize>,
}

pub fn ground(program_path: Option<&Path>, db_path: &Path, out: &Path) -> Result<(), CliError> {
    let p = program(program_path)?;
    let net = ground_program(&p, &database(db_path)?)?;
    let summary = GroundSummary {
        free_atoms: net.num_free(),
        ground_rules: net.rules.len(),
        pruned: net.pruned,
        constant_energy: net.constant_energy,
        per_rule: rule_counts(&net).into_iter().map(|(k, v)| (k + 1, v)).collect(),
    };
    let mut listing = String::new();
    for r in &net.rules {
        let lit = |l: &polyscale::pslengine::GroundLiteral| {
            format!("{}{}", if l.negated { "!" } else { "" }, net.atoms[l.atom])
        };
        let body: Vec<String> = r.body.iter().map(lit).collect();
        listing.push_str(&format!("{}: {} -> {} ^{}\n", r.weight, body.join(" & "), lit(&r.head), r.exponent));
    }
    create_dir(out)?;
    write_json(&out.join("ground.json"), &summary)?;
    write(&out.join("ground_rules.txt"), listing)
}

#[derive(Serialize)]
struct InferSummary {
    energy: f64,
    iterations: usize,
    converged: bool,
}

pub fn infer(config: &CliConfig, program_path: Option<&Path>, db_path: &Path, out: &Path) -> Result<(), CliError> {
    let p = program(program_path)?;
    let net = ground_program(&p, &database(db_path)?)?;
    let result = map_inference(&net, &config.calibration.solver);
    let mut values = String::new();
    for (atom, v) in net.assignment_map(&result.values) {
        if net.free_index(&atom.predicate, &atom.args.iter().map(String::as_str).collect::<Vec<_>>()).is_some() {
            values.push_str(&format!("{atom} = {v}\n"));
        }
    }
    create_dir(out)?;
    write(&out.join("map.txt"), values)?;
    write_json(&out.join("infer.json"), &InferSummary { energy: result.energy, iterations: result.iterations, converged: result.converged })
}

#[derive(Serialize)]
struct CalibratedRow<'a> {
    id: &'a str,
    r_hat: f64,
    pos: f64,
    calibrated_rile: f64,
}

pub fn calibrate(
    config: &CliConfig,
    corpus_path: &Path,
    graph_path: &Path,
    emb: Option<&Path>,
    program_path: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let c = corpus(config, corpus_path)?;
    let graph = PartyGraph::load(graph_path)?;
    let pretrained = embeddings(emb)?;
    let p = program(program_path)?;
    let split = make_split(&c, &config.calibration_split, 0)?;
    let mut train_idx: Vec<usize> = split.train.iter().chain(&split.dev).copied().collect();
    train_idx.sort_unstable();
    let (train_c, test_c) = (c.subset(&train_idx), c.subset(&split.test));
    info!("calibrating {} manifestos against {} training manifestos", test_c.len(), train_c.len());
    let run = run_stacked(&train_c, &test_c, &config.model, &graph, &p, &config.calibration, pretrained.as_ref())?;
    let rows: Vec<CalibratedRow> = test_c
        .manifestos
        .iter()
        .map(|m| CalibratedRow {
            id: &m.id,
            r_hat: run.stacked.estimates[&m.id].r_hat,
            pos: run.calibration.pos[&m.id],
            calibrated_rile: run.calibration.rile[&m.id],
        })
        .collect();
    create_dir(out)?;
    write_csv(&out.join("calibrated.csv"), &rows)?;
    write(&out.join("database.txt"), run.database.to_string())?;
    write(&out.join("program.psl"), effective_program(&p, &config.calibration).to_string())?;
    save_checkpoint(&run.model, &out.join("model.pscl"))?;
    #[derive(Serialize)]
    struct Summary {
        energy: f64,
        iterations: usize,
        converged: bool,
        ground_rules: usize,
    }
    let cal = &run.calibration;
    write_json(
        &out.join("calibration.json"),
        &Summary { energy: cal.energy, iterations: cal.iterations, converged: cal.converged, ground_rules: cal.ground_rules },
    )
}

pub fn evaluate(
    config: &CliConfig,
    corpus_path: &Path,
    graph_path: &Path,
    emb: Option<&Path>,
    program_path: Option<&Path>,
    gnuplot: bool,
    out: &Path,
) -> Result<(), CliError> {
    let c = corpus(config, corpus_path)?;
    let graph = PartyGraph::load(graph_path)?;
    let pretrained = embeddings(emb)?;
    let p = program(program_path)?;
    let inputs = ExperimentInputs { corpus: &c, graph: &graph, program: &p, pretrained: pretrained.as_ref() };
    let report = run_experiment(&inputs, &config.experiment())?;
    write_report(&report, out, gnuplot)?;
    print_report(&report);
    Ok(())
}

fn print_report(r: &ExperimentReport) {
    println!("sentence micro-F");
    for row in &r.sentence_f {
        println!("  {:<8} {:.3} (sd {:.3}, {} sentences)", row.language, row.micro_f, row.std, row.sentences);
    }
    println!("document scores");
    for row in &r.documents {
        println!("  {:<22} r {:.3}  rho {:.3}", row.method, row.pearson, row.spearman);
    }
    println!("calibration against {}", r.reference);
    println!("  {:<22} rho {:.3}  r {:.3}", "uncalibrated", r.uncalibrated.spearman, r.uncalibrated.pearson);
    for row in &r.calibration {
        println!("  {:<22} rho {:.3}  r {:.3}", row.features, row.spearman, row.pearson);
    }
}

pub fn report(dir: &Path) -> Result<(), CliError> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read(&path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    };
    let summary: ExperimentReport =
        serde_json::from_slice(&read("summary.json")?).map_err(|e| CliError::Validation(format!("summary.json: {e}")))?;
    let manifest: RunManifest =
        serde_json::from_slice(&read("manifest.json")?).map_err(|e| CliError::Validation(format!("manifest.json: {e}")))?;
    for (name, expected) in &manifest.outputs {
        let actual = polyscale_hash(&read(name)?);
        if &actual != expected {
            return Err(CliError::Validation(format!("{name} does not match its recorded hash")));
        }
    }
    print_report(&summary);
    println!("config {}  inputs {}", &manifest.config_hash[..12], &manifest.input_hash[..12]);
    Ok(())
}

fn polyscale_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(bytes))
}

pub fn tune(config: &CliConfig, corpus_path: &Path, emb: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let c = corpus(config, corpus_path)?;
    let pretrained = embeddings(emb)?;
    let report = tune_weights(&c, &config.model, &config.tuning, &config.sentence_split, &config.exclude_codes, pretrained.as_ref())?;
    create_dir(out)?;
    write_csv(&out.join("tuning.csv"), &report.steps)?;
    let tuned = CliConfig { model: report.best.clone(), ..config.clone() };
    write(&out.join("tuned.toml"), toml::to_string(&tuned).map_err(|e| io_err(&out.join("tuned.toml"), e))?)?;
    println!("alpha {}  gamma {}  beta {}", report.best.alpha, report.best.gamma, report.best.beta);
    Ok(())
}

pub fn synth(config: &CliConfig, out: &Path) -> Result<(), CliError> {
    let data = generate(&config.synth, &scheme(config)?);
    create_dir(out)?;
    save_corpus(&data.corpus, &out.join("corpus.jsonl"))?;
    write(&out.join("coalitions.tsv"), data.graph.to_tsv())?;
    let planted: String = data.planted.iter().map(|(id, v)| format!("{id}\t{v}\n")).collect();
    write(&out.join("planted.tsv"), planted)?;
    let run_config = CliConfig { languages: Some(config.synth.languages.clone()), ..config.clone() };
    write(&out.join("config.toml"), toml::to_string(&run_config).map_err(|e| io_err(&out.join("config.toml"), e))?)?;
    Ok(())
}
