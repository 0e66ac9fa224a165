use std::collections::BTreeMap;

use chrono::NaiveDate;
use proptest::prelude::*;

use super::*;
use crate::calibration::default_program;
use crate::corpus::LabelScheme;
use crate::hiermodel::ModelConfig;
use crate::synth::{generate, SynthConfig};

fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn micro_f_examples() {
    let gold = ["401", "402", "504", "501", "000"];
    assert_eq!(micro_f(&gold, &gold, &[]).unwrap(), 1.0);
    let wrong = ["402", "401", "501", "504", "401"];
    assert_eq!(micro_f(&wrong, &gold, &[]).unwrap(), 0.0);
    let three = ["401", "402", "504", "504", "401"];
    // pooled: tp 3, fp 2, fn 2
    assert!(approx(micro_f(&three, &gold, &[]).unwrap(), 0.6));
    assert!(matches!(micro_f(&three[..4], &gold, &[]), Err(EvalError::LengthMismatch { left: 4, right: 5 })));
    assert!(matches!(micro_f::<&str>(&[], &[], &[]), Err(EvalError::Empty)));
}

#[test]
fn micro_f_excludes_a_class() {
    let gold = ["000", "000", "401", "402"];
    let pred = ["000", "401", "401", "000"];
    // kept gold items: 401 (hit), 402 (missed); stray 401 prediction on a 000 item is a false positive
    let c = pooled_counts(&pred, &gold, &["000"]).unwrap();
    assert_eq!(c, PooledCounts { tp: 1, fp: 1, fn_: 1 });
    assert!(approx(micro_f(&pred, &gold, &["000"]).unwrap(), 0.5));
}

#[test]
fn correlation_examples() {
    let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    assert!(approx(pearson(&x, &y).unwrap(), 1.0));
    assert!(approx(spearman(&x, &y).unwrap(), 1.0));
    let cube: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
    assert!(approx(spearman(&x, &cube).unwrap(), -1.0));
    assert!(pearson(&x, &cube).unwrap().abs() < 1.0);
    assert!(matches!(pearson(&[1.0], &[2.0]), Err(EvalError::Degenerate(_))));
    assert!(matches!(pearson(&[1.0, 1.0], &[2.0, 3.0]), Err(EvalError::Degenerate(_))));
    assert!(matches!(spearman(&[1.0, 2.0], &[2.0]), Err(EvalError::LengthMismatch { .. })));
}

/// Rank = number of smaller values plus the mean position among equals.
fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn spearman_with_ties_matches_brute_force() {
    let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
    let y = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0];
    assert_eq!(average_ranks(&x), brute_ranks(&x));
    let oracle = brute_pearson(&brute_ranks(&x), &brute_ranks(&y));
    assert!((spearman(&x, &y).unwrap() - oracle).abs() < 1e-12);
}

proptest! {
    #[test]
    fn micro_f_is_accuracy(pairs in proptest::collection::vec((0u8..6, 0u8..6), 1..60)) {
        let pred: Vec<String> = pairs.iter().map(|p| p.0.to_string()).collect();
        let gold: Vec<String> = pairs.iter().map(|p| p.1.to_string()).collect();
        let acc = pairs.iter().filter(|p| p.0 == p.1).count() as f64 / pairs.len() as f64;
        prop_assert!((micro_f(&pred, &gold, &[]).unwrap() - acc).abs() < 1e-12);
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        pts in proptest::collection::vec((-5i32..5, -5i32..5), 3..30),
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1 as f64).collect();
        if let Ok(rho) = spearman(&x, &y) {
            let tx: Vec<f64> = x.iter().map(|v| v.exp() * 3.0 - 1.0).collect();
            let ty: Vec<f64> = y.iter().map(|v| v * v * v).collect();
            prop_assert!((spearman(&tx, &ty).unwrap() - rho).abs() < 1e-9);
            let oracle = brute_pearson(&brute_ranks(&x), &brute_ranks(&y));
            prop_assert!((rho - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn splits_partition_the_corpus(seed in 0u64..1000, repeat in 0usize..5) {
        let corpus = small_synth().corpus;
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let s = make_split(&corpus, &spec, repeat).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.dev).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..corpus.len()).collect::<Vec<_>>());
    }
}

fn small_synth() -> crate::synth::SynthData {
    let config = SynthConfig {
        countries: 3,
        parties_per_country: 3,
        elections: 4,
        min_sentences: 4,
        max_sentences: 6,
        seed: 2,
        ..SynthConfig::default()
    };
    generate(&config, &LabelScheme::cmp_default())
}

#[test]
fn stratified_split_keeps_country_shares() {
    let data = generate(&SynthConfig::default(), &LabelScheme::cmp_default());
    let corpus = &data.corpus;
    let spec = SplitSpec::default();
    let s = make_split(corpus, &spec, 0).unwrap();
    let mut per_country: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (i, m) in corpus.manifestos.iter().enumerate() {
        let e = per_country.entry(m.country.as_str()).or_default();
        e.0 += 1;
        if s.test.contains(&i) {
            e.1 += 1;
        }
    }
    for (country, (n, t)) in per_country {
        let expected = spec.test_fraction * n as f64;
        assert!((t as f64 - expected).abs() <= 1.0, "{country}: {t} of {n}");
    }
    assert_eq!(s.dev.len(), ((s.train.len() + s.dev.len()) as f64 * 0.1).round() as usize);
    assert_eq!(make_split(corpus, &spec, 0).unwrap(), s);
    assert_ne!(make_split(corpus, &spec, 1).unwrap(), s);
}

#[test]
fn temporal_split_uses_cutoff() {
    let data = small_synth();
    let cutoff = NaiveDate::from_ymd_opt(1999, 1, 1).unwrap();
    let s = make_split(&data.corpus, &SplitSpec::temporal(cutoff), 0).unwrap();
    for &i in s.train.iter().chain(&s.dev) {
        assert!(data.corpus.manifestos[i].election_date < cutoff);
    }
    for &i in &s.test {
        assert!(data.corpus.manifestos[i].election_date >= cutoff);
    }
    assert_eq!(s.test.len(), 9);
    let late = NaiveDate::from_ymd_opt(2100, 1, 1).unwrap();
    assert!(matches!(make_split(&data.corpus, &SplitSpec::temporal(late), 0), Err(EvalError::EmptyPartition(_))));
}

#[test]
fn split_spec_validation() {
    assert!(SplitSpec { test_fraction: 0.0, ..Default::default() }.validate().is_err());
    assert!(SplitSpec { test_fraction: 1.0, ..Default::default() }.validate().is_err());
    assert!(SplitSpec { repeats: 0, ..Default::default() }.validate().is_err());
    let s: SplitSpec = toml::from_str("kind = \"temporal\"\ncutoff_date = \"2010-05-01\"").unwrap();
    assert_eq!(s.kind, SplitKind::Temporal);
    assert_eq!(s.cutoff_date, NaiveDate::from_ymd_opt(2010, 5, 1).unwrap());
}

fn quick_experiment() -> ExperimentConfig {
    let cutoff = NaiveDate::from_ymd_opt(1999, 1, 1).unwrap();
    ExperimentConfig {
        model: ModelConfig { embedding_dim: 4, word_hidden: 3, sentence_hidden: 3, epochs: 1, seed: 3, ..ModelConfig::default() },
        calibration: crate::calibration::CalibrationConfig { folds: 2, ..Default::default() },
        sentence_split: SplitSpec { repeats: 2, ..SplitSpec::default() },
        calibration_split: SplitSpec::temporal(cutoff),
        exclude_codes: Vec::new(),
    }
}

#[test]
fn synthetic_experiment_writes_all_tables() {
    let data = small_synth();
    let program = default_program();
    let inputs = ExperimentInputs { corpus: &data.corpus, graph: &data.graph, program: &program, pretrained: None };
    let config = quick_experiment();
    let report = run_experiment(&inputs, &config).unwrap();

    assert_eq!(report.sentence_f.last().unwrap().language, "all");
    assert_eq!(report.sentence_f.len(), 4);
    assert_eq!(report.documents.len(), 2);
    let labels: Vec<&str> = report.calibration.iter().map(|r| r.features.as_str()).collect();
    assert_eq!(labels, ["coal", "coal+esim", "coal+esim+ploc", "coal+esim+ploc+temp"]);
    assert_eq!(report.reference, "ches");
    assert_eq!(report.manifest.config_hash, config.hash());

    let dir = tempfile::tempdir().unwrap();
    let written = write_report(&report, dir.path(), true).unwrap();
    assert_eq!(written.len(), 8);
    let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();
    assert!(read(CALIBRATION_TABLE).starts_with("features,spearman,pearson,documents\n"));
    assert_eq!(read(CALIBRATION_TABLE).lines().count(), 5);
    let manifest: RunManifest = serde_json::from_str(&read("manifest.json")).unwrap();
    assert_eq!(manifest.outputs.len(), 6);

    // same inputs and config reproduce identical tables
    let again = run_experiment(&inputs, &config).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    write_report(&again, dir2.path(), false).unwrap();
    for name in [SENTENCE_TABLE, DOCUMENT_TABLE, CALIBRATION_TABLE, "manifest.json"] {
        let other = std::fs::read_to_string(dir2.path().join(name)).unwrap();
        if name == "manifest.json" {
            let m: RunManifest = serde_json::from_str(&other).unwrap();
            assert_eq!(m.outputs[SENTENCE_TABLE], manifest.outputs[SENTENCE_TABLE]);
        } else {
            assert_eq!(other, read(name), "{name}");
        }
    }
}

#[test]
fn experiment_rejects_bad_configs() {
    let data = small_synth();
    let program = default_program();
    let inputs = ExperimentInputs { corpus: &data.corpus, graph: &data.graph, program: &program, pretrained: None };
    let mut config = quick_experiment();
    config.sentence_split.kind = SplitKind::Temporal;
    let err = run_experiment(&inputs, &config).unwrap_err();
    assert!(err.is_validation(), "{err}");
    let mut config = quick_experiment();
    config.model.alpha = 2.0;
    assert!(run_experiment(&inputs, &config).is_err());
}

#[test]
fn config_files() {
    let c: ExperimentConfig = toml::from_str(
        "exclude_codes = [\"000\"]\n[model]\nepochs = 2\n[sentence_split]\nrepeats = 3\n[calibration]\nfolds = 4\n",
    )
    .unwrap();
    assert_eq!(c.model.epochs, 2);
    assert_eq!(c.sentence_split.repeats, 3);
    assert_eq!(c.calibration.folds, 4);
    assert_eq!(c.calibration_split.kind, SplitKind::Temporal);
    assert!(c.validate().is_ok());
    assert_ne!(c.hash(), ExperimentConfig::default().hash());
    let back: ExperimentConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    assert!(toml::from_str::<ExperimentConfig>("[model]\nunknown = 1\n").is_err());
}

#[test]
fn tuning_walks_the_grid_in_order() {
    let data = small_synth();
    let grid = TuningGrid { alpha: vec![0.3, 0.7], gamma: vec![0.0, 0.7], beta: vec![0.1] };
    let base = quick_experiment().model;
    let spec = SplitSpec { dev_fraction: 0.2, ..SplitSpec::default() };
    let report = tune(&data.corpus, &base, &grid, &spec, &[], None).unwrap();
    let order: Vec<&str> = report.steps.iter().map(|s| s.parameter.as_str()).collect();
    assert_eq!(order, ["alpha", "alpha", "gamma", "gamma", "beta"]);
    assert!(grid.alpha.contains(&report.best.alpha));
    assert!(grid.gamma.contains(&report.best.gamma));
    assert_eq!(report.best.beta, 0.1);
    let best_alpha = report.steps[..2].iter().fold(&report.steps[0], |b, s| if s.score > b.score { s } else { b });
    assert_eq!(best_alpha.value, report.best.alpha);
}

#[test]
fn thread_variable_is_validated() {
    // Only the parse path is exercised; the global pool is left alone.
    std::env::set_var(THREADS_VAR, "zero");
    assert!(matches!(configure_threads(), Err(EvalError::Config(_))));
    std::env::remove_var(THREADS_VAR);
    assert_eq!(configure_threads().unwrap(), None);
}
