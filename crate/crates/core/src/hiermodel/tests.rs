use chrono::NaiveDate;

use super::*;
use crate::corpus::{compute_rile, Corpus, LabelScheme, Manifesto, Polarity, Sentence};
use crate::diffcore::{check_gradients, Tape};

fn doc(id: &str, lang: &str, sentences: &[(&str, Option<&str>)], rile: Option<f64>) -> Manifesto {
    Manifesto {
        id: id.into(),
        party_id: format!("party-{id}"),
        country: "XX".into(),
        language: lang.into(),
        election_date: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
        sentences: sentences
            .iter()
            .enumerate()
            .map(|(i, (t, c))| Sentence::new(t.to_string(), c.map(String::from), i + 1))
            .collect(),
        rile_gold: rile,
        ches_gold: None,
    }
}

fn small_config() -> ModelConfig {
    ModelConfig { embedding_dim: 6, word_hidden: 4, sentence_hidden: 4, epochs: 3, seed: 5, ..ModelConfig::default() }
}

fn fixture_corpus() -> Corpus {
    let scheme = LabelScheme::cmp_default();
    let docs = vec![
        doc("a", "en", &[("we cut taxes now", Some("402")), ("free enterprise works", Some("401")), ("build schools", Some("506"))], Some(0.0)),
        doc("b", "en", &[("more welfare for all", Some("504")), ("protect workers", Some("701"))], Some(-1.0)),
        doc("c", "de", &[("steuern senken", None), ("ordnung und recht", None), ("armee stärken", None)], Some(0.6)),
        doc("d", "de", &[("frieden zuerst", Some("106")), ("umwelt schützen", Some("501"))], None),
    ];
    Corpus::new(docs, scheme)
}

fn fresh_model(corpus: &Corpus, config: &ModelConfig) -> HierModel {
    let vocab = Vocabulary::build(&corpus.manifestos, config.vocab_cap);
    HierModel::new(config, &corpus.scheme, vocab, None).unwrap()
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn pred_with(ys: Vec<Vec<f64>>, ps: Vec<Vec<f64>>) -> Prediction {
    let sentences = ys.into_iter().zip(ps).map(|(y, p)| SentencePrediction { y, p, h: vec![0.0; 2] }).collect();
    Prediction { manifesto_id: "t".into(), sentences, v_d: vec![], r_hat: 0.0 }
}

#[test]
fn prediction_invariants() {
    let corpus = fixture_corpus();
    let model = fresh_model(&corpus, &small_config());
    for m in &corpus.manifestos {
        let p = model.encode_document(m).unwrap();
        assert_eq!(p.v_d.len(), 57 + 2 * 4);
        assert_eq!(p.v_d.len(), model.document_dim());
        assert!(p.r_hat > -1.0 && p.r_hat < 1.0);
        for s in &p.sentences {
            assert_eq!(s.y.len(), 57);
            assert!((s.y.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!((s.p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn single_sentence_pooling_is_the_concatenation() {
    let corpus = fixture_corpus();
    let model = fresh_model(&corpus, &small_config());
    let m = doc("s", "en", &[("we cut taxes", None)], None);
    let p = model.encode_document(&m).unwrap();
    let s = &p.sentences[0];
    let concat: Vec<f64> = s.y.iter().chain(&s.h).copied().collect();
    assert_eq!(p.v_d, concat);
}

#[test]
fn three_sentence_pooling_is_the_mean() {
    let corpus = fixture_corpus();
    let model = fresh_model(&corpus, &small_config());
    let p = model.encode_document(&corpus.manifestos[0]).unwrap();
    assert_eq!(p.sentences.len(), 3);
    for j in 0..p.v_d.len() {
        let parts: Vec<f64> =
            p.sentences.iter().map(|s| if j < 57 { s.y[j] } else { s.h[j - 57] }).collect();
        let oracle = (parts[0] + parts[1] + parts[2]) / 3.0;
        assert!((p.v_d[j] - oracle).abs() < 1e-15);
    }
    assert!((model.score(&p.v_d) - p.r_hat).abs() < 1e-12);
}

#[test]
fn pooling_ignores_duplicated_sentence_outputs() {
    let corpus = fixture_corpus();
    let model = fresh_model(&corpus, &small_config());
    let p = model.encode_document(&corpus.manifestos[0]).unwrap();
    let mut doubled = p.sentences.clone();
    doubled.extend(p.sentences.iter().cloned());
    let once = HierModel::pool(&p.sentences);
    let twice = HierModel::pool(&doubled);
    for (a, b) in once.iter().zip(&twice) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!((model.score(&once) - model.score(&twice)).abs() < 1e-15);
}

#[test]
fn empty_inputs_are_errors() {
    let corpus = fixture_corpus();
    let model = fresh_model(&corpus, &small_config());
    let empty = doc("e", "en", &[], Some(0.0));
    assert!(matches!(model.encode_document(&empty), Err(ModelError::EmptyDocument(_))));
    let blank = doc("e", "en", &[("...", None)], Some(0.0));
    assert!(matches!(model.encode_document(&blank), Err(ModelError::EmptySentence { .. })));
}

#[test]
fn sentence_loss_examples() {
    let perfect = pred_with(vec![one_hot(57, 3), one_hot(57, 40)], vec![one_hot(3, 0), one_hot(3, 2)]);
    assert_eq!(loss_sentence(&perfect, &[Some(3), Some(40)]).unwrap(), 0.0);
    assert_eq!(loss_polarity(&perfect, &[Some(Polarity::Left), Some(Polarity::Neutral)]).unwrap(), 0.0);

    let uniform = pred_with(vec![vec![1.0 / 57.0; 57]; 2], vec![vec![1.0 / 3.0; 3]; 2]);
    assert!((loss_sentence(&uniform, &[Some(0), Some(56)]).unwrap() - 57f64.ln()).abs() < 1e-12);

    let mut y1 = vec![0.0; 57];
    y1[..3].copy_from_slice(&[0.5, 0.3, 0.2]);
    let mut y2 = vec![0.0; 57];
    y2[..2].copy_from_slice(&[0.9, 0.1]);
    let mixed = pred_with(vec![y1, y2], vec![vec![1.0 / 3.0; 3]; 2]);
    let oracle = (-(0.3f64).ln() - (0.9f64).ln()) / 2.0;
    assert!((loss_sentence(&mixed, &[Some(1), Some(0)]).unwrap() - oracle).abs() < 1e-15);
    assert!(matches!(loss_sentence(&mixed, &[Some(1), None]), Err(ModelError::MissingGold(_))));
}

#[test]
fn document_loss_examples() {
    assert_eq!(loss_document(&[(0.3, Some(0.3))]).unwrap(), 0.0);
    assert_eq!(loss_document(&[(0.5, Some(0.0))]).unwrap(), 0.25);
    let batch = loss_document(&[(0.1, Some(0.0)), (0.0, Some(0.3))]).unwrap();
    assert!((batch - 0.05).abs() < 1e-15);
    assert!(matches!(loss_document(&[(0.1, None)]), Err(ModelError::MissingGold(_))));
}

#[test]
fn structured_loss_examples() {
    let even = pred_with(vec![vec![0.0; 57]; 2], vec![vec![0.3, 0.3, 0.4], vec![0.1, 0.1, 0.8]]);
    assert_eq!(loss_structured(&[(&even, Some(0.0))]).unwrap(), 0.0);
    let right = pred_with(vec![vec![0.0; 57]; 3], vec![one_hot(3, 1); 3]);
    assert_eq!(loss_structured(&[(&right, Some(1.0))]).unwrap(), 0.0);
    let two = pred_with(vec![vec![0.0; 57]; 2], vec![vec![0.1, 0.3, 0.6], vec![0.2, 0.8, 0.0]]);
    assert!((loss_structured(&[(&two, Some(0.0))]).unwrap() - 0.16).abs() < 1e-15);
}

#[test]
fn total_loss_algebra() {
    let comps = LossComponents { sentence: 1.0, document: 2.0, polarity: 3.0, structured: 4.0, total: 0.0 };
    let cfg = ModelConfig::default();
    assert!((loss_total(comps, &cfg).total - 4.8).abs() < 1e-12);

    let sent_only = ModelConfig { alpha: 1.0, beta: 0.0, gamma: 0.0, ..cfg.clone() };
    let c = LossComponents { sentence: 0.7310585786300049, document: 0.123, polarity: 9.1, structured: 2.2, total: 0.0 };
    assert_eq!(loss_total(c, &sent_only).total.to_bits(), c.sentence.to_bits());
    let joint = ModelConfig { beta: 0.0, gamma: 0.0, ..cfg.clone() };
    let lj = cfg.alpha * c.sentence + (1.0 - cfg.alpha) * c.document;
    assert_eq!(loss_total(c, &joint).total.to_bits(), lj.to_bits());
}

#[test]
fn one_hot_polarities_reproduce_rile() {
    let scheme = LabelScheme::cmp_default();
    let labels = ["402", "106", "506", "703", "605", "401", "000"];
    let ps: Vec<Vec<f64>> =
        labels.iter().map(|c| one_hot(3, scheme.polarity_of(c).unwrap().index())).collect();
    let pred = pred_with(vec![vec![0.0; 57]; labels.len()], ps);
    assert_eq!(mean_balance(&pred), compute_rile(&labels, &scheme).unwrap());
}

#[test]
fn targets_use_scheme_polarity() {
    let corpus = fixture_corpus();
    let t = DocumentTargets::of(&corpus.manifestos[0], &corpus.scheme).unwrap();
    let pols = t.polarities.unwrap();
    for (s, p) in corpus.manifestos[0].sentences.iter().zip(pols) {
        assert_eq!(corpus.scheme.polarity_of(s.gold_code.as_deref().unwrap()).unwrap(), p);
    }
    let u = DocumentTargets::of(&corpus.manifestos[2], &corpus.scheme).unwrap();
    assert!(u.classes.is_none() && u.rile == Some(0.6));
}

#[test]
fn tape_loss_matches_plain_losses() {
    let corpus = fixture_corpus();
    let model = fresh_model(&corpus, &small_config());
    let m = &corpus.manifestos[0];
    let targets = DocumentTargets::of(m, &corpus.scheme).unwrap();
    let mut tape = Tape::new();
    let g = model.forward(&mut tape, m).unwrap();
    let (_, comps) = model.document_loss(&mut tape, &g, &targets).unwrap();

    let pred = model.encode_document(m).unwrap();
    let classes: Vec<Option<usize>> = targets.classes.unwrap().into_iter().map(Some).collect();
    let pols: Vec<Option<Polarity>> = targets.polarities.unwrap().into_iter().map(Some).collect();
    let plain = LossComponents {
        sentence: loss_sentence(&pred, &classes).unwrap(),
        polarity: loss_polarity(&pred, &pols).unwrap(),
        document: loss_document(&[(pred.r_hat, m.rile_gold)]).unwrap(),
        structured: loss_structured(&[(&pred, m.rile_gold)]).unwrap(),
        total: 0.0,
    };
    let plain = loss_total(plain, &model.config);
    for (a, b) in [
        (comps.sentence, plain.sentence),
        (comps.polarity, plain.polarity),
        (comps.document, plain.document),
        (comps.structured, plain.structured),
        (comps.total, plain.total),
    ] {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn full_model_gradient_check() {
    let corpus = fixture_corpus();
    let config = ModelConfig { embedding_dim: 4, word_hidden: 3, sentence_hidden: 3, ..small_config() };
    let model = fresh_model(&corpus, &config);
    let docs: Vec<_> = corpus.manifestos[..3]
        .iter()
        .map(|m| (m, DocumentTargets::of(m, &corpus.scheme).unwrap()))
        .collect();
    let mut store = model.store.clone();
    let report = check_gradients(&mut store, 1e-3, |s, t| model.batch_loss(t, s, &docs)).unwrap();
    assert!(report.max_relative_error <= 1e-4, "{report:?}");
}

#[test]
fn training_descends_and_is_deterministic() {
    let corpus = fixture_corpus();
    let config = ModelConfig { epochs: 30, learning_rate: 0.01, ..small_config() };
    let (m1, r1) = train(&corpus, &config, None).unwrap();
    let (m2, r2) = train(&corpus, &config, None).unwrap();
    assert!(r1.final_loss().total < r1.initial_loss.total);
    assert_eq!(r1.epochs.len(), 30);
    assert_eq!(m1.store, m2.store);
    assert_eq!(r1, r2);
    assert_eq!(r1.supervised_docs, 4);
    assert_eq!(r1.sentence_labelled_docs, 3);
}

#[test]
fn unlabelled_documents_do_not_change_training() {
    let corpus = fixture_corpus();
    let config = small_config();
    let (m1, r1) = train(&corpus, &config, None).unwrap();
    let mut extended = corpus.clone();
    extended.manifestos.insert(1, doc("u", "fr", &[("nous voulons tout", None)], None));
    extended.manifestos.push(doc("v", "en", &[("entirely new words here", None)], None));
    let (m2, r2) = train(&extended, &config, None).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(m1.store, m2.store);
    assert_eq!(corpus_loss(&m1, &corpus).unwrap(), corpus_loss(&m2, &extended).unwrap());
}

#[test]
fn no_supervision_is_an_error() {
    let scheme = LabelScheme::cmp_default();
    let corpus = Corpus::new(vec![doc("u", "en", &[("hello there", None)], None)], scheme);
    assert!(matches!(train(&corpus, &small_config(), None), Err(ModelError::NoSupervision)));
}

#[test]
fn invalid_config_rejected() {
    let corpus = fixture_corpus();
    let bad = ModelConfig { alpha: 1.5, ..small_config() };
    assert!(matches!(train(&corpus, &bad, None), Err(ModelError::Config(_))));
    assert!(toml::from_str::<ModelConfig>("alpha = 0.5\nbogus = 1").is_err());
    let parsed: ModelConfig = toml::from_str("alpha = 0.5").unwrap();
    assert_eq!(parsed.gamma, 0.7);
}

#[test]
fn predict_matches_encode_in_order() {
    let corpus = fixture_corpus();
    let model = fresh_model(&corpus, &small_config());
    let preds = predict(&model, &corpus).unwrap();
    for (m, p) in corpus.manifestos.iter().zip(&preds) {
        assert_eq!(p, &model.encode_document(m).unwrap());
    }
}

#[test]
fn unknown_words_fall_back_per_language() {
    let corpus = fixture_corpus();
    let vocab = Vocabulary::build(&corpus.manifestos, 100);
    assert_eq!(vocab.words()[0], GLOBAL_UNK);
    let en_unk = vocab.lookup("en", "zzzz");
    assert_eq!(vocab.words()[en_unk], "en:<unk>");
    assert_eq!(vocab.lookup("fi", "zzzz"), 0);
    assert!(vocab.contains("de", "steuern"));
    assert!(!vocab.contains("en", "steuern"));
    let capped = Vocabulary::build(&corpus.manifestos, 1);
    assert_eq!(capped.len(), 1 + 2 * 2);
}

#[test]
fn checkpoint_round_trip() {
    let corpus = fixture_corpus();
    let (model, _) = train(&corpus, &small_config(), None).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&model, &mut bytes).unwrap();
    assert!(bytes.starts_with(b"PSCL1\n"));
    let back = read_checkpoint(bytes.as_slice(), &corpus.scheme).unwrap();
    assert_eq!(back, model);
    assert_eq!(predict(&back, &corpus).unwrap(), predict(&model, &corpus).unwrap());

    assert!(matches!(read_checkpoint(&bytes[..bytes.len() - 3], &corpus.scheme), Err(ModelError::Checkpoint(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(read_checkpoint(bad.as_slice(), &corpus.scheme), Err(ModelError::Checkpoint(_))));
    assert!(matches!(
        read_checkpoint(bytes.as_slice(), &corpus.scheme.swapped()),
        Err(ModelError::Checkpoint(_)) | Err(ModelError::Config(_))
    ));
}
