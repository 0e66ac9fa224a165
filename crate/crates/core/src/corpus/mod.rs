//! Manifesto corpus: data model, loading, segmentation and RILE.

mod scheme;
mod segment;

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scheme::{CodeEntry, LabelScheme, Polarity, NUM_CODES, NUM_LEFT, NUM_RIGHT};
pub use segment::{segment, tokenize, PreSegmented, RuleSegmenter, Segmenter};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unknown code {0}")]
    UnknownCode(String),
    #[error("line {line}: unknown language tag {tag:?}")]
    UnknownLanguage { line: usize, tag: String },
    #[error("scheme invariant violated: {0}")]
    SchemeInvariant(String),
    #[error("empty text")]
    EmptyText,
    #[error("empty label list")]
    EmptyLabels,
}

/// Language tags accepted by default by [`load_corpus`].
pub const DEFAULT_LANGUAGES: [&str; 10] = ["da", "nl", "en", "fi", "fr", "de", "it", "pt", "es", "sv"];

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
    pub gold_code: Option<String>,
    /// 1-based position in the document.
    pub position_index: usize,
}

impl Sentence {
    pub fn new(text: String, gold_code: Option<String>, position_index: usize) -> Self {
        let tokens = tokenize(&text);
        Self { text, tokens, gold_code, position_index }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifesto {
    pub id: String,
    pub party_id: String,
    pub country: String,
    pub language: String,
    pub election_date: NaiveDate,
    pub sentences: Vec<Sentence>,
    /// Scaled to [-1, 1].
    pub rile_gold: Option<f64>,
    pub ches_gold: Option<f64>,
}

impl Manifesto {
    /// True when every sentence carries a gold code (membership in `D_s`).
    pub fn is_sentence_annotated(&self) -> bool {
        !self.sentences.is_empty() && self.sentences.iter().all(|s| s.gold_code.is_some())
    }

    pub fn has_any_label(&self) -> bool {
        self.rile_gold.is_some() || self.is_sentence_annotated()
    }

    pub fn gold_codes(&self) -> Option<Vec<&str>> {
        self.sentences.iter().map(|s| s.gold_code.as_deref()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifestos: Vec<Manifesto>,
    pub scheme: LabelScheme,
}

impl Corpus {
    pub fn new(manifestos: Vec<Manifesto>, scheme: LabelScheme) -> Self {
        Self { manifestos, scheme }
    }

    pub fn len(&self) -> usize {
        self.manifestos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifestos.is_empty()
    }

    /// The sentence-annotated subset `D_s`.
    pub fn annotated(&self) -> impl Iterator<Item = &Manifesto> {
        self.manifestos.iter().filter(|m| m.is_sentence_annotated())
    }

    pub fn languages(&self) -> BTreeSet<&str> {
        self.manifestos.iter().map(|m| m.language.as_str()).collect()
    }

    /// A corpus over the selected manifestos, sharing this scheme.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            manifestos: indices.iter().map(|&i| self.manifestos[i].clone()).collect(),
            scheme: self.scheme.clone(),
        }
    }

    pub fn find(&self, id: &str) -> Option<&Manifesto> {
        self.manifestos.iter().find(|m| m.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawSentence {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    code: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    party_id: String,
    country: String,
    language: String,
    election_date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rile: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ches: Option<f64>,
    sentences: Vec<RawSentence>,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub languages: BTreeSet<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { languages: DEFAULT_LANGUAGES.iter().map(|s| s.to_string()).collect() }
    }
}

pub fn load_corpus(path: &Path, scheme: &LabelScheme) -> Result<Corpus, CorpusError> {
    load_corpus_with(path, scheme, &LoadOptions::default())
}

pub fn load_corpus_with(path: &Path, scheme: &LabelScheme, options: &LoadOptions) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file), scheme, options)
}

/// Reads the line-delimited JSON corpus format.
pub fn read_corpus(reader: impl BufRead, scheme: &LabelScheme, options: &LoadOptions) -> Result<Corpus, CorpusError> {
    let mut manifestos = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed { line: lineno, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: lineno, message: e.to_string() })?;
        manifestos.push(from_raw(raw, lineno, scheme, options)?);
    }
    Ok(Corpus { manifestos, scheme: scheme.clone() })
}

fn from_raw(raw: RawRecord, line: usize, scheme: &LabelScheme, options: &LoadOptions) -> Result<Manifesto, CorpusError> {
    if !options.languages.contains(&raw.language) {
        return Err(CorpusError::UnknownLanguage { line, tag: raw.language });
    }
    let rile_gold = match raw.rile {
        Some(r) if !(-100.0..=100.0).contains(&r) || !r.is_finite() => {
            return Err(CorpusError::Malformed { line, message: format!("rile {r} outside [-100, 100]") })
        }
        Some(r) => Some(r / 100.0),
        None => None,
    };
    if raw.sentences.is_empty() {
        return Err(CorpusError::Malformed { line, message: format!("manifesto {} has no sentences", raw.id) });
    }
    let mut sentences = Vec::with_capacity(raw.sentences.len());
    for (i, s) in raw.sentences.into_iter().enumerate() {
        if let Some(code) = &s.code {
            if !scheme.contains(code) {
                return Err(CorpusError::UnknownCode(code.clone()));
            }
        }
        let sentence = Sentence::new(s.text, s.code, i + 1);
        if sentence.tokens.is_empty() {
            return Err(CorpusError::Malformed {
                line,
                message: format!("sentence {} of {} has no tokens", i + 1, raw.id),
            });
        }
        sentences.push(sentence);
    }
    Ok(Manifesto {
        id: raw.id,
        party_id: raw.party_id,
        country: raw.country,
        language: raw.language,
        election_date: raw.election_date,
        sentences,
        rile_gold,
        ches_gold: raw.ches,
    })
}

fn to_raw(m: &Manifesto) -> RawRecord {
    RawRecord {
        id: m.id.clone(),
        party_id: m.party_id.clone(),
        country: m.country.clone(),
        language: m.language.clone(),
        election_date: m.election_date,
        rile: m.rile_gold.map(|r| r * 100.0),
        ches: m.ches_gold,
        sentences: m
            .sentences
            .iter()
            .map(|s| RawSentence { text: s.text.clone(), code: s.gold_code.clone() })
            .collect(),
    }
}

/// Writes the corpus in the same line-delimited format [`read_corpus`] reads.
pub fn write_corpus(corpus: &Corpus, mut writer: impl Write) -> std::io::Result<()> {
    for m in &corpus.manifestos {
        serde_json::to_writer(&mut writer, &to_raw(m))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    write_corpus(corpus, &mut file).map_err(io_err)?;
    file.flush().map_err(io_err)
}

pub fn polarity_of(code: &str, scheme: &LabelScheme) -> Result<Polarity, CorpusError> {
    scheme.polarity_of(code)
}

/// Scaled RILE: `(#right - #left) / #labels`, in [-1, 1].
pub fn compute_rile<S: AsRef<str>>(labels: &[S], scheme: &LabelScheme) -> Result<f64, CorpusError> {
    if labels.is_empty() {
        return Err(CorpusError::EmptyLabels);
    }
    let mut balance: i64 = 0;
    for label in labels {
        match scheme.polarity_of(label.as_ref())? {
            Polarity::Right => balance += 1,
            Polarity::Left => balance -= 1,
            Polarity::Neutral => {}
        }
    }
    Ok(balance as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_DOCS: &str = r#"{"id":"m1","party_id":"p1","country":"UK","language":"en","election_date":"2010-05-06","rile":-12.5,"sentences":[{"text":"We will cut taxes.","code":"402"},{"text":"Peace matters.","code":"106"},{"text":"Schools first.","code":"506"},{"text":"Farmers need help.","code":"703"},{"text":"Order on the streets.","code":"605"}]}
{"id":"m2","party_id":"p2","country":"UK","language":"en","election_date":"2010-05-06","ches":6.5,"sentences":[{"text":"One."},{"text":"Two."},{"text":"Three."},{"text":"Four."},{"text":"Five."}]}
"#;

    fn load(text: &str) -> Result<Corpus, CorpusError> {
        read_corpus(text.as_bytes(), &LabelScheme::cmp_default(), &LoadOptions::default())
    }

    #[test]
    fn loads_two_manifestos() {
        let c = load(TWO_DOCS).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.annotated().count(), 1);
        let m1 = &c.manifestos[0];
        assert_eq!(m1.rile_gold, Some(-0.125));
        assert_eq!(m1.sentences[4].position_index, 5);
        assert_eq!(m1.sentences[0].tokens, ["we", "will", "cut", "taxes"]);
        assert_eq!(c.manifestos[1].ches_gold, Some(6.5));
    }

    #[test]
    fn unknown_code_rejected() {
        let bad = TWO_DOCS.replace("\"402\"", "\"999\"");
        assert_eq!(load(&bad).unwrap_err().to_string(), "unknown code 999");
    }

    #[test]
    fn unknown_language_rejected() {
        let bad = TWO_DOCS.replace("\"language\":\"en\",\"election_date\":\"2010-05-06\",\"ches\"", "\"language\":\"xx\",\"election_date\":\"2010-05-06\",\"ches\"");
        let err = load(&bad).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownLanguage { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_record_names_line() {
        let bad = format!("{}\n{{not json", TWO_DOCS.lines().next().unwrap());
        let err = load(&bad).unwrap_err();
        assert!(matches!(err, CorpusError::Malformed { line: 2, .. }), "{err}");
        assert!(err.to_string().starts_with("line 2:"));
    }

    #[test]
    fn write_then_read_reproduces_records() {
        let c = load(TWO_DOCS).unwrap();
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), TWO_DOCS);
        assert_eq!(load(std::str::from_utf8(&buf).unwrap()).unwrap(), c);
    }

    #[test]
    fn rile_examples() {
        let s = LabelScheme::cmp_default();
        assert_eq!(compute_rile(&["501"; 10], &s).unwrap(), 0.0);
        // 4 RIGHT, 1 LEFT, 5 NEUTRAL -> (4 - 1) / 10
        let mixed = ["104", "401", "605", "606", "105", "501", "502", "000", "703", "108"];
        assert_eq!(compute_rile(&mixed, &s).unwrap(), 0.3);
        assert_eq!(compute_rile(&["104", "401"], &s).unwrap(), 1.0);
        assert_eq!(compute_rile(&["105", "106"], &s).unwrap(), -1.0);
        assert!(matches!(compute_rile::<&str>(&[], &s), Err(CorpusError::EmptyLabels)));
    }

    proptest! {
        #[test]
        fn rile_permutation_invariant(idx in prop::collection::vec(0usize..57, 1..60), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let s = LabelScheme::cmp_default();
            let labels: Vec<&str> = idx.iter().map(|&i| s.code_at(i).unwrap()).collect();
            let mut shuffled = labels.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(compute_rile(&labels, &s).unwrap(), compute_rile(&shuffled, &s).unwrap());
        }

        #[test]
        fn raw_rile_round_trips(raw in -100.0f64..=100.0) {
            let line = format!(
                r#"{{"id":"m","party_id":"p","country":"C","language":"de","election_date":"2001-01-01","rile":{raw},"sentences":[{{"text":"x"}}]}}"#
            );
            let c = load(&line).unwrap();
            let mut buf = Vec::new();
            write_corpus(&c, &mut buf).unwrap();
            let back: serde_json::Value = serde_json::from_slice(&buf).unwrap();
            let r = back["rile"].as_f64().unwrap();
            prop_assert!((r - raw).abs() <= 1e-12 * raw.abs().max(1.0));
        }
    }
}
