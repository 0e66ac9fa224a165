//! Sentence segmentation and tokenization.
//!
//! The default [`RuleSegmenter`] splits at sentence-final punctuation and then
//! breaks a sentence into quasi-sentences at `;` when both sides carry a
//! verb-like token. A verb-like token is one of a small per-language list of
//! auxiliaries and modals; languages without a list fall back to "the clause
//! has at least three tokens". [`PreSegmented`] treats every non-empty line as
//! one sentence and is the path to use for gold-segmented evaluation data.

use super::{CorpusError, Sentence};

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub trait Segmenter {
    fn segment(&self, text: &str, language: &str) -> Result<Vec<Sentence>, CorpusError>;
}

/// Every non-empty line is a sentence.
#[derive(Debug, Clone, Copy, Default)]
pub struct PreSegmented;

impl Segmenter for PreSegmented {
    fn segment(&self, text: &str, _language: &str) -> Result<Vec<Sentence>, CorpusError> {
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText);
        }
        Ok(number(text.lines().map(str::trim).filter(|l| !tokenize(l).is_empty()).map(String::from)))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleSegmenter {
    /// Disable the `;` quasi-sentence split.
    pub sentences_only: bool,
}

impl Segmenter for RuleSegmenter {
    fn segment(&self, text: &str, language: &str) -> Result<Vec<Sentence>, CorpusError> {
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText);
        }
        let mut pieces = Vec::new();
        for sentence in split_terminal(text) {
            if self.sentences_only {
                pieces.push(sentence);
            } else {
                pieces.extend(split_clauses(&sentence, language));
            }
        }
        Ok(number(pieces.into_iter().filter(|p| !tokenize(p).is_empty())))
    }
}

/// Segments `text` with the default rule-based segmenter.
pub fn segment(text: &str, language: &str) -> Result<Vec<Sentence>, CorpusError> {
    RuleSegmenter::default().segment(text, language)
}

fn number(pieces: impl Iterator<Item = String>) -> Vec<Sentence> {
    pieces
        .enumerate()
        .map(|(i, text)| Sentence::new(text, None, i + 1))
        .collect()
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{2026}')
}

/// Splits after runs of `.`, `!`, `?` that are followed by whitespace or the
/// end of input.
fn split_terminal(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        current.push(c);
        if is_terminal(c) {
            while i + 1 < chars.len() && is_terminal(chars[i + 1]) {
                i += 1;
                current.push(chars[i]);
            }
            let at_boundary = i + 1 == chars.len() || chars[i + 1].is_whitespace();
            if at_boundary {
                let piece = current.trim().to_string();
                if !piece.is_empty() {
                    out.push(piece);
                }
                current.clear();
            }
        }
        i += 1;
    }
    let rest = current.trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

fn split_clauses(sentence: &str, language: &str) -> Vec<String> {
    let parts: Vec<&str> = sentence.split(';').collect();
    if parts.len() == 1 {
        return vec![sentence.trim().to_string()];
    }
    // Greedy left-to-right merge: a clause is only detached when both it and
    // what has accumulated so far look like full clauses.
    let mut out: Vec<String> = Vec::new();
    let mut current = parts[0].trim().to_string();
    for part in &parts[1..] {
        let part = part.trim();
        if has_verb(&current, language) && has_verb(part, language) {
            out.push(format!("{current};"));
            current = part.to_string();
        } else {
            current = format!("{current}; {part}");
        }
    }
    out.push(current);
    out
}

fn verb_lexicon(language: &str) -> Option<&'static [&'static str]> {
    Some(match language {
        "en" => &[
            "is", "are", "was", "were", "be", "been", "will", "would", "shall", "should", "must", "can",
            "could", "may", "might", "has", "have", "had", "do", "does", "did",
        ],
        "de" => &[
            "ist", "sind", "war", "waren", "wird", "werden", "wurde", "soll", "sollen", "muss", "müssen",
            "kann", "können", "hat", "haben", "will", "wollen",
        ],
        "nl" => &[
            "is", "zijn", "was", "waren", "wordt", "worden", "zal", "zullen", "moet", "moeten", "kan",
            "kunnen", "heeft", "hebben", "wil", "willen",
        ],
        "fr" => &[
            "est", "sont", "était", "sera", "seront", "doit", "doivent", "peut", "peuvent", "a", "ont",
            "veut", "veulent", "faut",
        ],
        "es" => &[
            "es", "son", "está", "están", "será", "serán", "debe", "deben", "puede", "pueden", "ha", "han",
            "hay", "quiere",
        ],
        "it" => &[
            "è", "sono", "sarà", "saranno", "deve", "devono", "può", "possono", "ha", "hanno", "vuole",
        ],
        "pt" => &[
            "é", "são", "está", "estão", "será", "serão", "deve", "devem", "pode", "podem", "tem", "têm",
        ],
        "da" => &["er", "var", "vil", "skal", "kan", "må", "har", "bliver", "blev"],
        "sv" => &["är", "var", "vill", "ska", "skall", "kan", "måste", "har", "blir"],
        "fi" => &["on", "ovat", "oli", "olivat", "pitää", "tulee", "voi", "voivat", "täytyy"],
        _ => return None,
    })
}

fn has_verb(clause: &str, language: &str) -> bool {
    let tokens = tokenize(clause);
    match verb_lexicon(language) {
        Some(lex) => tokens.iter().any(|t| lex.contains(&t.as_str())),
        None => tokens.len() >= 3,
    }
}
