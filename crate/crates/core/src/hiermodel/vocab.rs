use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Manifesto;
use crate::embedalign::namespaced;

/// Shared unknown-word row for languages never seen in training.
pub const GLOBAL_UNK: &str = "*:<unk>";

/// Word rows of the embedding matrix, namespaced by language, with one
/// unknown-word row per language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Counts tokens per language and keeps the `cap` most frequent words of
    /// each (ties broken alphabetically).
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a Manifesto>, cap: usize) -> Self {
        let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        for m in docs {
            let per_lang = counts.entry(m.language.as_str()).or_default();
            for s in &m.sentences {
                for t in &s.tokens {
                    *per_lang.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        let mut words = vec![GLOBAL_UNK.to_string()];
        for (lang, freq) in counts {
            words.push(unk_for(lang));
            let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            words.extend(ranked.into_iter().take(cap).map(|(w, _)| namespaced(lang, w)));
        }
        Self::from_words(words)
    }

    pub fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self { words, index }
    }

    pub(crate) fn reindex(&mut self) {
        self.index = self.words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Row for `token` in `language`, falling back to the language's unknown
    /// row and then to the global one.
    pub fn lookup(&self, language: &str, token: &str) -> usize {
        self.index
            .get(&namespaced(language, token))
            .or_else(|| self.index.get(&unk_for(language)))
            .or_else(|| self.index.get(GLOBAL_UNK))
            .copied()
            .unwrap_or(0)
    }

    pub fn contains(&self, language: &str, token: &str) -> bool {
        self.index.contains_key(&namespaced(language, token))
    }
}

fn unk_for(language: &str) -> String {
    namespaced(language, "<unk>")
}
