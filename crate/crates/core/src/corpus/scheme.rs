//! The 57-class coding scheme and its left/right/neutral partition.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

const DEFAULT_SCHEME: &str = include_str!("../../assets/cmp_scheme.tsv");

pub const NUM_CODES: usize = 57;
pub const NUM_LEFT: usize = 13;
pub const NUM_RIGHT: usize = 13;

/// Ideological direction of a policy code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Polarity {
    Left,
    Right,
    Neutral,
}

impl Polarity {
    /// Index into the 3-way polarity distribution `[left, right, neutral]`.
    pub fn index(self) -> usize {
        match self {
            Polarity::Left => 0,
            Polarity::Right => 1,
            Polarity::Neutral => 2,
        }
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        match idx {
            0 => Some(Polarity::Left),
            1 => Some(Polarity::Right),
            2 => Some(Polarity::Neutral),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Left => Polarity::Right,
            Polarity::Right => Polarity::Left,
            Polarity::Neutral => Polarity::Neutral,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Left => "LEFT",
            Polarity::Right => "RIGHT",
            Polarity::Neutral => "NEUTRAL",
        })
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LEFT" => Ok(Polarity::Left),
            "RIGHT" => Ok(Polarity::Right),
            "NEUTRAL" => Ok(Polarity::Neutral),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeEntry {
    pub code: String,
    pub category: String,
    pub polarity: Polarity,
    pub name: String,
}

/// Validated coding scheme: exactly 57 codes, 13 LEFT, 13 RIGHT.
///
/// Codes keep file order; that order defines the class index used by the
/// sentence classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelScheme {
    entries: Vec<CodeEntry>,
    index: BTreeMap<String, usize>,
}

impl LabelScheme {
    /// The bundled scheme (standard RILE partition).
    pub fn cmp_default() -> Self {
        Self::parse(DEFAULT_SCHEME).expect("bundled scheme is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses the tab-separated `code  category  polarity  [name]` format.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(CorpusError::Malformed {
                    line: lineno + 1,
                    message: format!("expected at least 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let polarity = fields[2].parse::<Polarity>().map_err(|message| CorpusError::Malformed {
                line: lineno + 1,
                message,
            })?;
            entries.push(CodeEntry {
                code: fields[0].trim().to_string(),
                category: fields[1].trim().to_string(),
                polarity,
                name: fields.get(3).map(|s| s.trim().to_string()).unwrap_or_default(),
            });
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<CodeEntry>) -> Result<Self, CorpusError> {
        let mut index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.code.clone(), i).is_some() {
                return Err(CorpusError::SchemeInvariant(format!("duplicate code {}", e.code)));
            }
        }
        if entries.len() != NUM_CODES {
            return Err(CorpusError::SchemeInvariant(format!(
                "expected {NUM_CODES} codes, found {}",
                entries.len()
            )));
        }
        let left = entries.iter().filter(|e| e.polarity == Polarity::Left).count();
        let right = entries.iter().filter(|e| e.polarity == Polarity::Right).count();
        if left != NUM_LEFT || right != NUM_RIGHT {
            return Err(CorpusError::SchemeInvariant(format!(
                "expected {NUM_LEFT} LEFT and {NUM_RIGHT} RIGHT codes, found {left} LEFT and {right} RIGHT"
            )));
        }
        Ok(Self { entries, index })
    }

    /// Same codes with LEFT and RIGHT exchanged.
    pub fn swapped(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| CodeEntry { polarity: e.polarity.flipped(), ..e.clone() })
            .collect();
        Self::from_entries(entries).expect("swapping preserves cardinalities")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CodeEntry] {
        &self.entries
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.code.as_str())
    }

    pub fn contains(&self, code: &str) -> bool {
        self.index.contains_key(code)
    }

    pub fn class_index(&self, code: &str) -> Result<usize, CorpusError> {
        self.index
            .get(code)
            .copied()
            .ok_or_else(|| CorpusError::UnknownCode(code.to_string()))
    }

    pub fn code_at(&self, idx: usize) -> Option<&str> {
        self.entries.get(idx).map(|e| e.code.as_str())
    }

    pub fn polarity_of(&self, code: &str) -> Result<Polarity, CorpusError> {
        Ok(self.entries[self.class_index(code)?].polarity)
    }

    pub fn polarity_at(&self, idx: usize) -> Polarity {
        self.entries[idx].polarity
    }

    /// Serializes back to the tab-separated format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# code\tcategory\tpolarity\tname\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.code, e.category, e.polarity, e.name));
        }
        out
    }
}
