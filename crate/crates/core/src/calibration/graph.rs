use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::CalibrationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoalitionKind {
    Regional,
    Eu,
}

impl fmt::Display for CoalitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoalitionKind::Regional => "REGIONAL",
            CoalitionKind::Eu => "EU",
        })
    }
}

impl FromStr for CoalitionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "REGIONAL" => Ok(CoalitionKind::Regional),
            "EU" => Ok(CoalitionKind::Eu),
            other => Err(format!("unknown coalition kind {other:?}")),
        }
    }
}

/// Undirected coalition counts between parties.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartyGraph {
    counts: BTreeMap<(CoalitionKind, String, String), u32>,
}

fn key(kind: CoalitionKind, a: &str, b: &str) -> (CoalitionKind, String, String) {
    if a <= b {
        (kind, a.into(), b.into())
    } else {
        (kind, b.into(), a.into())
    }
}

impl PartyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds to the count of an edge; the edge is undirected.
    pub fn add(&mut self, a: &str, b: &str, count: u32, kind: CoalitionKind) {
        *self.counts.entry(key(kind, a, b)).or_default() += count;
    }

    pub fn count(&self, a: &str, b: &str, kind: CoalitionKind) -> u32 {
        self.counts.get(&key(kind, a, b)).copied().unwrap_or(0)
    }

    /// Each undirected edge once, as `(a, b, count, kind)` with `a <= b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u32, CoalitionKind)> {
        self.counts.iter().map(|((k, a, b), &c)| (a.as_str(), b.as_str(), c, *k))
    }

    pub fn contains_party(&self, party: &str) -> bool {
        self.counts.keys().any(|(_, a, b)| a == party || b == party)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Tab-separated `party_a  party_b  count  kind`; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self, CalibrationError> {
        let mut graph = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |m: &str| CalibrationError::Format { line: line_no, message: m.into() };
            if f.len() != 4 {
                return Err(bad("expected 4 tab-separated fields"));
            }
            let count: u32 = f[2].trim().parse().map_err(|_| bad("count must be a nonnegative integer"))?;
            let kind: CoalitionKind = f[3].parse().map_err(|e: String| bad(&e))?;
            graph.add(f[0].trim(), f[1].trim(), count, kind);
        }
        Ok(graph)
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        Self::parse(&read(path)?)
    }

    pub fn to_tsv(&self) -> String {
        self.edges().map(|(a, b, c, k)| format!("{a}\t{b}\t{c}\t{k}\n")).collect()
    }
}

pub(crate) fn read(path: &Path) -> Result<String, CalibrationError> {
    std::fs::read_to_string(path).map_err(|source| CalibrationError::Io { path: path.display().to_string(), source })
}

/// Expert-survey left-right scores per party and survey year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChesScores {
    scores: BTreeMap<String, BTreeMap<i32, f64>>,
}

impl ChesScores {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, party: &str, year: i32, score: f64) {
        self.scores.entry(party.into()).or_default().insert(year, score);
    }

    /// Tab-separated `party_id  survey_year  lr_score`.
    pub fn parse(text: &str) -> Result<Self, CalibrationError> {
        let mut out = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let bad = |m: &str| CalibrationError::Format { line: i + 1, message: m.into() };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad("expected 3 tab-separated fields"));
            }
            let year = f[1].trim().parse().map_err(|_| bad("bad survey year"))?;
            let score: f64 = f[2].trim().parse().map_err(|_| bad("bad score"))?;
            if !score.is_finite() {
                return Err(bad("bad score"));
            }
            out.insert(f[0].trim(), year, score);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        Self::parse(&read(path)?)
    }

    /// Score from the survey year closest to the election year; ties go to
    /// the earlier survey.
    pub fn nearest(&self, party: &str, election: NaiveDate) -> Option<f64> {
        let year = election.year();
        self.scores
            .get(party)?
            .iter()
            .min_by_key(|(&y, _)| ((y - year).abs(), y))
            .map(|(_, &s)| s)
    }
}
