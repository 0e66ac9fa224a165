use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::PslError;

pub type Args = Vec<String>;

/// Observed truth values and open target atoms, keyed by predicate.
///
/// Closed atoms that are never observed read as 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Database {
    observed: BTreeMap<String, BTreeMap<Args, f64>>,
    targets: BTreeMap<String, BTreeMap<Args, Option<f64>>>,
}

fn check(predicate: &str, args: &[String], value: f64) -> Result<(), PslError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(PslError::ValueOutOfRange { atom: format!("{predicate}({})", args.join(", ")), value })
    }
}

fn owned(args: &[&str]) -> Args {
    args.iter().map(|a| a.to_string()).collect()
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets an observed value, replacing any previous one.
    pub fn observe(&mut self, predicate: &str, args: &[&str], value: f64) -> Result<(), PslError> {
        let args = owned(args);
        check(predicate, &args, value)?;
        self.observed.entry(predicate.into()).or_default().insert(args, value);
        Ok(())
    }

    /// Declares a free atom, optionally with a warm-start value.
    pub fn add_target(&mut self, predicate: &str, args: &[&str], initial: Option<f64>) -> Result<(), PslError> {
        let args = owned(args);
        if let Some(v) = initial {
            check(predicate, &args, v)?;
        }
        self.targets.entry(predicate.into()).or_default().insert(args, initial);
        Ok(())
    }

    pub fn observed(&self, predicate: &str, args: &[String]) -> Option<f64> {
        self.observed.get(predicate)?.get(args).copied()
    }

    pub fn target(&self, predicate: &str, args: &[String]) -> Option<Option<f64>> {
        self.targets.get(predicate)?.get(args).copied()
    }

    pub fn is_target(&self, predicate: &str, args: &[String]) -> bool {
        self.target(predicate, args).is_some()
    }

    /// Observed atoms of one predicate in sorted argument order.
    pub fn atoms(&self, predicate: &str) -> impl Iterator<Item = (&Args, f64)> {
        self.observed.get(predicate).into_iter().flat_map(|m| m.iter().map(|(a, &v)| (a, v)))
    }

    pub fn targets(&self, predicate: &str) -> impl Iterator<Item = (&Args, Option<f64>)> {
        self.targets.get(predicate).into_iter().flat_map(|m| m.iter().map(|(a, &v)| (a, v)))
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        let mut names: Vec<&str> = self.observed.keys().chain(self.targets.keys()).map(String::as_str).collect();
        names.sort_unstable();
        names.dedup();
        names.into_iter()
    }

    pub fn num_observed(&self) -> usize {
        self.observed.values().map(BTreeMap::len).sum()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.values().map(BTreeMap::len).sum()
    }

    /// Parses the text form: one atom per line, `Pred(a, b) = 0.7` for an
    /// observation, `?Pred(a)` or `?Pred(a) = 0.4` for a target. Blank lines
    /// and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, PslError> {
        let mut db = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| PslError::Syntax { line: i + 1, column: 1, message: message.into() };
            let (target, rest) = match line.strip_prefix('?') {
                Some(r) => (true, r.trim_start()),
                None => (false, line),
            };
            let (atom, value) = match rest.split_once('=') {
                Some((a, v)) => (a.trim(), Some(v.trim().parse::<f64>().map_err(|_| err("bad truth value"))?)),
                None => (rest, None),
            };
            let open = atom.find('(').ok_or_else(|| err("expected '('"))?;
            let inner = atom[open + 1..].strip_suffix(')').ok_or_else(|| err("expected ')' at end of atom"))?;
            let name = atom[..open].trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(err("bad predicate name"));
            }
            let args: Vec<&str> = inner.split(',').map(str::trim).collect();
            if args.iter().any(|a| a.is_empty()) {
                return Err(err("empty argument"));
            }
            match (target, value) {
                (true, v) => db.add_target(name, &args, v)?,
                (false, Some(v)) => db.observe(name, &args, v)?,
                (false, None) => return Err(err("observed atom needs '= value'")),
            }
        }
        Ok(db)
    }

    /// Observed atoms with nonzero value, indexed by (argument position,
    /// argument value).
    pub(crate) fn index(&self, predicate: &str) -> AtomIndex {
        let mut idx = AtomIndex::default();
        for (args, v) in self.atoms(predicate) {
            if v > 0.0 {
                let k = idx.atoms.len();
                for (pos, a) in args.iter().enumerate() {
                    idx.by_arg.entry((pos, a.clone())).or_default().push(k);
                }
                idx.atoms.push((args.clone(), v));
            }
        }
        idx
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (pred, atoms) in &self.observed {
            for (args, v) in atoms {
                writeln!(f, "{pred}({}) = {v}", args.join(", "))?;
            }
        }
        for (pred, atoms) in &self.targets {
            for (args, v) in atoms {
                match v {
                    Some(v) => writeln!(f, "?{pred}({}) = {v}", args.join(", "))?,
                    None => writeln!(f, "?{pred}({})", args.join(", "))?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
pub(crate) struct AtomIndex {
    pub atoms: Vec<(Args, f64)>,
    pub by_arg: HashMap<(usize, String), Vec<usize>>,
}
