use std::collections::{BTreeMap, HashMap};

use super::ast::{Program, Rule};
use super::database::{Args, AtomIndex, Database};
use super::hinge::{distance, Hinge};
use super::PslError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Args,
}

impl std::fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomValue {
    Observed(f64),
    /// Index into the free-variable vector.
    Free(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundLiteral {
    /// Index into [`GroundNetwork::atoms`].
    pub atom: usize,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundRule {
    /// Index of the template rule in the program.
    pub rule: usize,
    pub weight: f64,
    pub exponent: u8,
    pub body: Vec<GroundLiteral>,
    pub head: GroundLiteral,
    /// The rule's linear function over the free variables.
    pub hinge: Hinge,
}

/// Ground hinge-loss network: free variables, observed atoms, and the
/// ground rules that can be violated for some free assignment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundNetwork {
    pub atoms: Vec<GroundAtom>,
    pub values: Vec<AtomValue>,
    /// Atom index of each free variable.
    pub free: Vec<usize>,
    /// Warm-start value of each free variable.
    pub initial: Vec<f64>,
    pub rules: Vec<GroundRule>,
    /// Energy of ground rules without free variables (dropped from `rules`).
    pub constant_energy: f64,
    /// Substitutions removed because their distance is zero on the whole box.
    pub pruned: usize,
}

/// Start value for free atoms without an initial value.
pub const DEFAULT_INITIAL: f64 = 0.5;

impl GroundNetwork {
    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn atom_index(&self, predicate: &str, args: &[&str]) -> Option<usize> {
        self.atoms.iter().position(|a| a.predicate == predicate && a.args.iter().map(String::as_str).eq(args.iter().copied()))
    }

    /// Free-variable index of an atom, if it is free.
    pub fn free_index(&self, predicate: &str, args: &[&str]) -> Option<usize> {
        match self.values[self.atom_index(predicate, args)?] {
            AtomValue::Free(i) => Some(i),
            AtomValue::Observed(_) => None,
        }
    }

    /// Value of an atom under an assignment of the free variables.
    pub fn value(&self, atom: usize, assignment: &[f64]) -> f64 {
        match self.values[atom] {
            AtomValue::Observed(v) => v,
            AtomValue::Free(i) => assignment[i],
        }
    }

    /// Distance to satisfaction of one ground rule, from its literals.
    pub fn distance_to_satisfaction(&self, rule: &GroundRule, assignment: &[f64]) -> Result<f64, PslError> {
        let truth = |l: &GroundLiteral| {
            let v = self.value(l.atom, assignment);
            if !(0.0..=1.0).contains(&v) {
                return Err(PslError::ValueOutOfRange { atom: self.atoms[l.atom].to_string(), value: v });
            }
            Ok(if l.negated { 1.0 - v } else { v })
        };
        let body = rule.body.iter().map(truth).collect::<Result<Vec<_>, _>>()?;
        distance(&body, truth(&rule.head)?)
    }

    /// `sum_r weight_r * distance_r ^ exponent_r`, summed in rule order.
    pub fn energy(&self, assignment: &[f64]) -> f64 {
        self.rules.iter().fold(self.constant_energy, |acc, r| acc + r.hinge.potential(r.weight, r.exponent, assignment))
    }

    /// Labels of the free variables, with their values.
    pub fn assignment_map<'a>(&'a self, assignment: &'a [f64]) -> impl Iterator<Item = (&'a GroundAtom, f64)> + 'a {
        self.free.iter().zip(assignment).map(|(&a, &v)| (&self.atoms[a], v))
    }
}

struct Builder<'a> {
    program: &'a Program,
    db: &'a Database,
    net: GroundNetwork,
    ids: HashMap<GroundAtom, usize>,
}

impl Builder<'_> {
    fn atom(&mut self, predicate: &str, args: Args) -> Result<usize, PslError> {
        let key = GroundAtom { predicate: predicate.to_string(), args };
        if let Some(&i) = self.ids.get(&key) {
            return Ok(i);
        }
        let value = if self.program.is_closed(predicate) {
            AtomValue::Observed(self.db.observed(predicate, &key.args).unwrap_or(0.0))
        } else if let Some(initial) = self.db.target(predicate, &key.args) {
            self.net.initial.push(initial.unwrap_or(DEFAULT_INITIAL));
            self.net.free.push(self.net.atoms.len());
            AtomValue::Free(self.net.free.len() - 1)
        } else if let Some(v) = self.db.observed(predicate, &key.args) {
            AtomValue::Observed(v)
        } else {
            return Err(PslError::MissingTarget(key.to_string()));
        };
        let i = self.net.atoms.len();
        self.ids.insert(key.clone(), i);
        self.net.atoms.push(key);
        self.net.values.push(value);
        Ok(i)
    }
}

/// Compiled join plan for one rule.
struct Plan {
    vars: Vec<String>,
    /// Positive closed body literals, as (predicate, variable ids).
    joins: Vec<(String, Vec<usize>)>,
    /// All literals (body then head) as variable ids.
    literals: Vec<Vec<usize>>,
}

fn plan(program: &Program, rule: &Rule, index: usize) -> Result<Plan, PslError> {
    let mut vars: Vec<String> = Vec::new();
    let mut var_id = |name: &String| match vars.iter().position(|v| v == name) {
        Some(i) => i,
        None => {
            vars.push(name.clone());
            vars.len() - 1
        }
    };
    let literals: Vec<Vec<usize>> = rule.literals().map(|l| l.args.iter().map(&mut var_id).collect()).collect();
    let joins: Vec<(String, Vec<usize>)> = rule
        .body
        .iter()
        .zip(&literals)
        .filter(|(l, _)| !l.negated && program.is_closed(&l.predicate))
        .map(|(l, ids)| (l.predicate.clone(), ids.clone()))
        .collect();
    let mut bound = vec![false; vars.len()];
    for (_, ids) in &joins {
        for &v in ids {
            bound[v] = true;
        }
    }
    if let Some(v) = bound.iter().position(|b| !b) {
        return Err(PslError::UnsafeVariable { rule: index + 1, variable: vars[v].clone() });
    }
    Ok(Plan { vars, joins, literals })
}

/// Enumerates bindings of all variables over positive closed literals with
/// nonzero observed value. A zero-valued positive closed literal makes the
/// body identically zero, so skipping it is exact.
fn enumerate(plan: &Plan, indexes: &HashMap<String, AtomIndex>) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut binding: Vec<Option<String>> = vec![None; plan.vars.len()];
    let mut done = vec![false; plan.joins.len()];
    fn rec(
        plan: &Plan,
        indexes: &HashMap<String, AtomIndex>,
        binding: &mut Vec<Option<String>>,
        done: &mut Vec<bool>,
        out: &mut Vec<Vec<String>>,
    ) {
        // Most-bound literal first, then smaller relation, then source order.
        let next = (0..plan.joins.len()).filter(|&j| !done[j]).min_by_key(|&j| {
            let (pred, ids) = &plan.joins[j];
            let unbound = ids.iter().filter(|&&v| binding[v].is_none()).count();
            (unbound == ids.len(), unbound, indexes[pred].atoms.len(), j)
        });
        let Some(j) = next else {
            out.push(binding.iter().map(|b| b.clone().expect("all variables bound")).collect());
            return;
        };
        let (pred, ids) = &plan.joins[j];
        let index = &indexes[pred];
        let candidates: Vec<usize> = match ids.iter().enumerate().find_map(|(pos, &v)| binding[v].as_ref().map(|b| (pos, b))) {
            Some((pos, value)) => index.by_arg.get(&(pos, value.clone())).cloned().unwrap_or_default(),
            None => (0..index.atoms.len()).collect(),
        };
        done[j] = true;
        for k in candidates {
            let args = &index.atoms[k].0;
            let mut newly = Vec::new();
            let mut ok = true;
            for (&v, a) in ids.iter().zip(args) {
                match &binding[v] {
                    Some(b) if b != a => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding[v] = Some(a.clone());
                        newly.push(v);
                    }
                }
            }
            if ok {
                rec(plan, indexes, binding, done, out);
            }
            for v in newly {
                binding[v] = None;
            }
        }
        done[j] = false;
    }
    rec(plan, indexes, &mut binding, &mut done, &mut out);
    out
}

/// Instantiates every rule of `program` against `db`.
///
/// All targets of the program's open predicates become free variables, in
/// predicate then argument order, whether or not a rule touches them.
pub fn ground(program: &Program, db: &Database) -> Result<GroundNetwork, PslError> {
    for rule in &program.rules {
        for l in rule.literals() {
            if let Some(p) = program.predicate(&l.predicate) {
                if p.arity != l.args.len() {
                    return Err(PslError::ArityMismatch {
                        predicate: p.name.clone(),
                        expected: p.arity,
                        found: l.args.len(),
                    });
                }
            }
        }
    }
    let mut b = Builder { program, db, net: GroundNetwork::default(), ids: HashMap::new() };
    for p in program.predicates.iter().filter(|p| !p.closed) {
        for (args, _) in db.targets(&p.name) {
            b.atom(&p.name, args.clone())?;
        }
    }

    let mut indexes: HashMap<String, AtomIndex> = HashMap::new();
    for l in program.rules.iter().flat_map(|r| r.literals()) {
        if program.is_closed(&l.predicate) && !indexes.contains_key(&l.predicate) {
            indexes.insert(l.predicate.clone(), db.index(&l.predicate));
        }
    }

    for (ri, rule) in program.rules.iter().enumerate() {
        let plan = plan(program, rule, ri)?;
        for binding in enumerate(&plan, &indexes) {
            let mut lits = Vec::with_capacity(plan.literals.len());
            for (l, ids) in rule.literals().zip(&plan.literals) {
                let args: Args = ids.iter().map(|&v| binding[v].clone()).collect();
                lits.push(GroundLiteral { atom: b.atom(&l.predicate, args)?, negated: l.negated });
            }
            let head = lits.pop().expect("rule has a head");
            let hinge = Hinge::from_literals(&lits, head, |a| b.net.values[a]);
            if hinge.max_over_box() <= 0.0 {
                b.net.pruned += 1;
                continue;
            }
            if hinge.terms.is_empty() {
                b.net.constant_energy += hinge.potential(rule.weight, rule.exponent, &[]);
                continue;
            }
            b.net.rules.push(GroundRule { rule: ri, weight: rule.weight, exponent: rule.exponent, body: lits, head, hinge });
        }
    }
    Ok(b.net)
}

/// Number of ground rules per template rule.
pub fn rule_counts(network: &GroundNetwork) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for r in &network.rules {
        *counts.entry(r.rule).or_default() += 1;
    }
    counts
}
