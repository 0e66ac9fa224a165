//! Lukasiewicz relaxation of ground rules and their hinge-loss potentials.

use super::ground::{AtomValue, GroundLiteral};
use super::PslError;

/// Distance to satisfaction of `body -> head` given literal truth values
/// (negation already applied): `max(sum(body) - head - (n - 1), 0)`.
pub fn distance(body: &[f64], head: f64) -> Result<f64, PslError> {
    for &v in body.iter().chain(std::iter::once(&head)) {
        if !(0.0..=1.0).contains(&v) {
            return Err(PslError::ValueOutOfRange { atom: "literal".into(), value: v });
        }
    }
    let sum = body.iter().fold(0.0, |acc, v| acc + v);
    Ok((sum - head - (body.len() - 1) as f64).max(0.0))
}

/// Lukasiewicz conjunction `max(sum - (n - 1), 0)`.
pub fn conjunction(values: &[f64]) -> f64 {
    (values.iter().sum::<f64>() - (values.len() as f64 - 1.0)).max(0.0)
}

/// Linear function `constant + sum(coef * y[var])` whose positive part is
/// the rule's distance to satisfaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Hinge {
    pub constant: f64,
    /// (free variable, coefficient), sorted by variable, no zero coefficients.
    pub terms: Vec<(usize, f64)>,
}

impl Hinge {
    pub(crate) fn from_literals(body: &[GroundLiteral], head: GroundLiteral, value: impl Fn(usize) -> AtomValue) -> Self {
        let mut constant = 0.0;
        let mut coef: Vec<(usize, f64)> = Vec::new();
        let mut add = |var: usize, c: f64| match coef.iter_mut().find(|(v, _)| *v == var) {
            Some(e) => e.1 += c,
            None => coef.push((var, c)),
        };
        // Body literals enter with sign +1, the head with sign -1.
        for (lit, sign) in body.iter().map(|l| (l, 1.0)).chain(std::iter::once((&head, -1.0))) {
            match (value(lit.atom), lit.negated) {
                (AtomValue::Observed(v), false) => constant += sign * v,
                (AtomValue::Observed(v), true) => constant += sign * (1.0 - v),
                (AtomValue::Free(i), false) => add(i, sign),
                (AtomValue::Free(i), true) => {
                    constant += sign;
                    add(i, -sign);
                }
            }
        }
        constant -= (body.len() - 1) as f64;
        coef.retain(|&(_, c)| c != 0.0);
        coef.sort_by_key(|&(v, _)| v);
        Self { constant, terms: coef }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * y[i])
    }

    /// Largest value of the linear function over the unit box.
    pub fn max_over_box(&self) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(_, c)| acc + c.max(0.0))
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        self.value(y).max(0.0)
    }

    pub fn potential(&self, weight: f64, exponent: u8, y: &[f64]) -> f64 {
        let d = self.distance(y);
        match exponent {
            1 => weight * d,
            _ => weight * d * d,
        }
    }
}
