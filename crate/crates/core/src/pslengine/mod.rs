//! Weighted soft-logic rules: parsing, grounding against a database,
//! Lukasiewicz hinge potentials and MAP inference.

mod ast;
mod database;
mod ground;
mod hinge;
mod parser;
mod solver;

use thiserror::Error;

pub use ast::{Literal, Predicate, Program, Rule, DEFAULT_EXPONENT, DEFAULT_WEIGHT};
pub use database::{Args, Database};
pub use ground::{ground, rule_counts, AtomValue, GroundAtom, GroundLiteral, GroundNetwork, GroundRule, DEFAULT_INITIAL};
pub use hinge::{conjunction, distance, Hinge};
pub use parser::parse_program;
pub use solver::{map_inference, MapResult, ProjectedGradient, Solver, SolverConfig};

#[derive(Debug, Error, PartialEq)]
pub enum PslError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: head variable {variable} does not appear in the body")]
    UnboundHeadVariable { line: usize, variable: String },
    #[error("line {line}: negative weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },
    #[error("line {line}: {predicate} used with arity {found}, declared {expected}")]
    ArityConflict { line: usize, predicate: String, expected: usize, found: usize },
    #[error("{predicate} used with arity {found}, declared {expected}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
    #[error("rule {rule}: variable {variable} is not bound by a positive closed literal")]
    UnsafeVariable { rule: usize, variable: String },
    #[error("open atom {0} is neither a target nor observed")]
    MissingTarget(String),
    #[error("{atom} has value {value} outside [0, 1]")]
    ValueOutOfRange { atom: String, value: f64 },
}

#[cfg(test)]
mod tests;
