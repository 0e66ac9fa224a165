use std::fmt;

/// Default rule weight when the source gives none.
pub const DEFAULT_WEIGHT: f64 = 1.0;
/// Default hinge exponent when the source gives none.
pub const DEFAULT_EXPONENT: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
    /// Closed predicates are fully observed; open ones may hold targets.
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<String>,
    pub negated: bool,
}

impl Literal {
    pub fn positive(predicate: &str, args: &[&str]) -> Self {
        Self { predicate: predicate.into(), args: args.iter().map(|a| a.to_string()).collect(), negated: false }
    }

    pub fn negative(predicate: &str, args: &[&str]) -> Self {
        Self { negated: true, ..Self::positive(predicate, args) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub weight: f64,
    pub body: Vec<Literal>,
    pub head: Literal,
    /// 1 for a linear hinge, 2 for a squared hinge.
    pub exponent: u8,
}

impl Rule {
    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().chain(std::iter::once(&self.head))
    }

    pub fn mentions(&self, predicate: &str) -> bool {
        self.literals().any(|l| l.predicate == predicate)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    /// In order of declaration or first use.
    pub predicates: Vec<Predicate>,
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn is_closed(&self, name: &str) -> bool {
        self.predicate(name).is_none_or(|p| p.closed)
    }

    /// Rules that mention none of `predicates`.
    pub fn without_predicates(&self, predicates: &[&str]) -> Program {
        Program {
            predicates: self.predicates.clone(),
            rules: self.rules.iter().filter(|r| !predicates.iter().any(|p| r.mentions(p))).cloned().collect(),
        }
    }

    pub fn with_weights(&self, weight: f64) -> Program {
        let rules = self.rules.iter().map(|r| Rule { weight, ..r.clone() }).collect();
        Program { predicates: self.predicates.clone(), rules }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!")?;
        }
        write!(f, "{}({})", self.predicate, self.args.join(", "))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.weight)?;
        for (i, l) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, " -> {} ^{}", self.head, self.exponent)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.predicates {
            writeln!(f, "{} {}/{}", if p.closed { "closed" } else { "open" }, p.name, p.arity)?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
