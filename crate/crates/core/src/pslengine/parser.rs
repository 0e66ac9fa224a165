//! Recursive-descent parser for the rule language, one statement per line.

use std::collections::BTreeSet;

use super::ast::{Literal, Predicate, Program, Rule, DEFAULT_EXPONENT, DEFAULT_WEIGHT};
use super::PslError;

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Self { chars: src.char_indices().collect(), pos: 0, line, src }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn error(&self, message: impl Into<String>) -> PslError {
        PslError::Syntax { line: self.line, column: self.column(), message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        let start = self.chars.get(self.pos).map_or(self.src.len(), |&(b, _)| b);
        if self.src[start..].starts_with(token) {
            self.pos += token.chars().count();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), PslError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn ident(&mut self) -> Result<String, PslError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        if start == self.pos || self.chars[start].1.is_ascii_digit() {
            self.pos = start;
            return Err(self.error("expected identifier"));
        }
        Ok(self.chars[start..self.pos].iter().map(|&(_, c)| c).collect())
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        match text.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = start;
                None
            }
        }
    }

    fn literal(&mut self) -> Result<Literal, PslError> {
        let negated = self.eat("!") || self.eat("¬") || self.eat("~");
        let predicate = self.ident()?;
        self.expect("(")?;
        let mut args = vec![self.ident()?];
        while self.eat(",") {
            args.push(self.ident()?);
        }
        self.expect(")")?;
        Ok(Literal { predicate, args, negated })
    }
}

fn strip_comment(line: &str) -> &str {
    line.find('#').map_or(line, |i| &line[..i])
}

/// Parses a program. Predicates used without a declaration are declared
/// closed with the arity of their first use.
pub fn parse_program(text: &str) -> Result<Program, PslError> {
    let mut program = Program::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let src = strip_comment(raw);
        let mut cur = Cursor::new(src, line);
        if cur.at_end() {
            continue;
        }
        let save = cur.pos;
        let word = cur.ident().ok();
        if let Some(kind @ ("open" | "closed")) = word.as_deref() {
            if !cur.eat("(") {
                let name = cur.ident()?;
                cur.expect("/")?;
                let arity = cur.number().filter(|a| *a >= 1.0 && a.fract() == 0.0).ok_or_else(|| cur.error("expected arity"))?;
                if !cur.at_end() {
                    return Err(cur.error("unexpected trailing input"));
                }
                declare(&mut program, &name, arity as usize, Some(kind == "closed"), line)?;
                continue;
            }
        }
        cur.pos = save;
        let rule = parse_rule(&mut cur)?;
        for l in rule.literals() {
            declare(&mut program, &l.predicate, l.args.len(), None, line)?;
        }
        program.rules.push(rule);
    }
    Ok(program)
}

fn declare(program: &mut Program, name: &str, arity: usize, closed: Option<bool>, line: usize) -> Result<(), PslError> {
    match program.predicates.iter_mut().find(|p| p.name == name) {
        Some(p) if p.arity != arity => {
            Err(PslError::ArityConflict { line, predicate: name.into(), expected: p.arity, found: arity })
        }
        Some(p) => {
            if let Some(c) = closed {
                p.closed = c;
            }
            Ok(())
        }
        None => {
            program.predicates.push(Predicate { name: name.into(), arity, closed: closed.unwrap_or(true) });
            Ok(())
        }
    }
}

fn parse_rule(cur: &mut Cursor) -> Result<Rule, PslError> {
    let line = cur.line;
    let save = cur.pos;
    let weight = match cur.number() {
        Some(w) if cur.eat(":") => w,
        _ => {
            cur.pos = save;
            DEFAULT_WEIGHT
        }
    };
    if !(weight >= 0.0 && weight.is_finite()) {
        return Err(PslError::NegativeWeight { line, weight });
    }
    let mut body = vec![cur.literal()?];
    while cur.eat("&") || cur.eat("∧") {
        body.push(cur.literal()?);
    }
    if !(cur.eat("->") || cur.eat("→")) {
        return Err(cur.error("expected `->`"));
    }
    let head = cur.literal()?;
    let exponent = if cur.eat("^") {
        match cur.number() {
            Some(v) if v == 1.0 => 1,
            Some(v) if v == 2.0 => 2,
            _ => return Err(cur.error("exponent must be 1 or 2")),
        }
    } else {
        DEFAULT_EXPONENT
    };
    if !cur.at_end() {
        return Err(cur.error("unexpected trailing input"));
    }
    let bound: BTreeSet<&String> = body.iter().flat_map(|l| &l.args).collect();
    if let Some(v) = head.args.iter().find(|a| !bound.contains(a)) {
        return Err(PslError::UnboundHeadVariable { line, variable: v.clone() });
    }
    Ok(Rule { weight, body, head, exponent })
}
