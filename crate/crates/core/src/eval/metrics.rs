use std::collections::BTreeSet;

use super::EvalError;

/// Micro-averaged F over single-label predictions, from pooled counts.
///
/// Items whose gold code is in `exclude` are dropped, and predictions into
/// an excluded class count as neither true nor false positives. With no
/// exclusions this equals accuracy.
pub fn micro_f<S: AsRef<str>>(predicted: &[S], gold: &[S], exclude: &[&str]) -> Result<f64, EvalError> {
    let counts = pooled_counts(predicted, gold, exclude)?;
    counts.f()
}

/// True positives, false positives and false negatives pooled over classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PooledCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl PooledCounts {
    pub fn f(&self) -> Result<f64, EvalError> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return Err(EvalError::Empty);
        }
        Ok(2.0 * self.tp as f64 / denom as f64)
    }

    pub fn add(&mut self, other: PooledCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

pub fn pooled_counts<S: AsRef<str>>(predicted: &[S], gold: &[S], exclude: &[&str]) -> Result<PooledCounts, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch { left: predicted.len(), right: gold.len() });
    }
    if predicted.is_empty() {
        return Err(EvalError::Empty);
    }
    let excluded: BTreeSet<&str> = exclude.iter().copied().collect();
    let mut c = PooledCounts::default();
    for (p, g) in predicted.iter().zip(gold) {
        let (p, g) = (p.as_ref(), g.as_ref());
        let p_in = !excluded.contains(p);
        let g_in = !excluded.contains(g);
        if p == g {
            if g_in {
                c.tp += 1;
            }
        } else {
            if p_in {
                c.fp += 1;
            }
            if g_in {
                c.fn_ += 1;
            }
        }
    }
    Ok(c)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(EvalError::Degenerate("need at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EvalError::Degenerate("non-finite value".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, tied values sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch { left: x.len(), right: y.len() });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}
