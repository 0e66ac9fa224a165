//! MAP inference: minimize the network energy over the unit box.

use serde::{Deserialize, Serialize};

use super::ground::GroundNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Iteration budget across all smoothing stages.
    pub max_iterations: usize,
    /// Stop a stage when the objective improves by less than this.
    pub tolerance: f64,
    /// Huber smoothing width for linear hinges, first and last stage.
    pub smoothing_start: f64,
    pub smoothing_end: f64,
    /// Start from the network's initial values (otherwise from 0.5).
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 50_000, tolerance: 1e-9, smoothing_start: 1e-1, smoothing_end: 1e-7, warm_start: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub values: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub trait Solver {
    fn solve(&self, network: &GroundNetwork, start: &[f64]) -> MapResult;
}

/// Accelerated projected gradient on a Huber-smoothed energy, shrinking the
/// smoothing width stage by stage; the step is `1/L` for the current stage,
/// so it shrinks with the width. The best iterate under the exact energy is
/// returned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectedGradient {
    pub config: SolverConfig,
}

impl ProjectedGradient {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }
}

/// Smoothed energy and its gradient; linear hinges use width `mu`.
fn smoothed(network: &GroundNetwork, y: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut total = 0.0;
    for r in &network.rules {
        let l = r.hinge.value(y);
        if l <= 0.0 {
            continue;
        }
        let (f, df) = match r.exponent {
            1 if l <= mu => (l * l / (2.0 * mu), l / mu),
            1 => (l - mu / 2.0, 1.0),
            _ => (l * l, 2.0 * l),
        };
        total += r.weight * f;
        for &(i, c) in &r.hinge.terms {
            grad[i] += r.weight * df * c;
        }
    }
    total
}

fn lipschitz(network: &GroundNetwork, mu: f64) -> f64 {
    network
        .rules
        .iter()
        .map(|r| {
            let norm: f64 = r.hinge.terms.iter().map(|(_, c)| c * c).sum();
            r.weight * norm * if r.exponent == 1 { 1.0 / mu } else { 2.0 }
        })
        .sum()
}

fn project(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

impl Solver for ProjectedGradient {
    fn solve(&self, network: &GroundNetwork, start: &[f64]) -> MapResult {
        let cfg = &self.config;
        let n = network.num_free();
        let mut y: Vec<f64> = if cfg.warm_start { start.iter().map(|&v| project(v)).collect() } else { vec![0.5; n] };
        let mut best = y.clone();
        let mut best_energy = network.energy(&y);
        if network.rules.is_empty() || n == 0 {
            return MapResult { values: y, energy: best_energy, iterations: 0, converged: true };
        }

        let has_linear = network.rules.iter().any(|r| r.exponent == 1);
        let mut mu = if has_linear { cfg.smoothing_start } else { cfg.smoothing_end };
        let mut grad = vec![0.0; n];
        let mut iterations = 0;
        let mut converged = false;
        loop {
            let last_stage = mu <= cfg.smoothing_end;
            let step = 1.0 / lipschitz(network, mu).max(1e-12);
            // FISTA with function-value restart.
            let mut z = y.clone();
            let mut t: f64 = 1.0;
            let mut f_prev = smoothed(network, &y, mu, &mut grad);
            let mut stage_done = false;
            while iterations < cfg.max_iterations {
                iterations += 1;
                smoothed(network, &z, mu, &mut grad);
                let next: Vec<f64> = z.iter().zip(&grad).map(|(&zi, &g)| project(zi - step * g)).collect();
                let f_next = smoothed(network, &next, mu, &mut grad);
                if f_next > f_prev {
                    // Momentum overshot: restart from the last accepted point.
                    z.clone_from(&y);
                    t = 1.0;
                    continue;
                }
                let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
                let momentum = (t - 1.0) / t_next;
                z = next.iter().zip(&y).map(|(&a, &b)| project(a + momentum * (a - b))).collect();
                t = t_next;
                let improvement = f_prev - f_next;
                y = next;
                f_prev = f_next;

                let e = network.energy(&y);
                if e < best_energy {
                    best_energy = e;
                    best.clone_from(&y);
                }
                if improvement < cfg.tolerance {
                    stage_done = true;
                    break;
                }
            }
            if !stage_done {
                break;
            }
            if last_stage {
                converged = true;
                break;
            }
            mu = (mu * 0.1).max(cfg.smoothing_end);
        }
        MapResult { values: best, energy: best_energy, iterations, converged }
    }
}

/// MAP state with the default solver, warm-started from the network's
/// initial values.
pub fn map_inference(network: &GroundNetwork, config: &SolverConfig) -> MapResult {
    ProjectedGradient::new(config.clone()).solve(network, &network.initial)
}
