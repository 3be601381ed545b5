//! Contestant best responses and the Jury-side functionals: utility
//! (accuracy), cost of strategy and efficiency.

use crate::model::{Classifier, CostFunction, Population};

/// Gains and costs closer than this are reported as knife edges.
pub const KNIFE_EDGE: f64 = 1e-12;

/// Where each contestant ends up after best-responding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponse {
    target: Vec<usize>,
    knife_edges: usize,
}

impl BestResponse {
    pub fn identity(n: usize) -> Self {
        Self {
            target: (0..n).collect(),
            knife_edges: 0,
        }
    }

    pub fn targets(&self) -> &[usize] {
        &self.target
    }

    pub fn target(&self, i: usize) -> usize {
        self.target[i]
    }

    pub fn moved(&self, i: usize) -> bool {
        self.target[i] != i
    }

    pub fn moved_mask(&self) -> Vec<bool> {
        (0..self.target.len()).map(|i| self.moved(i)).collect()
    }

    pub fn num_moved(&self) -> usize {
        (0..self.target.len()).filter(|&i| self.moved(i)).count()
    }

    /// Number of ordered pairs whose gain equals the cost to within
    /// [`KNIFE_EDGE`] without being an exact tie.
    pub fn knife_edges(&self) -> usize {
        self.knife_edges
    }
}

/// Best response against an arbitrary per-point acceptance vector.
///
/// A contestant at `i` considers `i` itself and every `j` with
/// `values[j] − values[i] > c(i, j)` (exact comparison), then picks the
/// candidate with the highest value, preferring the smallest index on ties.
pub fn best_response_values(values: &[f64], c: &CostFunction) -> BestResponse {
    let n = values.len();
    assert_eq!(n, c.len(), "best response: dimension mismatch");
    let mut target = Vec::with_capacity(n);
    let mut knife_edges = 0;
    for (i, &vi) in values.iter().enumerate() {
        let row = c.row(i);
        let mut best = i;
        let mut best_val = vi;
        for (j, (&vj, &cij)) in values.iter().zip(row).enumerate() {
            let gain = vj - vi;
            if gain > cij && (vj > best_val || (vj == best_val && j < best)) {
                best = j;
                best_val = vj;
            }
            if j != i && gain > 0.0 && (gain - cij).abs() < KNIFE_EDGE {
                knife_edges += 1;
            }
        }
        target.push(best);
    }
    if knife_edges > 0 {
        log::warn!("best response: {knife_edges} gain/cost pairs within {KNIFE_EDGE:e} of a tie");
    }
    BestResponse {
        target,
        knife_edges,
    }
}

pub fn best_response(f: &Classifier, c: &CostFunction) -> BestResponse {
    best_response_values(f.probs(), c)
}

/// `Σ π(x)[v(Δ(x))(2h(x) − 1) + 1 − h(x)]` for acceptance values `v`.
pub(crate) fn utility_from(values: &[f64], br: &BestResponse, pop: &Population) -> f64 {
    pop.pi()
        .iter()
        .zip(pop.h())
        .zip(br.targets())
        .map(|((&p, &h), &t)| p * (values[t] * (2.0 * h - 1.0) + 1.0 - h))
        .sum()
}

/// `Σ π(x) h(x) c(x, Δ(x))`.
pub(crate) fn cost_from(br: &BestResponse, pop: &Population, c: &CostFunction) -> f64 {
    pop.pi()
        .iter()
        .zip(pop.h())
        .zip(br.targets())
        .enumerate()
        .map(|(i, ((&p, &h), &t))| p * h * c.get(i, t))
        .sum()
}

/// Jury utility (classification accuracy) of publishing `f`.
pub fn utility(f: &Classifier, pop: &Population, c: &CostFunction) -> f64 {
    let br = best_response(f, c);
    utility_from(f.probs(), &br, pop)
}

/// Expected manipulation cost paid by qualified contestants.
pub fn cost_of_strategy(f: &Classifier, pop: &Population, c: &CostFunction) -> f64 {
    let br = best_response(f, c);
    cost_from(&br, pop, c)
}

/// `U(f) − beta · C(f)`.
pub fn efficiency(f: &Classifier, pop: &Population, c: &CostFunction, beta: f64) -> f64 {
    evaluate(f, pop, c, beta).efficiency
}

/// All three functionals from one best-response pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub utility: f64,
    pub cost: f64,
    pub efficiency: f64,
}

pub fn evaluate(f: &Classifier, pop: &Population, c: &CostFunction, beta: f64) -> Evaluation {
    let br = best_response(f, c);
    evaluate_with(f.probs(), &br, pop, c, beta)
}

pub(crate) fn evaluate_with(
    values: &[f64],
    br: &BestResponse,
    pop: &Population,
    c: &CostFunction,
    beta: f64,
) -> Evaluation {
    let utility = utility_from(values, br, pop);
    let cost = cost_from(br, pop, c);
    Evaluation {
        utility,
        cost,
        efficiency: utility - beta * cost,
    }
}

/// Efficiency of a classifier under which nobody moves:
/// `Σ π(x)[2f(x)h(x) − f(x) − h(x) + 1]`.
pub fn static_efficiency(f: &Classifier, pop: &Population) -> f64 {
    pop.pi()
        .iter()
        .zip(pop.h())
        .zip(f.probs())
        .map(|((&p, &h), &g)| p * (2.0 * g * h - g - h + 1.0))
        .sum()
}
