//! Seeded random instance generators for property sweeps.

use rand::{Rng, RngCore};

use crate::model::{Classifier, CostFunction, Population};

/// Denominator for the dyadic generators; all sums of a few such values are
/// exact in `f64`.
pub const DYADIC_DENOM: f64 = 64.0;

fn dyadic(rng: &mut dyn RngCore, max: f64) -> f64 {
    let steps = (max * DYADIC_DENOM) as u32;
    rng.random_range(0..=steps) as f64 / DYADIC_DENOM
}

/// Random population with monotone `h`.
pub fn population(rng: &mut dyn RngCore, n: usize) -> Population {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let mut h: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    h.sort_by(f64::total_cmp);
    Population::from_weights(&weights, h).expect("valid random population")
}

/// Random simple cost function: free downward moves, random upward costs
/// closed under shortest paths so that sub-additivity holds.
pub fn simple_cost(
    rng: &mut dyn RngCore,
    n: usize,
    max_step: f64,
    dyadic_values: bool,
) -> CostFunction {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for v in row.iter_mut().skip(i + 1) {
            *v = if dyadic_values {
                dyadic(rng, max_step)
            } else {
                rng.random_range(0.0..max_step)
            };
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i][k] + m[k][j];
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    CostFunction::from_matrix(m).expect("square finite matrix")
}

/// Random shift cost from a random nondecreasing sequence.
pub fn shift_cost(rng: &mut dyn RngCore, n: usize, max_step: f64) -> CostFunction {
    let mut a = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += rng.random_range(0.0..max_step);
        a.push(acc);
    }
    CostFunction::shift(&a).expect("nondecreasing sequence")
}

/// `base` plus a random nonnegative simple bump, so the result dominates
/// `base` and is still simple.
pub fn dominating_cost(rng: &mut dyn RngCore, base: &CostFunction, max_step: f64) -> CostFunction {
    let n = base.len();
    let bump = simple_cost(rng, n, max_step, false);
    let rows = (0..n)
        .map(|i| (0..n).map(|j| base.get(i, j) + bump.get(i, j)).collect())
        .collect();
    CostFunction::from_matrix(rows).expect("square finite matrix")
}

pub fn classifier(rng: &mut dyn RngCore, n: usize) -> Classifier {
    Classifier::new((0..n).map(|_| rng.random::<f64>()).collect()).expect("values in [0, 1)")
}

pub fn dyadic_classifier(rng: &mut dyn RngCore, n: usize) -> Classifier {
    Classifier::new((0..n).map(|_| dyadic(rng, 1.0)).collect()).expect("values in [0, 1]")
}
