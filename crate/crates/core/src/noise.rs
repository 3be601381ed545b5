//! The noisy-feature game. Contestants hold a private signal `y` and may pay
//! to shift it; the Jury only sees a feature drawn from `p_y`, so a
//! deterministic classifier induces a smooth acceptance probability over
//! signals.

use libm::erfc;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{self, BestResponse, Evaluation};
use crate::model::{
    Classifier, CostFunction, FeatureSpace, NoiseKernel, Population, SubpopulationScenario,
};
use crate::solvers::{first_argmax, Objective, SolveMethod, SolveReport, ThresholdRule};

/// `P(a < Z < b)` for a standard normal, accurate in both tails.
pub fn std_normal_interval(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let upper_tail = |z: f64| 0.5 * erfc(z / std::f64::consts::SQRT_2);
    if a >= 0.0 {
        upper_tail(a) - upper_tail(b)
    } else if b <= 0.0 {
        upper_tail(-b) - upper_tail(-a)
    } else {
        1.0 - upper_tail(-a) - upper_tail(b)
    }
}

/// Edges of the cells around each grid point: midpoints between neighbours,
/// with the outer cells mirrored. Length `n + 1`.
pub fn cell_edges(space: &FeatureSpace) -> Vec<f64> {
    let p = space.points();
    let n = p.len();
    if n == 1 {
        return vec![f64::NEG_INFINITY, f64::INFINITY];
    }
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(p[0] - 0.5 * (p[1] - p[0]));
    edges.extend(p.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(p[n - 1] + 0.5 * (p[n - 1] - p[n - 2]));
    edges
}

/// Mass of `N(mean, sd)` in each grid cell, before renormalization.
pub fn normal_cell_masses(space: &FeatureSpace, mean: f64, sd: f64) -> Vec<f64> {
    let edges = cell_edges(space);
    edges
        .windows(2)
        .map(|w| std_normal_interval((w[0] - mean) / sd, (w[1] - mean) / sd))
        .collect()
}

/// Gaussian noise kernel: row `y` is `N(y, sigma)` integrated over the grid
/// cells and renormalized. `sigma = 0` gives the identity kernel.
pub fn gaussian_kernel(space: &FeatureSpace, sigma: f64) -> Result<NoiseKernel> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(
            "noise sigma",
            "must be finite and nonnegative",
        ));
    }
    let n = space.len();
    if sigma == 0.0 {
        return Ok(NoiseKernel::identity(n));
    }
    let rows: Vec<Vec<f64>> = space
        .points()
        .par_iter()
        .map(|&y| {
            let masses = normal_cell_masses(space, y, sigma);
            let total: f64 = masses.iter().sum();
            masses.into_iter().map(|m| m / total).collect()
        })
        .collect();
    NoiseKernel::from_rows(rows)
}

/// `q(y) = Σ_x p_y(x) f(x)`.
///
/// Above one half the value is taken as one minus the rejection mass, so
/// that probabilities near 1 keep full relative precision and stay monotone
/// where the kernel is; ulp-level wobble would otherwise show up as free
/// downward moves with a positive gain.
pub fn acceptance_prob(f: &Classifier, kernel: &NoiseKernel) -> Result<Vec<f64>> {
    let p = f.probs();
    Error::check_len("noise kernel", p.len(), kernel.len())?;
    Ok((0..kernel.len())
        .map(|y| {
            let row = kernel.row(y);
            let accepted: f64 = row.iter().zip(p).map(|(k, v)| k * v).sum();
            if accepted <= 0.5 {
                return accepted;
            }
            let rejected: f64 = row.iter().zip(p).map(|(k, v)| k * (1.0 - v)).sum();
            (1.0 - rejected).clamp(0.0, 1.0)
        })
        .collect())
}

/// Best response over private signals against induced acceptance `q`.
pub fn noisy_best_response(q: &[f64], c: &CostFunction) -> Result<BestResponse> {
    Error::check_len("cost function", q.len(), c.len())?;
    if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid(
            "acceptance probabilities",
            "must lie in [0, 1]",
        ));
    }
    Ok(game::best_response_values(q, c))
}

/// A single population playing the noisy game.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyGame {
    pop: Population,
    kernel: NoiseKernel,
    classifier: Classifier,
    cost: CostFunction,
}

impl NoisyGame {
    /// The classifier must be deterministic; see [`NoisyGame::allow_randomized`].
    pub fn new(
        pop: Population,
        kernel: NoiseKernel,
        classifier: Classifier,
        cost: CostFunction,
    ) -> Result<Self> {
        if !classifier.is_deterministic() {
            return Err(Error::invalid(
                "noisy game classifier",
                "must be deterministic (0/1 valued)",
            ));
        }
        Self::allow_randomized(pop, kernel, classifier, cost)
    }

    /// Accepts randomized classifiers too, for exploration.
    pub fn allow_randomized(
        pop: Population,
        kernel: NoiseKernel,
        classifier: Classifier,
        cost: CostFunction,
    ) -> Result<Self> {
        let n = pop.len();
        Error::check_len("noise kernel", n, kernel.len())?;
        Error::check_len("classifier", n, classifier.len())?;
        Error::check_len("cost function", n, cost.len())?;
        Ok(Self {
            pop,
            kernel,
            classifier,
            cost,
        })
    }

    pub fn acceptance(&self) -> Vec<f64> {
        acceptance_prob(&self.classifier, &self.kernel).expect("dimensions checked")
    }

    pub fn best_response(&self) -> BestResponse {
        game::best_response_values(&self.acceptance(), &self.cost)
    }

    pub fn evaluate(&self, beta: f64) -> Evaluation {
        let q = self.acceptance();
        let br = game::best_response_values(&q, &self.cost);
        game::evaluate_with(&q, &br, &self.pop, &self.cost, beta)
    }
}

pub fn noisy_utility(ng: &NoisyGame) -> f64 {
    ng.evaluate(0.0).utility
}

pub fn noisy_cost_of_strategy(ng: &NoisyGame) -> f64 {
    ng.evaluate(0.0).cost
}

pub fn noisy_efficiency(ng: &NoisyGame, beta: f64) -> f64 {
    ng.evaluate(beta).efficiency
}

/// Per-group outcome of one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SubpopReport {
    pub utilities: Vec<f64>,
    pub costs: Vec<f64>,
    pub moved: Vec<usize>,
    /// `Σ s_S U_S`.
    pub overall: f64,
    /// `Σ s_S C_S`.
    pub overall_cost: f64,
}

impl SubpopReport {
    /// Accuracy spread `max_S U_S − min_S U_S`; `|U_A − U_B|` for two groups.
    pub fn gap(&self) -> Option<f64> {
        if self.utilities.len() < 2 {
            return None;
        }
        let hi = self
            .utilities
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self.utilities.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi - lo)
    }

    pub fn overall_efficiency(&self, beta: f64) -> f64 {
        self.overall - beta * self.overall_cost
    }
}

pub fn subpop_accuracies(scenario: &SubpopulationScenario, f: &Classifier) -> Result<SubpopReport> {
    let n = scenario.space().len();
    Error::check_len("classifier", n, f.len())?;
    let q = match scenario.kernel() {
        Some(k) => acceptance_prob(f, k)?,
        None => f.probs().to_vec(),
    };
    Ok(report_for(scenario, &q))
}

fn report_for(scenario: &SubpopulationScenario, q: &[f64]) -> SubpopReport {
    let pop = scenario.pop();
    let k = scenario.num_groups();
    let mut utilities = Vec::with_capacity(k);
    let mut costs = Vec::with_capacity(k);
    let mut moved = Vec::with_capacity(k);
    for c in scenario.costs() {
        let br = game::best_response_values(q, c);
        let e = game::evaluate_with(q, &br, pop, c, 1.0);
        utilities.push(e.utility);
        costs.push(e.cost);
        moved.push(br.num_moved());
    }
    let overall = scenario
        .shares()
        .iter()
        .zip(&utilities)
        .map(|(s, u)| s * u)
        .sum();
    let overall_cost = scenario
        .shares()
        .iter()
        .zip(&costs)
        .map(|(s, c)| s * c)
        .sum();
    SubpopReport {
        utilities,
        costs,
        moved,
        overall,
        overall_cost,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisySolveReport {
    pub report: SolveReport,
    pub breakdown: SubpopReport,
}

/// Best deterministic threshold for overall accuracy across subpopulations.
///
/// Covers `1{x ≥ x_k}` and `1{x > x_k}` for every grid point plus
/// accept-all and reject-all. Distinct classifiers are scored once; ties go
/// to the classifier that accepts the most points, labelled by the first
/// rule that produces it.
pub fn solve_deterministic_noisy(scenario: &SubpopulationScenario) -> Result<NoisySolveReport> {
    solve_deterministic_noisy_for(scenario, Objective::Utility)
}

/// [`solve_deterministic_noisy`] for an arbitrary objective; efficiency is
/// the share-weighted accuracy minus `beta` times the share-weighted cost.
pub fn solve_deterministic_noisy_for(
    scenario: &SubpopulationScenario,
    objective: Objective,
) -> Result<NoisySolveReport> {
    let space = scenario.space();
    let n = space.len();
    let reports: Vec<SubpopReport> = (0..=n)
        .into_par_iter()
        .map(|cut| subpop_accuracies(scenario, &Classifier::cut(n, cut)))
        .collect::<Result<_>>()?;
    let score = |r: &SubpopReport| match objective {
        Objective::Utility => r.overall,
        Objective::Efficiency { beta } => r.overall_efficiency(beta),
    };
    let scores: Vec<f64> = reports.iter().map(score).collect();
    let best = first_argmax(&scores);
    let rule = match best {
        0 => ThresholdRule::AtLeast(space.point(0)),
        k => ThresholdRule::Above(space.point(k - 1)),
    };
    let breakdown = reports.into_iter().nth(best).expect("cut in range");
    Ok(NoisySolveReport {
        report: SolveReport {
            classifier: Classifier::cut(n, best),
            objective: score(&breakdown),
            method: SolveMethod::Enumeration,
            rule: Some(rule),
        },
        breakdown,
    })
}

/// Distribution of observed features: `Π'(x) = Σ_y π(y) p_y(x)`.
pub fn feature_marginal(pop: &Population, kernel: &NoiseKernel) -> Result<Vec<f64>> {
    let n = pop.len();
    Error::check_len("noise kernel", n, kernel.len())?;
    let mut out = vec![0.0; n];
    for (y, &p) in pop.pi().iter().enumerate() {
        for (o, k) in out.iter_mut().zip(kernel.row(y)) {
            *o += p * k;
        }
    }
    Ok(out)
}

/// Qualification probability given the observed feature,
/// `H(x) = Σ_y π(y) p_y(x) h(y) / Π'(x)`; `NaN` where `Π'(x) = 0`.
pub fn posterior_qualification(pop: &Population, kernel: &NoiseKernel) -> Result<Vec<f64>> {
    let marginal = feature_marginal(pop, kernel)?;
    let n = pop.len();
    let mut num = vec![0.0; n];
    for (y, (&p, &h)) in pop.pi().iter().zip(pop.h()).enumerate() {
        for (o, k) in num.iter_mut().zip(kernel.row(y)) {
            *o += p * k * h;
        }
    }
    Ok(num
        .iter()
        .zip(&marginal)
        .map(|(a, m)| if *m > 0.0 { a / m } else { f64::NAN })
        .collect())
}
