//! Optimal classifiers for the noiseless game.
//!
//! * [`solve_deterministic`] enumerates threshold classifiers under full
//!   Stackelberg play.
//! * [`project_lipschitz`] maps any classifier into the no-manipulation set
//!   `Lip(c)` without losing efficiency.
//! * [`solve_efficiency`] finds the efficiency optimum by linear programming
//!   over `Lip(c)`.
//! * [`grid_oracle`] brute-forces classifiers on a probability grid and is
//!   the independent check on the LP.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{self, Evaluation};
use crate::model::{is_lipschitz, Classifier, CostFunction, FeatureSpace, Population, TOL};
use crate::simplex::LinearProgram;

/// Largest grid size handed to the LP solver.
pub const MAX_LP_POINTS: usize = 200;
/// Largest grid size the exhaustive oracle accepts.
pub const MAX_ORACLE_POINTS: usize = 5;
/// Finest probability grid the exhaustive oracle accepts.
pub const MAX_ORACLE_RESOLUTION: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Enumeration,
    Projection,
    Lp,
    GridOracle,
}

/// What the Jury maximizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Utility,
    Efficiency { beta: f64 },
}

impl Objective {
    pub fn pick(self, e: &Evaluation) -> f64 {
        match self {
            Objective::Utility => e.utility,
            Objective::Efficiency { beta } => e.utility - beta * e.cost,
        }
    }
}

/// A deterministic threshold classifier in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `1{x ≥ tau}`.
    AtLeast(f64),
    /// `1{x > tau}`.
    Above(f64),
    AcceptAll,
    RejectAll,
}

impl ThresholdRule {
    pub fn classifier(&self, space: &FeatureSpace) -> Classifier {
        let n = space.len();
        match *self {
            ThresholdRule::AtLeast(t) => Classifier::threshold(space, t, false),
            ThresholdRule::Above(t) => Classifier::threshold(space, t, true),
            ThresholdRule::AcceptAll => Classifier::cut(n, 0),
            ThresholdRule::RejectAll => Classifier::cut(n, n),
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match *self {
            ThresholdRule::AtLeast(t) | ThresholdRule::Above(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_strict(&self) -> bool {
        matches!(self, ThresholdRule::Above(_))
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::AtLeast(t) => write!(f, "x >= {t}"),
            ThresholdRule::Above(t) => write!(f, "x > {t}"),
            ThresholdRule::AcceptAll => f.write_str("accept all"),
            ThresholdRule::RejectAll => f.write_str("reject all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub classifier: Classifier,
    pub objective: f64,
    pub method: SolveMethod,
    pub rule: Option<ThresholdRule>,
}

/// Best threshold classifier for accuracy under Stackelberg play.
pub fn solve_deterministic(
    space: &FeatureSpace,
    pop: &Population,
    c: &CostFunction,
) -> Result<SolveReport> {
    solve_deterministic_for(space, pop, c, Objective::Utility)
}

/// Enumerates `1{x ≥ x_k}` for every grid point, then reject-all. Ties keep
/// the smallest threshold; reject-all is tried last.
pub fn solve_deterministic_for(
    space: &FeatureSpace,
    pop: &Population,
    c: &CostFunction,
    objective: Objective,
) -> Result<SolveReport> {
    let n = space.len();
    Error::check_len("population", n, pop.len())?;
    Error::check_len("cost function", n, c.len())?;
    let scores: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|cut| {
            let f = Classifier::cut(n, cut);
            objective.pick(&game::evaluate(&f, pop, c, beta_of(objective)))
        })
        .collect();
    let best = first_argmax(&scores);
    let rule = if best < n {
        ThresholdRule::AtLeast(space.point(best))
    } else {
        ThresholdRule::RejectAll
    };
    Ok(SolveReport {
        classifier: Classifier::cut(n, best),
        objective: scores[best],
        method: SolveMethod::Enumeration,
        rule: Some(rule),
    })
}

fn beta_of(objective: Objective) -> f64 {
    match objective {
        Objective::Utility => 0.0,
        Objective::Efficiency { beta } => beta,
    }
}

/// Index of the first maximum.
pub(crate) fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `g(x) = max_y f(y) − c(x, y)`.
///
/// For simple costs `g ∈ Lip(c)` and `E(g) ≥ E(f)`; on `Lip(c)` the map is
/// the identity.
pub fn project_lipschitz(f: &Classifier, c: &CostFunction) -> Result<Classifier> {
    let p = f.probs();
    Error::check_len("cost function", p.len(), c.len())?;
    let g = (0..p.len())
        .map(|x| {
            c.row(x)
                .iter()
                .zip(p)
                .map(|(cost, fy)| fy - cost)
                .fold(f64::NEG_INFINITY, f64::max)
                .clamp(0.0, 1.0)
        })
        .collect();
    Classifier::new(tighten_lipschitz(g, c))
}

/// Efficiency-optimal (possibly randomized) classifier.
///
/// Solves `max Σ π(x)(2h(x) − 1) g(x)` over `g ∈ Lip(c) ∩ [0, 1]^n`.
/// Pairs with `c(x, x') ≥ 1` can never bind and are dropped. The reported
/// objective is the efficiency of the returned classifier as evaluated by
/// the game engine.
pub fn solve_efficiency(pop: &Population, c: &CostFunction) -> Result<SolveReport> {
    let n = pop.len();
    Error::check_len("cost function", n, c.len())?;
    if n > MAX_LP_POINTS {
        return Err(Error::Scale(format!(
            "efficiency LP is limited to {MAX_LP_POINTS} points, got {n}"
        )));
    }
    if let Some(i) = (0..n).find(|&i| c.row(i).iter().any(|v| *v < 0.0)) {
        return Err(Error::invalid(
            "cost function",
            format!("negative cost in row {i}"),
        ));
    }
    // Solved in u = 1 − g so the simplex starts from accept-all; among tied
    // optima this favours the classifier that accepts more.
    let weights: Vec<f64> = pop
        .pi()
        .iter()
        .zip(pop.h())
        .map(|(p, h)| -p * (2.0 * h - 1.0))
        .collect();
    let mut lp = LinearProgram::new(weights);
    for i in 0..n {
        for j in 0..n {
            let cij = c.get(i, j);
            if i != j && cij < 1.0 {
                lp.add_le(vec![(i, 1.0), (j, -1.0)], cij)?;
            }
        }
    }
    for i in 0..n {
        lp.add_le(vec![(i, 1.0)], 1.0)?;
    }
    let sol = lp.solve().map_err(|e| match e {
        Error::Lp(msg) => Error::Lp(format!("internal error, g = 1 is always feasible: {msg}")),
        other => other,
    })?;
    let g = tighten_lipschitz(sol.x.iter().map(|u| (1.0 - u).clamp(0.0, 1.0)).collect(), c);
    let classifier = Classifier::new(g)?;
    debug_assert!(is_lipschitz(&classifier, c));
    let objective = game::efficiency(&classifier, pop, c, 1.0);
    Ok(SolveReport {
        classifier,
        objective,
        method: SolveMethod::Lp,
        rule: None,
    })
}

/// Lowers entries by a few ulps until both float forms of the constraint,
/// `g[j] − g[i] ≤ c(i, j)` and `g[j] − c(i, j) ≤ g[i]`, hold exactly. The
/// first keeps tight constraints from reading as profitable moves; the
/// second makes the projection a fixed point on its own output.
fn tighten_lipschitz(mut g: Vec<f64>, c: &CostFunction) -> Vec<f64> {
    let n = g.len();
    let violated = |g: &[f64], i: usize, j: usize| {
        let cij = c.get(i, j);
        g[j] - g[i] > cij || g[j] - cij > g[i]
    };
    for _ in 0..64 {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                while violated(&g, i, j) && g[j] > 0.0 {
                    let lowered = (g[i] + c.get(i, j)).min(g[j].next_down()).max(0.0);
                    g[j] = if lowered < g[j] {
                        lowered
                    } else {
                        g[j].next_down()
                    };
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    g
}

/// Search space and objective for [`grid_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOracleConfig {
    pub resolution: usize,
    pub objective: Objective,
    pub monotone_only: bool,
}

impl GridOracleConfig {
    pub fn efficiency(resolution: usize) -> Self {
        Self {
            resolution,
            objective: Objective::Efficiency { beta: 1.0 },
            monotone_only: false,
        }
    }
}

/// Exhaustive search over every classifier with values in
/// `{0, 1/r, ..., 1}`, evaluated with full best responses.
pub fn efficiency_grid_oracle(
    pop: &Population,
    c: &CostFunction,
    resolution: usize,
) -> Result<SolveReport> {
    grid_oracle(pop, c, &GridOracleConfig::efficiency(resolution))
}

pub fn grid_oracle(
    pop: &Population,
    c: &CostFunction,
    config: &GridOracleConfig,
) -> Result<SolveReport> {
    let n = pop.len();
    let res = config.resolution;
    Error::check_len("cost function", n, c.len())?;
    if n > MAX_ORACLE_POINTS || res == 0 || res > MAX_ORACLE_RESOLUTION {
        return Err(Error::Scale(format!(
            "grid oracle needs n ≤ {MAX_ORACLE_POINTS} and 1 ≤ resolution ≤ \
             {MAX_ORACLE_RESOLUTION}, got n = {n}, resolution = {res}"
        )));
    }
    let levels: Vec<f64> = (0..=res).map(|k| k as f64 / res as f64).collect();
    let beta = beta_of(config.objective);

    // One task per value of the first coordinate; each returns its first
    // maximizer in lexicographic order, and the final reduction keeps the
    // earliest task on ties.
    let per_head: Vec<Option<(f64, Vec<f64>)>> = (0..=res)
        .into_par_iter()
        .map(|head| {
            let mut idx = vec![0usize; n];
            idx[0] = head;
            let mut probs = vec![0.0; n];
            let mut best: Option<(f64, Vec<f64>)> = None;
            loop {
                let monotone = idx.windows(2).all(|w| w[0] <= w[1]);
                if !config.monotone_only || monotone {
                    for (p, &k) in probs.iter_mut().zip(&idx) {
                        *p = levels[k];
                    }
                    let br = game::best_response_values(&probs, c);
                    let e = game::evaluate_with(&probs, &br, pop, c, beta);
                    let score = config.objective.pick(&e);
                    if best.as_ref().is_none_or(|(b, _)| score > *b) {
                        best = Some((score, probs.clone()));
                    }
                }
                // Odometer over coordinates 1..n.
                let mut pos = n;
                loop {
                    if pos == 1 {
                        return best;
                    }
                    pos -= 1;
                    if idx[pos] < res {
                        idx[pos] += 1;
                        break;
                    }
                    idx[pos] = 0;
                }
                if n == 1 {
                    return best;
                }
            }
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (score, probs) in per_head.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, probs));
        }
    }
    let (objective, probs) = best.ok_or_else(|| Error::invalid("grid oracle", "empty search"))?;
    Ok(SolveReport {
        classifier: Classifier::new(probs)?,
        objective,
        method: SolveMethod::GridOracle,
        rule: None,
    })
}

/// Efficiency optimum for a general weight on the cost of strategy. The
/// LP restriction to `Lip(c)` is only lossless at `beta = 1`; other values
/// go to the exhaustive oracle and inherit its scale limits.
pub fn solve_efficiency_weighted(
    pop: &Population,
    c: &CostFunction,
    beta: f64,
    resolution: usize,
) -> Result<SolveReport> {
    if !(beta >= 0.0) {
        return Err(Error::invalid("beta", "must be nonnegative"));
    }
    if beta == 1.0 {
        solve_efficiency(pop, c)
    } else {
        grid_oracle(
            pop,
            c,
            &GridOracleConfig {
                resolution,
                objective: Objective::Efficiency { beta },
                monotone_only: false,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dominance {
    pub e1: f64,
    pub e2: f64,
    pub dominates: bool,
}

/// Optimal efficiencies under two cost functions. When `c1 ≥ c2` pointwise,
/// `E*(c1) ≥ E*(c2)` must hold; a violation is returned as an error.
pub fn compare_dominance(
    pop: &Population,
    c1: &CostFunction,
    c2: &CostFunction,
) -> Result<Dominance> {
    Error::check_len("dominance cost functions", c1.len(), c2.len())?;
    let e1 = solve_efficiency(pop, c1)?.objective;
    let e2 = solve_efficiency(pop, c2)?.objective;
    let dominates = c1.dominates(c2);
    if dominates && e1 < e2 - TOL {
        return Err(Error::PropertyViolation(format!(
            "dominating costs lowered optimal efficiency: {e1} < {e2}"
        )));
    }
    Ok(Dominance { e1, e2, dominates })
}
