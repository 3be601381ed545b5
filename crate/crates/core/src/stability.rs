//! Whether a published classifier is stable from the Jury's side: once
//! contestants have moved, could the Jury reclassify the moved features and
//! do better?

use crate::error::Result;
use crate::game::{self, BestResponse};
use crate::model::{Classifier, CostFunction, FeatureSpace, Population, TOL};
use crate::solvers::solve_deterministic;

/// Signed qualified-minus-unqualified mass arriving at each reported
/// feature: `m(y) = Σ_{x : Δ(x) = y} π(x)(2h(x) − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledMass {
    mass: Vec<f64>,
}

impl PooledMass {
    pub fn values(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

pub fn pooled_mass(f: &Classifier, pop: &Population, c: &CostFunction) -> PooledMass {
    let br = game::best_response(f, c);
    pooled_mass_from(&br, pop)
}

fn pooled_mass_from(br: &BestResponse, pop: &Population) -> PooledMass {
    let mut mass = vec![0.0; pop.len()];
    for (x, (&p, &h)) in pop.pi().iter().zip(pop.h()).enumerate() {
        mass[br.target(x)] += p * (2.0 * h - 1.0);
    }
    PooledMass { mass }
}

/// `f` is a Jury equilibrium when no reclassification of the already-moved
/// features raises accuracy: interior probabilities need zero pooled mass,
/// accepted points nonnegative mass, rejected points nonpositive mass.
pub fn is_jury_equilibrium(f: &Classifier, pop: &Population, c: &CostFunction, tol: f64) -> bool {
    let m = pooled_mass(f, pop, c);
    equilibrium_from(f, &m, tol)
}

fn equilibrium_from(f: &Classifier, m: &PooledMass, tol: f64) -> bool {
    f.probs().iter().zip(m.values()).all(|(&p, &mass)| {
        if p == 1.0 {
            mass >= -tol
        } else if p == 0.0 {
            mass <= tol
        } else {
            mass.abs() <= tol
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub g: Classifier,
    pub gain: f64,
}

/// The Jury's most profitable reclassification against contestants who
/// best-responded to the published `f`.
pub fn best_deviation(f: &Classifier, pop: &Population, c: &CostFunction) -> Result<Deviation> {
    let m = pooled_mass(f, pop, c);
    let g: Vec<f64> = f
        .probs()
        .iter()
        .zip(m.values())
        .map(|(&p, &mass)| {
            if mass > 0.0 {
                1.0
            } else if mass < 0.0 {
                0.0
            } else {
                p
            }
        })
        .collect();
    let gain = g
        .iter()
        .zip(f.probs())
        .zip(m.values())
        .map(|((gy, fy), mass)| (gy - fy) * mass)
        .sum::<f64>()
        .max(0.0);
    Ok(Deviation {
        g: Classifier::new(g)?,
        gain,
    })
}

/// Keeps only the certain acceptances: `f'(x) = 1` iff `f(x) = 1`.
pub fn derandomize(f: &Classifier) -> Classifier {
    let probs = f
        .probs()
        .iter()
        .map(|&p| if p == 1.0 { 1.0 } else { 0.0 })
        .collect();
    Classifier::new(probs).expect("0/1 values are valid probabilities")
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityCheck {
    pub u_f: f64,
    pub u_det_star: f64,
    pub equilibrium: bool,
    pub u_derand: f64,
    /// Human-readable descriptions of any broken implication.
    pub violations: Vec<String>,
}

impl InstabilityCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that a classifier beating the best deterministic Stackelberg
/// threshold is never a Jury equilibrium, and that derandomizing an
/// equilibrium classifier never lowers accuracy.
pub fn check_randomization_instability(
    space: &FeatureSpace,
    pop: &Population,
    c: &CostFunction,
    f: &Classifier,
    tol: f64,
) -> Result<InstabilityCheck> {
    let u_f = game::utility(f, pop, c);
    let u_det_star = solve_deterministic(space, pop, c)?.objective;
    let equilibrium = is_jury_equilibrium(f, pop, c, tol);
    let u_derand = game::utility(&derandomize(f), pop, c);
    let mut violations = Vec::new();
    if u_f > u_det_star + TOL && equilibrium {
        violations.push(format!(
            "U(f) = {u_f} beats the deterministic optimum {u_det_star} yet f is an equilibrium"
        ));
    }
    if equilibrium && u_derand < u_f - TOL {
        violations.push(format!(
            "derandomized accuracy {u_derand} is below U(f) = {u_f} at an equilibrium"
        ));
    }
    Ok(InstabilityCheck {
        u_f,
        u_det_star,
        equilibrium,
        u_derand,
        violations,
    })
}
