//! Closed forms for the Gaussian two-group instance and a builder that
//! discretizes it onto a grid for the simulation engine.
//!
//! The instance: signals `y ~ N(0, t)`, qualification ramp
//! `h(y) = clamp(y / 2d + 1/2, 0, 1)`, group costs
//! `c_S(y, y') = (y' − y)^+ / (√(2π) σ_S)`, and optional Gaussian feature
//! noise of deviation `sigma`. All closed forms replace the clamped ramp by
//! the unclamped line, which is accurate when `d ≫ t`; the additive constant
//! `∫ Π(y)(1 − h(y)) dy` is exactly `1/2` by symmetry.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{CostFunction, FeatureSpace, Population, SubpopulationScenario};
use crate::noise::{gaussian_kernel, normal_cell_masses};

/// `∫ Π(y)(1 − h(y)) dy` for the symmetric instance.
pub const BASE_ACCURACY: f64 = 0.5;

fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianInstance {
    pub t: f64,
    pub d: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub s_a: f64,
    pub s_b: f64,
    pub sigma: f64,
}

impl GaussianInstance {
    pub fn new(
        t: f64,
        d: f64,
        sigma_a: f64,
        sigma_b: f64,
        s_a: f64,
        s_b: f64,
        sigma: f64,
    ) -> Result<Self> {
        let positive = [
            ("t", t),
            ("d", d),
            ("sigma_A", sigma_a),
            ("sigma_B", sigma_b),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(
                    "gaussian instance",
                    format!("{name} must be positive, got {v}"),
                ));
            }
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(
                "gaussian instance",
                "sigma must be nonnegative",
            ));
        }
        if !(s_a >= 0.0) || !(s_b >= 0.0) || ((s_a + s_b) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "gaussian instance",
                format!("shares must be nonnegative and sum to 1, got {s_a} + {s_b}"),
            ));
        }
        if d < 8.0 * t.max(sigma) {
            return Err(Error::invalid(
                "gaussian instance",
                format!("d = {d} must be at least 8·max(t, sigma) for the linear ramp to hold"),
            ));
        }
        Ok(Self {
            t,
            d,
            sigma_a,
            sigma_b,
            s_a,
            s_b,
            sigma,
        })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(
            self.t,
            self.d,
            self.sigma_a,
            self.sigma_b,
            self.s_a,
            self.s_b,
            sigma,
        )
    }

    pub fn with_shares(&self, s_a: f64) -> Result<Self> {
        Self::new(
            self.t,
            self.d,
            self.sigma_a,
            self.sigma_b,
            s_a,
            1.0 - s_a,
            self.sigma,
        )
    }

    pub fn cost_scale(&self, group: Group) -> f64 {
        match group {
            Group::A => self.sigma_a,
            Group::B => self.sigma_b,
        }
    }

    /// Per-group accuracy peak `√(2π) σ_S`.
    pub fn peak(&self, group: Group) -> f64 {
        sqrt_2pi() * self.cost_scale(group)
    }

    /// `|σ_A − σ_B| ≤ t / √(2π)`: the groups differ, but not extremely.
    pub fn regime_holds(&self) -> bool {
        let bound = self.t / sqrt_2pi();
        (self.sigma_a - self.sigma_b).abs() <= bound * (1.0 + 1e-12)
    }

    /// The noise is at least as wide as every group's cost scale.
    pub fn noise_dominates_costs(&self) -> bool {
        self.sigma >= self.sigma_a.max(self.sigma_b)
    }
}

/// Noiseless group accuracy under `1{y ≥ tau}`:
/// `t / (√(2π) d) · exp(−(tau − √(2π)σ_S)² / 2t²) + 1/2`.
pub fn noiseless_subpop_utility(tau: f64, inst: &GaussianInstance, group: Group) -> f64 {
    noiseless_subpop_excess(tau, inst, group) + BASE_ACCURACY
}

fn noiseless_subpop_excess(tau: f64, inst: &GaussianInstance, group: Group) -> f64 {
    let z = tau - inst.peak(group);
    inst.t / (sqrt_2pi() * inst.d) * (-z * z / (2.0 * inst.t * inst.t)).exp()
}

pub fn noiseless_overall_utility(tau: f64, inst: &GaussianInstance) -> f64 {
    inst.s_a * noiseless_subpop_utility(tau, inst, Group::A)
        + inst.s_b * noiseless_subpop_utility(tau, inst, Group::B)
}

fn overall_derivative(tau: f64, inst: &GaussianInstance) -> f64 {
    let t2 = inst.t * inst.t;
    let term = |s: f64, peak: f64| {
        let z = tau - peak;
        s * z * (-z * z / (2.0 * t2)).exp()
    };
    -(term(inst.s_a, inst.peak(Group::A)) + term(inst.s_b, inst.peak(Group::B)))
        / (sqrt_2pi() * inst.t * inst.d)
}

fn bracket(inst: &GaussianInstance) -> (f64, f64) {
    let (a, b) = (inst.peak(Group::A), inst.peak(Group::B));
    (a.min(b), a.max(b))
}

/// Accuracy-maximizing noiseless threshold. Golden-section search on the
/// interval between the two group peaks narrows the bracket until the
/// objective is flat to machine precision; bisection on the derivative
/// finishes the job to `1e-10 · √(2π) max σ`.
pub fn noiseless_optimal_tau(inst: &GaussianInstance) -> f64 {
    let (lo, hi) = bracket(inst);
    if inst.sigma_a == inst.sigma_b {
        return inst.peak(Group::A);
    }
    if inst.s_a == inst.s_b {
        return 0.5 * (lo + hi);
    }
    let coarse = 1e-6 * hi;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = noiseless_overall_utility(x1, inst);
    let mut f2 = noiseless_overall_utility(x2, inst);
    while b - a > coarse {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = noiseless_overall_utility(x2, inst);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = noiseless_overall_utility(x1, inst);
        }
    }
    if overall_derivative(a, inst) > 0.0 && overall_derivative(b, inst) < 0.0 {
        bisect_derivative(a, b, 1e-10 * hi, inst)
    } else {
        0.5 * (a + b)
    }
}

fn bisect_derivative(mut lo: f64, mut hi: f64, tol: f64, inst: &GaussianInstance) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if overall_derivative(mid, inst) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Same optimum found by bisection on the first-order condition over the
/// whole peak bracket.
pub fn noiseless_optimal_tau_by_root(inst: &GaussianInstance) -> f64 {
    let (lo, hi) = bracket(inst);
    if hi == lo {
        return lo;
    }
    bisect_derivative(lo, hi, 0.0, inst)
}

/// Samples the closed form on the peak bracket and reports whether it rises
/// then falls at most once. A `false` flags a multi-modal objective, where
/// the golden-section optimum is not trustworthy.
pub fn is_unimodal_on_bracket(inst: &GaussianInstance, samples: usize) -> bool {
    let (lo, hi) = bracket(inst);
    let samples = samples.max(3);
    let values: Vec<f64> = (0..samples)
        .map(|i| noiseless_overall_utility(lo + (hi - lo) * i as f64 / (samples - 1) as f64, inst))
        .collect();
    let mut descending = false;
    for w in values.windows(2) {
        if w[1] < w[0] {
            descending = true;
        } else if w[1] > w[0] && descending {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairUtility {
    pub value: f64,
    /// `t² / (√(2π(σ² + t²)) d)`, the value above the 1/2 baseline.
    pub excess: f64,
    /// Whether `sigma ≥ max(σ_A, σ_B)`; if not, the groups may still move
    /// and the formula is not the realized accuracy.
    pub precondition_holds: bool,
}

/// Accuracy of `1{x > 0}` under Gaussian feature noise, identical for both
/// groups when nobody moves.
pub fn noisy_fair_utility(inst: &GaussianInstance) -> FairUtility {
    let (t, s) = (inst.t, inst.sigma);
    let excess = t * t / ((2.0 * PI * (s * s + t * t)).sqrt() * inst.d);
    FairUtility {
        value: excess + BASE_ACCURACY,
        excess,
        precondition_holds: inst.noise_dominates_costs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseComparison {
    pub u_noiseless_star: f64,
    pub u_noisy_star: f64,
    pub excess_noiseless: f64,
    pub excess_noisy: f64,
    pub noise_wins: bool,
}

/// Best noiseless accuracy (threshold at the midpoint of the two peaks,
/// equal shares) against the accuracy of `1{x > 0}` under noise.
pub fn noise_vs_noiseless(inst: &GaussianInstance) -> Result<NoiseComparison> {
    if (inst.s_a - inst.s_b).abs() > 1e-12 {
        return Err(Error::invalid(
            "noise comparison",
            format!("requires equal shares, got {} and {}", inst.s_a, inst.s_b),
        ));
    }
    let half_gap = sqrt_2pi() * (inst.sigma_a - inst.sigma_b) / 2.0;
    let excess_noiseless =
        inst.t / (sqrt_2pi() * inst.d) * (-half_gap * half_gap / (2.0 * inst.t * inst.t)).exp();
    let noisy = noisy_fair_utility(inst);
    Ok(NoiseComparison {
        u_noiseless_star: excess_noiseless + BASE_ACCURACY,
        u_noisy_star: noisy.value,
        excess_noiseless,
        excess_noisy: noisy.excess,
        noise_wins: noisy.excess > excess_noiseless,
    })
}

/// A Gaussian instance laid out on a symmetric grid.
#[derive(Debug, Clone)]
pub struct DiscretizedInstance {
    pub instance: GaussianInstance,
    pub scenario: SubpopulationScenario,
    /// Grid half-width `L`.
    pub half_width: f64,
    pub step: f64,
    /// Bound on the accuracy change from replacing the clamped ramp by the
    /// unclamped line: `2t·exp(−d²/2t²) / (√(2π) d)`.
    pub approx_budget: f64,
    /// Grid error allowance `(2/n)·(L/d)`.
    pub disc_budget: f64,
}

impl DiscretizedInstance {
    /// Combined discretization and approximation tolerance.
    pub fn tol_disc(&self) -> f64 {
        self.disc_budget + self.approx_budget
    }

    pub fn space(&self) -> &FeatureSpace {
        self.scenario.space()
    }

    /// Index of the grid point at zero.
    pub fn center(&self) -> usize {
        self.space().len() / 2
    }
}

pub const DEFAULT_HALF_WIDTH_MULT: f64 = 8.0;

/// Lays the instance out on `n` (odd, ≥ 201) points spanning `[−L, L]` with
/// `L = mult · √(t² + σ²)`. Signal mass is integrated per cell and
/// renormalized; the ramp is exact (clamped); costs are tabulated; the noise
/// kernel is Gaussian when `sigma > 0`.
pub fn discretize_instance(
    inst: &GaussianInstance,
    half_width_mult: f64,
    n: usize,
) -> Result<DiscretizedInstance> {
    if n < 201 || n.is_multiple_of(2) {
        return Err(Error::invalid(
            "grid size",
            format!("needs an odd number of points ≥ 201, got {n}"),
        ));
    }
    if !(half_width_mult > 0.0) {
        return Err(Error::invalid(
            "grid half-width multiplier",
            "must be positive",
        ));
    }
    let half_width = half_width_mult * (inst.t * inst.t + inst.sigma * inst.sigma).sqrt();
    let mid = (n / 2) as f64;
    let step = half_width / mid;
    let space = FeatureSpace::new((0..n).map(|i| (i as f64 - mid) * step).collect())?;

    let weights = normal_cell_masses(&space, 0.0, inst.t);
    let h: Vec<f64> = space
        .points()
        .iter()
        .map(|&y| (y / (2.0 * inst.d) + 0.5).clamp(0.0, 1.0))
        .collect();
    let pop = Population::from_weights(&weights, h)?;
    let costs = vec![
        CostFunction::linear(&space, inst.peak(Group::A))?,
        CostFunction::linear(&space, inst.peak(Group::B))?,
    ];
    let kernel = if inst.sigma > 0.0 {
        Some(gaussian_kernel(&space, inst.sigma)?)
    } else {
        None
    };
    let scenario = SubpopulationScenario::new(space, pop, vec![inst.s_a, inst.s_b], costs, kernel)?;
    let approx_budget =
        2.0 * inst.t * (-(inst.d * inst.d) / (2.0 * inst.t * inst.t)).exp() / (sqrt_2pi() * inst.d);
    let disc_budget = 2.0 / n as f64 * (half_width / inst.d);
    Ok(DiscretizedInstance {
        instance: *inst,
        scenario,
        half_width,
        step,
        approx_budget,
        disc_budget,
    })
}

/// Qualification given the observed feature under Gaussian noise, for the
/// linear ramp: `1/2 + t²/(σ² + t²) · x / 2d`.
pub fn posterior_line(inst: &GaussianInstance, x: f64) -> f64 {
    let t2 = inst.t * inst.t;
    0.5 + t2 / (inst.sigma * inst.sigma + t2) * x / (2.0 * inst.d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unequal_shares() -> GaussianInstance {
        GaussianInstance::new(1.0, 100.0, 0.5, 1.0, 0.25, 0.75, 0.0).unwrap()
    }

    fn boundary_regime() -> GaussianInstance {
        GaussianInstance::new(0.9 * sqrt_2pi(), 1000.0, 0.1, 1.0, 0.5, 0.5, 1.0).unwrap()
    }

    #[test]
    fn instance_validation() {
        assert!(GaussianInstance::new(1.0, 5.0, 0.5, 1.0, 0.5, 0.5, 0.0).is_err());
        assert!(GaussianInstance::new(1.0, 100.0, 0.5, 1.0, 0.5, 0.4, 0.0).is_err());
        assert!(GaussianInstance::new(-1.0, 100.0, 0.5, 1.0, 0.5, 0.5, 0.0).is_err());
        assert!(GaussianInstance::new(1.0, 100.0, 0.5, 1.0, 0.5, 0.5, -0.1).is_err());
    }

    #[test]
    fn subpop_peak_value() {
        let inst = unequal_shares();
        let peak = noiseless_subpop_utility(inst.peak(Group::A), &inst, Group::A);
        assert!((peak - (1.0 / (sqrt_2pi() * 100.0) + 0.5)).abs() < 1e-15);
        assert_eq!(noiseless_subpop_utility(1e6, &inst, Group::B), 0.5);
    }

    #[test]
    fn subpop_value_at_zero() {
        let inst = GaussianInstance::new(1.0, 100.0, 1.0, 1.0, 0.5, 0.5, 0.0).unwrap();
        let expected = (-PI).exp() / (sqrt_2pi() * 100.0) + 0.5;
        assert!((noiseless_subpop_utility(0.0, &inst, Group::A) - expected).abs() < 1e-15);
    }

    #[test]
    fn equal_shares_give_midpoint() {
        let inst = GaussianInstance::new(1.0, 100.0, 0.5, 0.8, 0.5, 0.5, 0.0).unwrap();
        let mid = sqrt_2pi() * (0.5 + 0.8) / 2.0;
        assert_eq!(noiseless_optimal_tau(&inst), mid);
        assert!((noiseless_optimal_tau_by_root(&inst) - mid).abs() < 1e-8);
    }

    #[test]
    fn equal_costs_give_common_peak() {
        let inst = GaussianInstance::new(1.0, 100.0, 0.7, 0.7, 0.3, 0.7, 0.0).unwrap();
        let tau = noiseless_optimal_tau(&inst);
        assert_eq!(tau, sqrt_2pi() * 0.7);
        assert_eq!(
            noiseless_subpop_utility(tau, &inst, Group::A),
            noiseless_subpop_utility(tau, &inst, Group::B)
        );
    }

    #[test]
    fn minority_is_disadvantaged() {
        let inst = GaussianInstance::new(sqrt_2pi(), 100.0, 0.5, 1.0, 0.25, 0.75, 0.0).unwrap();
        assert!(inst.regime_holds());
        assert!(is_unimodal_on_bracket(&inst, 1001));
        let tau = noiseless_optimal_tau(&inst);
        assert!((tau - noiseless_optimal_tau_by_root(&inst)).abs() < 1e-8);
        assert!((tau - inst.peak(Group::A)).abs() > (tau - inst.peak(Group::B)).abs());
        assert!(
            noiseless_subpop_utility(tau, &inst, Group::A)
                < noiseless_subpop_utility(tau, &inst, Group::B)
        );
    }

    #[test]
    fn fair_utility_limits() {
        let tiny = GaussianInstance::new(1.0, 100.0, 0.5, 1.0, 0.5, 0.5, 1e-9).unwrap();
        let peak = 1.0 / (sqrt_2pi() * 100.0) + 0.5;
        assert!((noisy_fair_utility(&tiny).value - peak).abs() < 1e-12);
        assert!(!noisy_fair_utility(&tiny).precondition_holds);
    }

    #[test]
    fn fair_utility_decreases_with_noise() {
        let inst = unequal_shares();
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let v = noisy_fair_utility(&inst.with_sigma(0.05 * k as f64).unwrap()).excess;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn noise_comparison_requires_equal_shares() {
        assert!(noise_vs_noiseless(&unequal_shares()).is_err());
        let r = noise_vs_noiseless(&boundary_regime()).unwrap();
        assert!(r.noise_wins);
        assert!(boundary_regime().regime_holds());
    }

    #[test]
    fn equal_costs_noise_never_wins() {
        let inst = GaussianInstance::new(1.0, 100.0, 0.6, 0.6, 0.5, 0.5, 0.6).unwrap();
        assert!(!noise_vs_noiseless(&inst).unwrap().noise_wins);
    }

    #[test]
    fn discretize_rejects_bad_grids() {
        assert!(discretize_instance(&unequal_shares(), 8.0, 200).is_err());
        assert!(discretize_instance(&unequal_shares(), 8.0, 101).is_err());
        let d = discretize_instance(&unequal_shares(), 8.0, 201).unwrap();
        assert_eq!(d.space().point(d.center()), 0.0);
        assert!((d.scenario.pop().pi().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(d.scenario.kernel().is_none());
    }
}
