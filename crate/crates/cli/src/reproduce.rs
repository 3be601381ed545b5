//! Built-in reproduction runs. Each id runs an embedded scenario or a seeded
//! sweep and reports expected against actual values.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratclass::analytic::{
    discretize_instance, noise_vs_noiseless, noiseless_optimal_tau, noisy_fair_utility,
    GaussianInstance, Group, DEFAULT_HALF_WIDTH_MULT,
};
use stratclass::game;
use stratclass::model::{Classifier, CostFunction, FeatureSpace, NoiseKernel, Population};
use stratclass::noise::{solve_deterministic_noisy, subpop_accuracies, NoisyGame};
use stratclass::random;
use stratclass::solvers::{
    grid_oracle, project_lipschitz, solve_deterministic, solve_efficiency, GridOracleConfig,
    Objective,
};
use stratclass::stability::{best_deviation, check_randomization_instability};

use crate::report::{fmt_num, Record, Table};
use crate::CliError;

pub const IDS: [&str; 8] = [
    "ex-3pt",
    "ex-2pt",
    "ex-noise",
    "thm1-sweep",
    "thm2-sweep",
    "thm3",
    "thm4",
    "thm5",
];

/// Grid size for the Gaussian runs.
pub const GRID_POINTS: usize = 801;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

impl Check {
    fn near(name: &str, actual: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            expected: format!("{} ± {}", fmt_num(expected), fmt_num(tol)),
            actual: fmt_num(actual),
            pass: (actual - expected).abs() <= tol,
        }
    }

    fn holds(name: &str, claim: &str, actual: String, pass: bool) -> Self {
        Self {
            name: name.into(),
            expected: claim.into(),
            actual,
            pass,
        }
    }
}

pub struct Outcome {
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self, id: &str) -> Table {
        Table {
            records: self
                .checks
                .iter()
                .map(|c| {
                    let mut r = Record::new();
                    r.push("id", id)
                        .push("check", c.name.as_str())
                        .push("expected", c.expected.as_str())
                        .push("actual", c.actual.as_str())
                        .push("result", if c.pass { "pass" } else { "fail" });
                    r
                })
                .collect(),
        }
    }
}

pub fn run(id: &str, tol: f64) -> Result<Outcome, CliError> {
    let checks = match id {
        "ex-3pt" => three_point()?,
        "ex-2pt" => two_point()?,
        "ex-noise" => noise_example()?,
        "thm1-sweep" => projection_sweep()?,
        "thm2-sweep" => instability_sweep(tol)?,
        "thm3" => minority_disadvantage()?,
        "thm4" => noise_equalizes(tol)?,
        "thm5" => noise_raises_accuracy()?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown reproduction id `{other}`; valid ids: {}",
                IDS.join(", ")
            )))
        }
    };
    Ok(Outcome { checks })
}

const EXACT: f64 = 1e-12;

fn s1() -> (FeatureSpace, Population, CostFunction) {
    let third = 1.0 / 3.0;
    (
        FeatureSpace::integers(3),
        Population::from_weights(&[third; 3], vec![0.0, 1.0, 1.0]).expect("valid"),
        CostFunction::shift(&[0.0, 0.0, 0.9]).expect("valid"),
    )
}

fn s2() -> (FeatureSpace, Population, CostFunction) {
    (
        FeatureSpace::integers(2),
        Population::new(vec![0.5, 0.5], vec![0.0, 1.0]).expect("valid"),
        CostFunction::shift(&[0.0, 0.5]).expect("valid"),
    )
}

fn three_point() -> Result<Vec<Check>, CliError> {
    let (s, p, c) = s1();
    let f = Classifier::new(vec![0.1, 0.0, 1.0])?;
    let monotone = grid_oracle(
        &p,
        &c,
        &GridOracleConfig {
            resolution: 20,
            objective: Objective::Utility,
            monotone_only: true,
        },
    )?;
    let u = game::utility(&f, &p, &c);
    Ok(vec![
        Check::near("U of (0.1, 0, 1)", u, 29.0 / 30.0, EXACT),
        Check::near(
            "best deterministic U",
            solve_deterministic(&s, &p, &c)?.objective,
            2.0 / 3.0,
            EXACT,
        ),
        Check::holds(
            "best monotone U (grid 1/20)",
            "≤ 0.666666666667",
            fmt_num(monotone.objective),
            monotone.objective <= 2.0 / 3.0 + EXACT,
        ),
        Check::near(
            "optimal efficiency",
            solve_efficiency(&p, &c)?.objective,
            2.0 / 3.0,
            EXACT,
        ),
    ])
}

fn two_point() -> Result<Vec<Check>, CliError> {
    let (s, p, c) = s2();
    let f = Classifier::new(vec![0.5, 1.0])?;
    let e = game::evaluate(&f, &p, &c, 1.0);
    let lp = solve_efficiency(&p, &c)?;
    Ok(vec![
        Check::near("U of (0.5, 1)", e.utility, 0.75, EXACT),
        Check::near("C of (0.5, 1)", e.cost, 0.0, EXACT),
        Check::near("E of (0.5, 1)", e.efficiency, 0.75, EXACT),
        Check::near(
            "best deterministic U",
            solve_deterministic(&s, &p, &c)?.objective,
            0.5,
            EXACT,
        ),
        Check::near("optimal efficiency", lp.objective, 0.75, EXACT),
    ])
}

fn noise_example() -> Result<Vec<Check>, CliError> {
    let (_, p, c) = s2();
    let k = NoiseKernel::from_rows(vec![vec![0.5, 0.5], vec![0.0, 1.0]])?;
    let ng = NoisyGame::new(p, k, Classifier::new(vec![0.0, 1.0])?, c)?;
    let e = ng.evaluate(1.0);
    Ok(vec![
        Check::near("noisy U", e.utility, 0.75, EXACT),
        Check::near("noisy E", e.efficiency, 0.75, EXACT),
        Check::near("moves", ng.best_response().num_moved() as f64, 0.0, 0.0),
    ])
}

const SWEEP_SEED: u64 = 0x5eed;
const SWEEP_CASES: usize = 200;

fn projection_sweep() -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let (mut worse, mut unstable_fixpoint, mut worst_gain) = (0, 0, f64::INFINITY);
    for _ in 0..SWEEP_CASES {
        let n = rng.random_range(1..=12);
        let p = random::population(&mut rng, n);
        let c = random::simple_cost(&mut rng, n, 0.6, false);
        let f = random::classifier(&mut rng, n);
        let g = project_lipschitz(&f, &c)?;
        let gain = game::efficiency(&g, &p, &c, 1.0) - game::efficiency(&f, &p, &c, 1.0);
        worst_gain = worst_gain.min(gain);
        worse += usize::from(gain < -1e-9);
        unstable_fixpoint += usize::from(project_lipschitz(&g, &c)? != g);
    }
    Ok(vec![
        Check::holds(
            "projection never lowers efficiency",
            "0 violations",
            format!("{worse} violations, smallest gain {}", fmt_num(worst_gain)),
            worse == 0,
        ),
        Check::holds(
            "projection is idempotent",
            "0 violations",
            format!("{unstable_fixpoint} violations"),
            unstable_fixpoint == 0,
        ),
    ])
}

fn instability_sweep(tol: f64) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    for (label, (s, p, c), f, gain) in [
        ("two-point", s2(), vec![0.5, 1.0], 0.25),
        ("three-point", s1(), vec![0.1, 0.0, 1.0], 1.0 / 30.0),
    ] {
        let f = Classifier::new(f)?;
        let r = check_randomization_instability(&s, &p, &c, &f, tol)?;
        checks.push(Check::holds(
            &format!("{label}: beats deterministic, not stable"),
            "U(f) > U*, equilibrium = false",
            format!(
                "U(f) = {}, U* = {}, equilibrium = {}",
                fmt_num(r.u_f),
                fmt_num(r.u_det_star),
                r.equilibrium
            ),
            r.u_f > r.u_det_star && !r.equilibrium,
        ));
        checks.push(Check::near(
            &format!("{label}: deviation gain"),
            best_deviation(&f, &p, &c)?.gain,
            gain,
            EXACT,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let (mut beating, mut violations) = (0, 0);
    for _ in 0..SWEEP_CASES {
        let n = rng.random_range(2..=6);
        let s = FeatureSpace::integers(n);
        let p = random::population(&mut rng, n);
        let c = random::simple_cost(&mut rng, n, 0.6, false);
        let f = random::classifier(&mut rng, n);
        let r = check_randomization_instability(&s, &p, &c, &f, tol)?;
        beating += usize::from(r.u_f > r.u_det_star + 1e-9);
        violations += usize::from(!r.holds());
    }
    checks.push(Check::holds(
        "random sweep: no stable classifier beats the deterministic optimum",
        "0 violations",
        format!("{violations} violations among {beating} beating classifiers"),
        violations == 0,
    ));
    Ok(checks)
}

fn unequal_costs(sigma: f64) -> Result<GaussianInstance, CliError> {
    Ok(GaussianInstance::new(
        1.0, 100.0, 0.5, 1.0, 0.25, 0.75, sigma,
    )?)
}

fn minority_disadvantage() -> Result<Vec<Check>, CliError> {
    let inst = unequal_costs(0.0)?;
    let disc = discretize_instance(&inst, DEFAULT_HALF_WIDTH_MULT, GRID_POINTS)?;
    let best = solve_deterministic_noisy(&disc.scenario)?;
    let (ua, ub) = (best.breakdown.utilities[0], best.breakdown.utilities[1]);
    let first = best
        .report
        .classifier
        .probs()
        .iter()
        .position(|&p| p == 1.0)
        .unwrap_or(0);
    let tau = disc.space().point(first);
    let star = noiseless_optimal_tau(&inst);
    Ok(vec![
        Check::holds(
            "optimal threshold favours the majority's peak",
            "|τ − peak_A| > |τ − peak_B|",
            format!(
                "τ = {}, peaks {} and {}",
                fmt_num(tau),
                fmt_num(inst.peak(Group::A)),
                fmt_num(inst.peak(Group::B))
            ),
            (tau - inst.peak(Group::A)).abs() > (tau - inst.peak(Group::B)).abs(),
        ),
        Check::near("simulated τ against closed form", tau, star, disc.step),
        Check::holds(
            "minority accuracy is lower",
            "U_A < U_B by more than the grid tolerance",
            format!(
                "U_A = {}, U_B = {}, gap = {}, tolerance = {}",
                fmt_num(ua),
                fmt_num(ub),
                fmt_num(ub - ua),
                fmt_num(disc.tol_disc())
            ),
            ub - ua > disc.tol_disc(),
        ),
    ])
}

fn noise_equalizes(tol: f64) -> Result<Vec<Check>, CliError> {
    let inst = unequal_costs(1.0)?;
    let disc = discretize_instance(&inst, DEFAULT_HALF_WIDTH_MULT, GRID_POINTS)?;
    let fair = Classifier::threshold(disc.space(), 0.0, true);
    let rep = subpop_accuracies(&disc.scenario, &fair)?;
    let closed = noisy_fair_utility(&inst);
    Ok(vec![
        Check::holds(
            "no group moves under 1{x > 0}",
            "0 moves",
            format!("{:?}", rep.moved),
            rep.moved.iter().all(|&m| m == 0),
        ),
        Check::near("accuracy gap", rep.gap().unwrap_or(f64::NAN), 0.0, tol),
        Check::near(
            "U against closed form",
            rep.overall,
            closed.value,
            disc.tol_disc(),
        ),
    ])
}

fn noise_raises_accuracy() -> Result<Vec<Check>, CliError> {
    let t = 0.9 * (2.0 * PI).sqrt();
    let d = 1000.0;
    let inst = GaussianInstance::new(t, d, 0.1, 1.0, 0.5, 0.5, 1.0)?;
    let r = noise_vs_noiseless(&inst)?;
    let quiet = discretize_instance(&inst.with_sigma(0.0)?, DEFAULT_HALF_WIDTH_MULT, GRID_POINTS)?;
    let u_quiet = solve_deterministic_noisy(&quiet.scenario)?.report.objective;
    let noisy = discretize_instance(&inst, DEFAULT_HALF_WIDTH_MULT, GRID_POINTS)?;
    let fair = Classifier::threshold(noisy.space(), 0.0, true);
    let u_noisy = subpop_accuracies(&noisy.scenario, &fair)?.overall;
    Ok(vec![
        Check::holds(
            "noise wins (closed form)",
            "true",
            r.noise_wins.to_string(),
            r.noise_wins,
        ),
        Check::near(
            "d · noiseless excess",
            r.excess_noiseless * d,
            0.9 * (-0.125f64).exp(),
            1e-9,
        ),
        Check::near(
            "d · noisy excess",
            r.excess_noisy * d,
            t * t / (2.0 * PI * (1.0 + t * t)).sqrt(),
            1e-9,
        ),
        Check::holds(
            "noise wins (simulation)",
            "noisy U > best noiseless U",
            format!("{} vs {}", fmt_num(u_noisy), fmt_num(u_quiet)),
            u_noisy > u_quiet,
        ),
    ])
}
