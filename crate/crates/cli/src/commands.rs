use rayon::prelude::*;
use stratclass::game;
use stratclass::model::Classifier;
use stratclass::noise::{
    solve_deterministic_noisy_for, subpop_accuracies, NoisyGame, SubpopReport,
};
use stratclass::solvers::{
    solve_deterministic_for, solve_efficiency_weighted, Objective, SolveReport,
};

use crate::report::{Record, Table};
use crate::scenario::{ClassifierSpec, Loaded};
use crate::CliError;

/// Grid resolution for randomized solves at `beta ≠ 1`.
pub const ORACLE_RESOLUTION: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ObjectiveArg {
    Utility,
    Efficiency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Deterministic,
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Tau,
    Sigma,
    #[value(name = "s_A")]
    ShareA,
}

fn push_groups(r: &mut Record, rep: &SubpopReport, names: &[String]) {
    if names.len() < 2 {
        return;
    }
    for (name, u) in names.iter().zip(&rep.utilities) {
        r.push(format!("U_{name}"), *u);
    }
    r.push("gap", rep.gap());
    for (name, m) in names.iter().zip(&rep.moved) {
        r.push(format!("moved_{name}"), *m);
    }
}

fn classifier_of(l: &Loaded) -> Result<&Classifier, CliError> {
    l.classifier
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs a [classifier] table".into()))
}

pub fn evaluate(l: &Loaded, beta: f64) -> Result<Table, CliError> {
    let f = classifier_of(l)?;
    let mut r = Record::new();
    if let Some(groups) = &l.groups {
        let rep = subpop_accuracies(groups, f)?;
        r.push("U", rep.overall)
            .push("C", rep.overall_cost)
            .push("E", rep.overall_efficiency(beta));
        push_groups(&mut r, &rep, groups.names());
    } else if let Some(k) = &l.kernel {
        let ng = NoisyGame::new(l.pop.clone(), k.clone(), f.clone(), l.cost.clone())?;
        let e = ng.evaluate(beta);
        r.push("U", e.utility)
            .push("C", e.cost)
            .push("E", e.efficiency)
            .push("moved", ng.best_response().num_moved());
    } else {
        let e = game::evaluate(f, &l.pop, &l.cost, beta);
        r.push("U", e.utility)
            .push("C", e.cost)
            .push("E", e.efficiency)
            .push("moved", game::best_response(f, &l.cost).num_moved());
    }
    Ok(Table::single(r))
}

pub const INSTABILITY_MESSAGE: &str = "randomized utility maximization is rejected: \
a randomized classifier that beats the best deterministic threshold is never stable, \
because once contestants respond the Jury gains by reclassifying the features they moved to; \
use --mode deterministic, or --objective efficiency";

pub fn solve(
    l: &Loaded,
    objective: ObjectiveArg,
    mode: Mode,
    beta: f64,
) -> Result<Table, CliError> {
    let obj = match objective {
        ObjectiveArg::Utility => Objective::Utility,
        ObjectiveArg::Efficiency => Objective::Efficiency { beta },
    };
    let noisy = l.groups.is_some() || l.kernel.is_some();
    let (report, breakdown) = match (mode, objective) {
        (Mode::Randomized, ObjectiveArg::Utility) => {
            return Err(CliError::Usage(INSTABILITY_MESSAGE.into()))
        }
        (Mode::Randomized, ObjectiveArg::Efficiency) if noisy => {
            return Err(CliError::Usage(
                "randomized solving needs a single population without noise".into(),
            ))
        }
        (Mode::Randomized, ObjectiveArg::Efficiency) => (
            solve_efficiency_weighted(&l.pop, &l.cost, beta, ORACLE_RESOLUTION)?,
            None,
        ),
        (Mode::Deterministic, _) if noisy => {
            let s = solve_deterministic_noisy_for(&l.as_groups().map_err(CliError::Usage)?, obj)?;
            (s.report, Some(s.breakdown))
        }
        (Mode::Deterministic, _) => (
            solve_deterministic_for(&l.space, &l.pop, &l.cost, obj)?,
            None,
        ),
    };
    Ok(Table::single(solve_record(
        &report,
        objective,
        breakdown.as_ref(),
        l,
    )))
}

fn solve_record(
    s: &SolveReport,
    objective: ObjectiveArg,
    breakdown: Option<&SubpopReport>,
    l: &Loaded,
) -> Record {
    let mut r = Record::new();
    let name = match objective {
        ObjectiveArg::Utility => "U*",
        ObjectiveArg::Efficiency => "E*",
    };
    r.push("objective", name)
        .push("value", s.objective)
        .push("method", format!("{:?}", s.method).to_lowercase());
    if let Some(rule) = s.rule {
        r.push("rule", rule.to_string()).push("tau", rule.tau());
    }
    if let (Some(b), Some(g)) = (breakdown, &l.groups) {
        push_groups(&mut r, b, g.names());
    }
    r.push("classifier", s.classifier.probs().to_vec());
    r
}

/// Parses `lo:hi:steps`.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(format!("range must be lo:hi:steps, got `{s}`"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad range start `{lo}`"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad range end `{hi}`"))?;
    let steps: usize = steps
        .parse()
        .map_err(|_| format!("bad step count `{steps}`"))?;
    if steps < 2 {
        return Err("range needs at least 2 steps".into());
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(format!("range needs finite lo ≤ hi, got {lo}:{hi}"));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

pub const SWEEP_HEADER: [&str; 6] = ["param", "U", "U_A", "U_B", "gap", "E"];

fn sweep_row(param: f64, rep: &SubpopReport, beta: f64) -> Record {
    let mut r = Record::new();
    let group = |i: usize| (rep.utilities.len() >= 2).then(|| rep.utilities[i]);
    r.push("param", param)
        .push("U", rep.overall)
        .push("U_A", group(0))
        .push("U_B", group(1))
        .push("gap", rep.gap())
        .push("E", rep.overall_efficiency(beta));
    r
}

fn threshold_spec(l: &Loaded) -> Result<(f64, bool), CliError> {
    match &l.file.classifier {
        Some(ClassifierSpec::Threshold { tau, strict }) => Ok((*tau, *strict)),
        None if l.gaussian.is_some() => Ok((0.0, true)),
        _ => Err(CliError::Usage(
            "sigma and s_A sweeps re-evaluate a threshold classifier; declare one in [classifier]"
                .into(),
        )),
    }
}

pub fn sweep(l: &Loaded, param: SweepParam, values: &[f64], beta: f64) -> Result<Table, CliError> {
    let rows: Vec<Result<Record, CliError>> = match param {
        SweepParam::Tau => {
            let groups = l.as_groups().map_err(CliError::Usage)?;
            let strict = matches!(
                l.file.classifier,
                Some(ClassifierSpec::Threshold { strict: true, .. })
            );
            values
                .par_iter()
                .map(|&tau| {
                    let f = Classifier::threshold(&l.space, tau, strict);
                    Ok(sweep_row(tau, &subpop_accuracies(&groups, &f)?, beta))
                })
                .collect()
        }
        SweepParam::Sigma => {
            let (inst, _) = l.gaussian.as_ref().ok_or_else(|| {
                CliError::Usage("a sigma sweep needs a [gaussian_instance] table".into())
            })?;
            let spec = l
                .file
                .gaussian_instance
                .clone()
                .expect("gaussian spec present");
            let (tau, strict) = threshold_spec(l)?;
            values
                .par_iter()
                .map(|&sigma| {
                    let inst = inst.with_sigma(sigma)?;
                    let disc = spec.discretize(&inst).map_err(CliError::Usage)?;
                    let f = Classifier::threshold(disc.space(), tau, strict);
                    Ok(sweep_row(
                        sigma,
                        &subpop_accuracies(&disc.scenario, &f)?,
                        beta,
                    ))
                })
                .collect()
        }
        SweepParam::ShareA => {
            let groups = l
                .groups
                .as_ref()
                .filter(|g| g.num_groups() == 2)
                .ok_or_else(|| {
                    CliError::Usage("an s_A sweep needs exactly two subpopulations".into())
                })?;
            let f = classifier_of(l)?;
            values
                .par_iter()
                .map(|&s| {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(CliError::Usage(format!("s_A = {s} is outside [0, 1]")));
                    }
                    let g = groups.with_shares(vec![s, 1.0 - s])?;
                    Ok(sweep_row(s, &subpop_accuracies(&g, f)?, beta))
                })
                .collect()
        }
    };
    Ok(Table {
        records: rows.into_iter().collect::<Result<_, _>>()?,
    })
}
