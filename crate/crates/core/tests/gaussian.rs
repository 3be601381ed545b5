//! Closed forms for the Gaussian instance against the discretized engine.

use std::f64::consts::PI;

use stratclass::analytic::{
    discretize_instance, noiseless_optimal_tau, noiseless_subpop_utility, noisy_fair_utility,
    posterior_line, DiscretizedInstance, GaussianInstance, Group, DEFAULT_HALF_WIDTH_MULT,
};
use stratclass::model::Classifier;
use stratclass::noise::{
    acceptance_prob, feature_marginal, normal_cell_masses, posterior_qualification,
    solve_deterministic_noisy, subpop_accuracies,
};

fn instance(sigma: f64) -> GaussianInstance {
    GaussianInstance::new(1.0, 100.0, 0.5, 1.0, 0.25, 0.75, sigma).unwrap()
}

fn grid(inst: &GaussianInstance, n: usize) -> DiscretizedInstance {
    discretize_instance(inst, DEFAULT_HALF_WIDTH_MULT, n).unwrap()
}

#[test]
fn approximation_constant_is_one_half() {
    let disc = grid(&instance(0.0), 801);
    let pop = disc.scenario.pop();
    let reject_all = pop.reject_all_accuracy();
    assert!((reject_all - 0.5).abs() < 1e-12, "{reject_all}");
}

#[test]
fn feature_marginal_is_wider_normal() {
    for n in [401, 801] {
        let inst = instance(1.0);
        let disc = grid(&inst, n);
        let marginal =
            feature_marginal(disc.scenario.pop(), disc.scenario.kernel().unwrap()).unwrap();
        let wide = normal_cell_masses(disc.space(), 0.0, (1.0f64 + 1.0).sqrt());
        let total: f64 = wide.iter().sum();
        let tv: f64 = marginal
            .iter()
            .zip(&wide)
            .map(|(a, b)| (a - b / total).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 2.0 / n as f64, "n = {n}: total variation {tv:e}");
    }
}

#[test]
fn posterior_qualification_is_shrunk_line() {
    let inst = instance(1.0);
    let disc = grid(&inst, 801);
    let post =
        posterior_qualification(disc.scenario.pop(), disc.scenario.kernel().unwrap()).unwrap();
    let n = disc.space().len();
    for (i, p) in post.iter().enumerate().take(3 * n / 4).skip(n / 4) {
        let x = disc.space().point(i);
        let err = (p - posterior_line(&inst, x)).abs();
        assert!(err <= disc.tol_disc(), "x = {x}: {err:e}");
    }
}

fn noiseless_sweep_error(n: usize) -> f64 {
    let inst = instance(0.0);
    let disc = grid(&inst, n);
    let space = disc.space();
    let mut worst = 0.0f64;
    for cut in 0..n {
        let sim = subpop_accuracies(&disc.scenario, &Classifier::cut(n, cut)).unwrap();
        let tau = space.point(cut);
        worst = worst
            .max((noiseless_subpop_utility(tau, &inst, Group::A) - sim.utilities[0]).abs())
            .max((noiseless_subpop_utility(tau, &inst, Group::B) - sim.utilities[1]).abs());
    }
    assert!(
        worst <= disc.tol_disc(),
        "n = {n}: {worst:e} > {:e}",
        disc.tol_disc()
    );
    worst
}

#[test]
fn noiseless_sweep_converges() {
    let coarse = noiseless_sweep_error(401);
    let fine = noiseless_sweep_error(801);
    assert!(fine < coarse, "{fine:e} !< {coarse:e}");
}

#[test]
fn noiseless_optimum_matches_grid_search() {
    let inst = instance(0.0);
    let disc = grid(&inst, 801);
    let best = solve_deterministic_noisy(&disc.scenario).unwrap();
    let first = best
        .report
        .classifier
        .probs()
        .iter()
        .position(|&p| p == 1.0)
        .unwrap();
    let tau = disc.space().point(first);
    let star = noiseless_optimal_tau(&inst);
    assert!(
        (tau - star).abs() <= disc.step * (1.0 + 1e-9),
        "{tau} vs {star}"
    );
}

#[test]
fn noisy_fair_utility_matches_simulation() {
    let mut errors = Vec::new();
    for n in [401, 801] {
        let inst = instance(1.0);
        let disc = grid(&inst, n);
        let fair = Classifier::threshold(disc.space(), 0.0, true);
        let sim = subpop_accuracies(&disc.scenario, &fair).unwrap();
        assert_eq!(sim.moved, vec![0, 0]);
        let err = (sim.overall - noisy_fair_utility(&inst).value).abs();
        assert!(err <= disc.tol_disc(), "n = {n}: {err:e}");
        errors.push(err);
    }
    assert!(errors[1] <= errors[0] + 1e-15, "{errors:?}");
}

#[test]
fn noise_caps_manipulation_advantage() {
    let inst = instance(1.0);
    let disc = grid(&inst, 801);
    let fair = Classifier::threshold(disc.space(), 0.0, true);
    let q = acceptance_prob(&fair, disc.scenario.kernel().unwrap()).unwrap();
    let pts = disc.space().points();
    let slope = 1.0 / ((2.0 * PI).sqrt() * inst.sigma);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            assert!(q[j] - q[i] <= (pts[j] - pts[i]) * slope + disc.disc_budget);
        }
    }
}
