use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stratclass::game::{self, best_response, best_response_values, static_efficiency};
use stratclass::model::{
    is_lipschitz, validate_simple_cost, Classifier, FeatureSpace, NoiseKernel,
};
use stratclass::model::{Population, SubpopulationScenario};
use stratclass::noise::{acceptance_prob, gaussian_kernel, subpop_accuracies, NoisyGame};
use stratclass::random;
use stratclass::solvers::{
    efficiency_grid_oracle, project_lipschitz, solve_deterministic_for, solve_efficiency, Objective,
};
use stratclass::stability::{best_deviation, derandomize, is_jury_equilibrium, pooled_mass};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lipschitz_classifiers_are_monotone(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let c = random::simple_cost(&mut r, n, 0.7, false);
        let g = project_lipschitz(&random::classifier(&mut r, n), &c).unwrap();
        prop_assert!(is_lipschitz(&g, &c));
        prop_assert!(g.probs().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn shift_costs_are_simple(seed in any::<u64>(), n in 1usize..15) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::shift_cost(&mut r, n, 0.4);
        prop_assert!(validate_simple_cost(&c, p.h()).unwrap().is_empty());
    }

    #[test]
    fn jury_functionals_are_bounded(seed in any::<u64>(), n in 1usize..12, beta in 0.0f64..3.0) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.7, false);
        let f = random::classifier(&mut r, n);
        let e = game::evaluate(&f, &p, &c, beta);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e.utility));
        prop_assert!(e.cost >= 0.0);
        prop_assert!(e.efficiency <= e.utility + 1e-15);
    }

    #[test]
    fn lipschitz_classifiers_induce_no_moves(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.7, false);
        let g = project_lipschitz(&random::classifier(&mut r, n), &c).unwrap();
        prop_assert_eq!(best_response(&g, &c).num_moved(), 0);
        prop_assert_eq!(game::cost_of_strategy(&g, &p, &c), 0.0);
        let e = game::efficiency(&g, &p, &c, 1.0);
        prop_assert!((e - static_efficiency(&g, &p)).abs() < 1e-12);
    }

    #[test]
    fn best_response_lands_on_argmax(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let c = random::simple_cost(&mut r, n, 0.7, false);
        let f = random::classifier(&mut r, n);
        let br = best_response(&f, &c);
        let v = f.probs();
        for x in 0..n {
            let y = br.target(x);
            prop_assert!(y == x || v[y] - v[x] > c.get(x, y));
            for z in 0..n {
                if z != x && v[z] - v[x] > c.get(x, z) {
                    prop_assert!(v[z] < v[y] || (v[z] == v[y] && z >= y));
                }
            }
            prop_assert!(v[y] >= v[x]);
        }
    }

    #[test]
    fn projection_improves_and_is_idempotent(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.6, false);
        let f = random::classifier(&mut r, n);
        let g = project_lipschitz(&f, &c).unwrap();
        prop_assert!(game::efficiency(&g, &p, &c, 1.0) >= game::efficiency(&f, &p, &c, 1.0) - 1e-9);
        let gg = project_lipschitz(&g, &c).unwrap();
        prop_assert_eq!(gg, g);
    }

    #[test]
    fn lp_beats_deterministic_thresholds(seed in any::<u64>(), n in 1usize..15) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.6, false);
        let lp = solve_efficiency(&p, &c).unwrap();
        let det = solve_deterministic_for(
            &FeatureSpace::integers(n), &p, &c, Objective::Efficiency { beta: 1.0 },
        ).unwrap();
        prop_assert!(lp.objective >= det.objective - 1e-9);
        prop_assert!(lp.objective >= static_efficiency(&lp.classifier, &p) - 1e-12);
    }

    #[test]
    fn pooled_mass_is_conserved(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.6, false);
        let f = random::classifier(&mut r, n);
        let m = pooled_mass(&f, &p, &c);
        prop_assert!((m.total() - p.signed_mass()).abs() < 1e-12);
    }

    #[test]
    fn deviation_gain_detects_instability(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.6, false);
        let f = random::classifier(&mut r, n);
        let d = best_deviation(&f, &p, &c).unwrap();
        prop_assert!(d.gain >= 0.0);
        prop_assert_eq!(d.gain == 0.0, is_jury_equilibrium(&f, &p, &c, 0.0));
        let det = derandomize(&f);
        prop_assert!(det.is_deterministic());
        if is_jury_equilibrium(&f, &p, &c, 0.0) {
            prop_assert!(game::utility(&det, &p, &c) >= game::utility(&f, &p, &c) - 1e-9);
        }
    }

    #[test]
    fn identity_kernel_is_bit_exact(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.6, false);
        let f = random::classifier(&mut r, n);
        let ng = NoisyGame::allow_randomized(p.clone(), NoiseKernel::identity(n), f.clone(), c.clone()).unwrap();
        prop_assert_eq!(ng.acceptance(), f.probs().to_vec());
        prop_assert_eq!(ng.evaluate(0.7), game::evaluate(&f, &p, &c, 0.7));
    }

    #[test]
    fn overall_accuracy_is_share_weighted(seed in any::<u64>(), n in 2usize..10, s in 0.0f64..1.0) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let costs = vec![
            random::simple_cost(&mut r, n, 0.6, false),
            random::simple_cost(&mut r, n, 0.6, false),
        ];
        let sc = SubpopulationScenario::new(
            FeatureSpace::integers(n), p, vec![s, 1.0 - s], costs, None,
        ).unwrap();
        let f = Classifier::cut(n, n / 2);
        let rep = subpop_accuracies(&sc, &f).unwrap();
        prop_assert_eq!(rep.overall, s * rep.utilities[0] + (1.0 - s) * rep.utilities[1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lp_beats_grid_oracle(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let p = random::population(&mut r, n);
        let c = random::simple_cost(&mut r, n, 0.8, false);
        let lp = solve_efficiency(&p, &c).unwrap();
        let oracle = efficiency_grid_oracle(&p, &c, 10).unwrap();
        prop_assert!(lp.objective >= oracle.objective - 0.1);
    }

    #[test]
    fn gaussian_acceptance_is_monotone_and_bounded(
        sigma in 0.05f64..2.0,
        n in 21usize..120,
        cut_frac in 0.0f64..1.0,
    ) {
        let space = FeatureSpace::uniform(-3.0, 3.0, n).unwrap();
        let k = gaussian_kernel(&space, sigma).unwrap();
        let f = Classifier::cut(n, (cut_frac * n as f64) as usize);
        let q = acceptance_prob(&f, &k).unwrap();
        prop_assert!(q.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn worked_example_costs_are_simple() {
    use stratclass::model::CostFunction;
    let third = 1.0 / 3.0;
    let p1 = Population::from_weights(&[third; 3], vec![0.0, 1.0, 1.0]).unwrap();
    let c1 = CostFunction::shift(&[0.0, 0.0, 0.9]).unwrap();
    assert!(validate_simple_cost(&c1, p1.h()).unwrap().is_empty());
    let c2 = CostFunction::shift(&[0.0, 0.5]).unwrap();
    assert!(validate_simple_cost(&c2, &[0.0, 1.0]).unwrap().is_empty());
    let space = FeatureSpace::uniform(-4.0, 4.0, 201).unwrap();
    let c3 = CostFunction::linear(&space, (2.0 * std::f64::consts::PI).sqrt() * 0.5).unwrap();
    let h: Vec<f64> = space
        .points()
        .iter()
        .map(|y| (y / 200.0 + 0.5).clamp(0.0, 1.0))
        .collect();
    assert!(validate_simple_cost(&c3, &h).unwrap().is_empty());
}

#[test]
fn knife_edge_gain_does_not_move() {
    use stratclass::model::CostFunction;
    let c = CostFunction::shift(&[0.0, 0.5]).unwrap();
    let br = best_response_values(&[0.5, 1.0], &c);
    assert_eq!(br.num_moved(), 0);
    assert_eq!(br.knife_edges(), 1);
}
