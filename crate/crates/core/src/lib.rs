//! Strategic classification on a finite, totally ordered feature space.
//!
//! A Jury publishes a (possibly randomized) classifier; each Contestant pays a
//! cost to report a different feature and moves only when the gain in
//! acceptance probability strictly exceeds that cost. This crate evaluates
//! that game, solves for optimal classifiers, checks Jury-side stability, and
//! models feature noise with per-group costs.
//!
//! ```
//! use stratclass::model::{CostFunction, FeatureSpace, Population, Classifier};
//! use stratclass::game::utility;
//!
//! let pop = Population::new(vec![0.5, 0.5], vec![0.0, 1.0]).unwrap();
//! let c = CostFunction::shift(&[0.0, 0.5]).unwrap();
//! let f = Classifier::new(vec![0.5, 1.0]).unwrap();
//! assert!((utility(&f, &pop, &c) - 0.75).abs() < 1e-12);
//! # let _ = FeatureSpace::integers(2);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` also rejects NaN

pub mod analytic;
pub mod error;
pub mod game;
pub mod model;
pub mod noise;
pub mod random;
pub mod simplex;
pub mod solvers;
pub mod stability;

pub use error::{Error, Result};
pub use game::{best_response, cost_of_strategy, efficiency, utility, BestResponse, Evaluation};
pub use model::{
    Classifier, CostFunction, FeatureSpace, NoiseKernel, Population, SubpopulationScenario,
};
