//! Immutable domain types shared by every solver: the feature grid, the
//! population over it, pairwise manipulation costs, classifiers and noise
//! kernels.
//!
//! All types validate on construction and are never mutated afterwards, so
//! they can be shared freely across threads.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for comparisons between probabilities and costs.
pub const TOL: f64 = 1e-9;

/// Tolerance on "sums to one" checks for probability vectors.
pub const SUM_TOL: f64 = 1e-12;

/// Ordered finite grid of feature (or private-signal) values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    points: Vec<f64>,
}

impl FeatureSpace {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("feature space", "needs at least one point"));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(
                "feature space",
                format!("point {i} is not finite"),
            ));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "feature space",
                format!("points must be strictly increasing (at index {})", i + 1),
            ));
        }
        Ok(Self { points })
    }

    /// `n` evenly spaced points covering `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(vec![lo]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| lo + step * i as f64).collect())
    }

    /// The points `1, 2, ..., n`.
    pub fn integers(n: usize) -> Self {
        Self {
            points: (1..=n).map(|i| i as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }
}

/// Probability mass `pi` over the grid together with the qualification
/// probability `h` at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pi: Vec<f64>,
    h: Vec<f64>,
}

impl Population {
    pub fn new(pi: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        Self::with_options(pi, h, false)
    }

    /// Like [`Population::new`], but `allow_nonmonotone_h` skips the check
    /// that `h` is nondecreasing along the grid.
    pub fn with_options(pi: Vec<f64>, h: Vec<f64>, allow_nonmonotone_h: bool) -> Result<Self> {
        Error::check_len("population h", pi.len(), h.len())?;
        if pi.is_empty() {
            return Err(Error::invalid("population", "empty"));
        }
        if let Some(i) = pi.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(
                "pi",
                format!("mass must be nonnegative and finite (index {i})"),
            ));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(
                "pi",
                format!("probability mass must sum to 1, got {total}"),
            ));
        }
        if let Some(i) = h.iter().position(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::invalid(
                "h",
                format!("qualification must lie in [0, 1] (index {i})"),
            ));
        }
        if !allow_nonmonotone_h {
            if let Some(i) = h.windows(2).position(|w| w[1] < w[0]) {
                return Err(Error::invalid(
                    "h",
                    format!(
                        "qualification must be nondecreasing along the grid (index {})",
                        i + 1
                    ),
                ));
            }
        }
        Ok(Self { pi, h })
    }

    /// Builds a population from unnormalized nonnegative weights.
    pub fn from_weights(weights: &[f64], h: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid(
                "pi",
                "weights must have positive finite sum",
            ));
        }
        let mut pi: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // Push the rounding residue onto the heaviest cell so the sum check holds.
        let residue = 1.0 - pi.iter().sum::<f64>();
        if let Some(k) = (0..pi.len()).max_by(|&a, &b| pi[a].total_cmp(&pi[b])) {
            pi[k] += residue;
        }
        Self::new(pi, h)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `Σ π(x)(1 − h(x))`, the accuracy of rejecting everyone.
    pub fn reject_all_accuracy(&self) -> f64 {
        self.pi
            .iter()
            .zip(&self.h)
            .map(|(p, h)| p * (1.0 - h))
            .sum()
    }

    /// `Σ π(x)(2h(x) − 1)`.
    pub fn signed_mass(&self) -> f64 {
        self.pi
            .iter()
            .zip(&self.h)
            .map(|(p, h)| p * (2.0 * h - 1.0))
            .sum()
    }
}

/// Dense matrix of manipulation costs; entry `(i, j)` is the cost of moving
/// from point `i` to point `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    n: usize,
    costs: Vec<f64>,
}

impl CostFunction {
    /// Wraps a square matrix of finite costs. The simple-cost axioms are not
    /// enforced here; see [`validate_simple_cost`].
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("cost matrix", "empty"));
        }
        let mut costs = Vec::with_capacity(n * n);
        for row in rows {
            Error::check_len("cost matrix row", n, row.len())?;
            costs.extend(row);
        }
        if costs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("cost matrix", "entries must be finite"));
        }
        Ok(Self { n, costs })
    }

    /// `c(x, x') = max(a(x') − a(x), 0)` for a nondecreasing sequence `a`.
    pub fn shift(a: &[f64]) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("shift sequence", "empty"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("shift sequence", "entries must be finite"));
        }
        if let Some(i) = a.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::invalid(
                "shift sequence",
                format!("must be nondecreasing (index {})", i + 1),
            ));
        }
        let n = a.len();
        let mut costs = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                costs[i * n + j] = (a[j] - a[i]).max(0.0);
            }
        }
        Ok(Self { n, costs })
    }

    /// Linear upward cost `(x' − x)^+ / scale` on the given grid.
    pub fn linear(space: &FeatureSpace, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("linear cost", "scale must be positive"));
        }
        let pts = space.points();
        let n = pts.len();
        let mut costs = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                costs[i * n + j] = (pts[j] - pts[i]) / scale;
            }
        }
        Ok(Self { n, costs })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            costs: vec![0.0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.costs[from * self.n + to]
    }

    #[inline]
    pub fn row(&self, from: usize) -> &[f64] {
        &self.costs[from * self.n..(from + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.costs.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Entrywise scaling by a nonnegative factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            costs: self.costs.iter().map(|c| c * factor).collect(),
        }
    }

    /// True when `self(x, x') ≥ other(x, x')` for every pair.
    pub fn dominates(&self, other: &CostFunction) -> bool {
        self.n == other.n && self.costs.iter().zip(&other.costs).all(|(a, b)| a >= b)
    }
}

/// Which simple-cost axiom a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    /// `c(x, x') ≥ 0`.
    NonNegative,
    /// Moving to a lower (less qualified) point is free.
    DownwardFree,
    /// `c(x, x'') ≤ c(x, x') + c(x', x'')`.
    SubAdditive,
    /// Jumping to a lower target is no harder than to a higher one.
    LowerTargetEasier,
    /// Jumping from a lower source is no easier than from a higher one.
    LowerSourceHarder,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::NonNegative => "non-negativity",
            Axiom::DownwardFree => "downward moves are free",
            Axiom::SubAdditive => "sub-additivity",
            Axiom::LowerTargetEasier => "lower target is easier",
            Axiom::LowerSourceHarder => "lower source is harder",
        };
        f.write_str(s)
    }
}

/// A single broken axiom together with the (zero-based) indices involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub axiom: Axiom,
    pub indices: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at {:?}", self.axiom, self.indices)
    }
}

/// Checks the simple-cost axioms and returns every violation found.
///
/// Point `j` ranks below point `i` when it has a lower grid index, or, for
/// non-monotone `h`, a strictly lower qualification. Moving to a point that
/// ranks weakly below must be free.
pub fn validate_simple_cost(c: &CostFunction, h: &[f64]) -> Result<Vec<Violation>> {
    let n = c.len();
    Error::check_len("qualification vector", n, h.len())?;
    let below = |j: usize, i: usize| j <= i || h[j] < h[i];
    let mut out = Vec::new();

    for i in 0..n {
        for j in 0..n {
            let cij = c.get(i, j);
            if cij < -TOL {
                out.push(Violation {
                    axiom: Axiom::NonNegative,
                    indices: vec![i, j],
                });
            }
            if below(j, i) && cij.abs() > TOL {
                out.push(Violation {
                    axiom: Axiom::DownwardFree,
                    indices: vec![i, j],
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if c.get(i, k) > c.get(i, j) + c.get(j, k) + TOL {
                    out.push(Violation {
                        axiom: Axiom::SubAdditive,
                        indices: vec![i, j, k],
                    });
                }
            }
        }
    }
    for x in 0..n {
        for lo in 0..n {
            for hi in lo + 1..n {
                if c.get(x, lo) > c.get(x, hi) + TOL {
                    out.push(Violation {
                        axiom: Axiom::LowerTargetEasier,
                        indices: vec![x, lo, hi],
                    });
                }
                if c.get(hi, x) > c.get(lo, x) + TOL {
                    out.push(Violation {
                        axiom: Axiom::LowerSourceHarder,
                        indices: vec![lo, hi, x],
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Per-point acceptance probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    probs: Vec<f64>,
}

impl Classifier {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("classifier", "empty"));
        }
        if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(
                "classifier",
                format!("acceptance probability must lie in [0, 1] (index {i})"),
            ));
        }
        Ok(Self { probs })
    }

    /// `1{x ≥ tau}`, or `1{x > tau}` when `strict`.
    pub fn threshold(space: &FeatureSpace, tau: f64, strict: bool) -> Self {
        let probs = space
            .points()
            .iter()
            .map(|&x| {
                let accept = if strict { x > tau } else { x >= tau };
                if accept {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self { probs }
    }

    /// Accepts exactly the points with index `≥ cut`.
    pub fn cut(n: usize, cut: usize) -> Self {
        Self {
            probs: (0..n).map(|i| if i >= cut { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn constant(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn is_deterministic(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0 || p == 1.0)
    }
}

/// True when `f(x') − f(x) ≤ c(x, x') + TOL` for every ordered pair.
pub fn is_lipschitz(f: &Classifier, c: &CostFunction) -> bool {
    let p = f.probs();
    if p.len() != c.len() {
        return false;
    }
    (0..p.len()).all(|i| {
        let row = c.row(i);
        p.iter().zip(row).all(|(pj, cij)| pj - p[i] <= cij + TOL)
    })
}

/// Row-stochastic matrix; row `y` is the feature distribution `p_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseKernel {
    n: usize,
    rows: Vec<f64>,
}

impl NoiseKernel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("noise kernel", "empty"));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            Error::check_len("noise kernel row", n, row.len())?;
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid(
                    "noise kernel",
                    format!("row {i} has a negative or non-finite entry"),
                ));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::invalid(
                    "noise kernel",
                    format!("row {i} sums to {total}, not 1"),
                ));
            }
            flat.extend(row);
        }
        Ok(Self { n, rows: flat })
    }

    pub fn identity(n: usize) -> Self {
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        Self { n, rows }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, signal: usize, feature: usize) -> f64 {
        self.rows[signal * self.n + feature]
    }

    #[inline]
    pub fn row(&self, signal: usize) -> &[f64] {
        &self.rows[signal * self.n..(signal + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

/// Several subpopulations sharing qualifications and (optionally) a noise
/// kernel, but each with its own manipulation costs.
#[derive(Debug, Clone, PartialEq)]
pub struct SubpopulationScenario {
    space: FeatureSpace,
    pop: Population,
    shares: Vec<f64>,
    costs: Vec<CostFunction>,
    names: Vec<String>,
    kernel: Option<NoiseKernel>,
}

impl SubpopulationScenario {
    pub fn new(
        space: FeatureSpace,
        pop: Population,
        shares: Vec<f64>,
        costs: Vec<CostFunction>,
        kernel: Option<NoiseKernel>,
    ) -> Result<Self> {
        let names = (0..shares.len()).map(default_name).collect();
        Self::with_names(space, pop, shares, costs, names, kernel)
    }

    pub fn with_names(
        space: FeatureSpace,
        pop: Population,
        shares: Vec<f64>,
        costs: Vec<CostFunction>,
        names: Vec<String>,
        kernel: Option<NoiseKernel>,
    ) -> Result<Self> {
        let n = space.len();
        Error::check_len("population", n, pop.len())?;
        if shares.is_empty() {
            return Err(Error::invalid("subpopulations", "need at least one"));
        }
        Error::check_len("subpopulation cost functions", shares.len(), costs.len())?;
        Error::check_len("subpopulation names", shares.len(), names.len())?;
        if shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("shares", "must be nonnegative"));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(
                "shares",
                format!("must sum to 1, got {total}"),
            ));
        }
        for c in &costs {
            Error::check_len("subpopulation cost function", n, c.len())?;
        }
        if let Some(k) = &kernel {
            Error::check_len("noise kernel", n, k.len())?;
        }
        Ok(Self {
            space,
            pop,
            shares,
            costs,
            names,
            kernel,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn pop(&self) -> &Population {
        &self.pop
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn costs(&self) -> &[CostFunction] {
        &self.costs
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kernel(&self) -> Option<&NoiseKernel> {
        self.kernel.as_ref()
    }

    pub fn num_groups(&self) -> usize {
        self.shares.len()
    }

    /// Same scenario with replacement shares.
    pub fn with_shares(&self, shares: Vec<f64>) -> Result<Self> {
        Self::with_names(
            self.space.clone(),
            self.pop.clone(),
            shares,
            self.costs.clone(),
            self.names.clone(),
            self.kernel.clone(),
        )
    }
}

fn default_name(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("G{i}")
    }
}
