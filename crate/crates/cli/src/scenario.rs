//! Scenario files: TOML documents describing a game, parsed into engine types.
//!
//! ```toml
//! features = [1, 2]
//! pi = [0.5, 0.5]
//! h = [0, 1]
//!
//! [cost]
//! kind = "shift"
//! a = [0, 0.5]
//!
//! [classifier]
//! kind = "table"
//! probs = [0.5, 1]
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stratclass::analytic::{discretize_instance, DiscretizedInstance, GaussianInstance};
use stratclass::model::{
    Classifier, CostFunction, FeatureSpace, NoiseKernel, Population, SubpopulationScenario,
};
use stratclass::noise::gaussian_kernel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_nonmonotone_h: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subpopulations: Vec<SubpopulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_instance: Option<GaussianSpec>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Tabular {
        matrix: Vec<Vec<f64>>,
    },
    Shift {
        a: Vec<f64>,
    },
    /// `(x' − x)^+ / (√(2π) sigma)`.
    #[serde(alias = "linear_eq54")]
    Linear {
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    Tabular { matrix: Vec<Vec<f64>> },
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubpopulationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub share: f64,
    pub cost: CostSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Threshold {
        tau: f64,
        #[serde(default)]
        strict: bool,
    },
    Table {
        probs: Vec<f64>,
    },
}

impl ClassifierSpec {
    pub fn build(&self, space: &FeatureSpace) -> Result<Classifier, String> {
        match self {
            ClassifierSpec::Threshold { tau, strict } => {
                Ok(Classifier::threshold(space, *tau, *strict))
            }
            ClassifierSpec::Table { probs } => {
                Classifier::new(probs.clone()).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub t: f64,
    pub d: f64,
    #[serde(rename = "sigma_A")]
    pub sigma_a: f64,
    #[serde(rename = "sigma_B")]
    pub sigma_b: f64,
    #[serde(rename = "s_A")]
    pub s_a: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_halfwidth_mult")]
    pub halfwidth_mult: f64,
}

fn default_grid_points() -> usize {
    801
}

fn default_halfwidth_mult() -> f64 {
    stratclass::analytic::DEFAULT_HALF_WIDTH_MULT
}

impl GaussianSpec {
    pub fn instance(&self) -> Result<GaussianInstance, String> {
        GaussianInstance::new(
            self.t,
            self.d,
            self.sigma_a,
            self.sigma_b,
            self.s_a,
            1.0 - self.s_a,
            self.sigma,
        )
        .map_err(|e| e.to_string())
    }

    pub fn discretize(&self, inst: &GaussianInstance) -> Result<DiscretizedInstance, String> {
        discretize_instance(inst, self.halfwidth_mult, self.grid_points).map_err(|e| e.to_string())
    }
}

/// A problem with a scenario file, pointing at the offending line when it
/// can be located.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.origin, line, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for Diagnostic {}

/// A scenario resolved into engine types.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ScenarioFile,
    pub space: FeatureSpace,
    pub pop: Population,
    /// Cost of the whole population, or of the first group.
    pub cost: CostFunction,
    pub kernel: Option<NoiseKernel>,
    /// Present when the file declares groups or a Gaussian instance.
    pub groups: Option<SubpopulationScenario>,
    pub classifier: Option<Classifier>,
    pub gaussian: Option<(GaussianInstance, DiscretizedInstance)>,
}

impl Loaded {
    /// The scenario viewed as groups; a single-population file becomes one
    /// group holding everything.
    pub fn as_groups(&self) -> Result<SubpopulationScenario, String> {
        match &self.groups {
            Some(g) => Ok(g.clone()),
            None => SubpopulationScenario::with_names(
                self.space.clone(),
                self.pop.clone(),
                vec![1.0],
                vec![self.cost.clone()],
                vec!["all".to_string()],
                self.kernel.clone(),
            )
            .map_err(|e| e.to_string()),
        }
    }
}

pub fn load_path(path: &Path) -> Result<Loaded, Diagnostic> {
    let origin = path.display().to_string();
    let src = std::fs::read_to_string(path).map_err(|e| Diagnostic {
        origin: origin.clone(),
        line: None,
        message: format!("cannot read file: {e}"),
    })?;
    load_str(&src, &origin)
}

pub fn parse_str(src: &str, origin: &str) -> Result<ScenarioFile, Diagnostic> {
    toml::from_str(src).map_err(|e| Diagnostic {
        origin: origin.to_string(),
        line: e.span().map(|s| line_at(src, s.start)),
        message: e.message().to_string(),
    })
}

pub fn load_str(src: &str, origin: &str) -> Result<Loaded, Diagnostic> {
    let file = parse_str(src, origin)?;
    resolve(file).map_err(|(key, message)| Diagnostic {
        origin: origin.to_string(),
        line: line_of_key(src, key),
        message,
    })
}

fn line_at(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// First line that assigns `key` or opens a `[key]` / `[[key]]` table.
fn line_of_key(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let l = l.trim_start();
            let table = l.trim_start_matches('[').trim_end().trim_end_matches(']');
            if l.starts_with('[') {
                return table == key;
            }
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

type Resolve<T> = Result<T, (&'static str, String)>;

fn at<T, E: fmt::Display>(key: &'static str, r: Result<T, E>) -> Resolve<T> {
    r.map_err(|e| (key, format!("{key}: {e}")))
}

fn linear_scale(sigma: f64) -> f64 {
    (2.0 * PI).sqrt() * sigma
}

fn build_cost(spec: &CostSpec, space: &FeatureSpace, key: &'static str) -> Resolve<CostFunction> {
    let c = match spec {
        CostSpec::Tabular { matrix } => CostFunction::from_matrix(matrix.clone()),
        CostSpec::Shift { a } => CostFunction::shift(a),
        CostSpec::Linear { sigma } => CostFunction::linear(space, linear_scale(*sigma)),
    };
    let c = at(key, c)?;
    if c.len() != space.len() {
        return Err((
            key,
            format!(
                "{key}: has {} points but features has {}",
                c.len(),
                space.len()
            ),
        ));
    }
    Ok(c)
}

pub fn resolve(file: ScenarioFile) -> Resolve<Loaded> {
    if let Some(g) = &file.gaussian_instance {
        return resolve_gaussian(file.clone(), g);
    }
    let features = file
        .features
        .clone()
        .ok_or(("features", "missing `features`".to_string()))?;
    let space = at("features", FeatureSpace::new(features))?;
    let pi = file.pi.clone().ok_or(("pi", "missing `pi`".to_string()))?;
    let h = file.h.clone().ok_or(("h", "missing `h`".to_string()))?;
    if pi.len() != space.len() {
        return Err((
            "pi",
            format!(
                "pi: has {} entries but features has {}",
                pi.len(),
                space.len()
            ),
        ));
    }
    let pop = Population::with_options(pi, h, file.allow_nonmonotone_h).map_err(|e| {
        let key = if e.to_string().contains("invalid h") {
            "h"
        } else {
            "pi"
        };
        (key, e.to_string())
    })?;

    let kernel = match &file.noise {
        None | Some(NoiseSpec::None) => None,
        Some(NoiseSpec::Tabular { matrix }) => {
            let k = at("noise", NoiseKernel::from_rows(matrix.clone()))?;
            if k.len() != space.len() {
                return Err(("noise", format!("noise: kernel has {} rows", k.len())));
            }
            Some(k)
        }
        Some(NoiseSpec::Gaussian { sigma }) => Some(at("noise", gaussian_kernel(&space, *sigma))?),
    };

    let groups = if file.subpopulations.is_empty() {
        None
    } else {
        let mut costs = Vec::new();
        let mut shares = Vec::new();
        let mut names = Vec::new();
        for (i, s) in file.subpopulations.iter().enumerate() {
            costs.push(build_cost(&s.cost, &space, "subpopulations")?);
            shares.push(s.share);
            names.push(s.name.clone().unwrap_or_else(|| default_name(i)));
        }
        Some(at(
            "subpopulations",
            SubpopulationScenario::with_names(
                space.clone(),
                pop.clone(),
                shares,
                costs,
                names,
                kernel.clone(),
            ),
        )?)
    };

    let cost = match (&file.cost, &groups) {
        (Some(spec), _) => build_cost(spec, &space, "cost")?,
        (None, Some(g)) => g.costs()[0].clone(),
        (None, None) => return Err(("cost", "missing `[cost]` table".to_string())),
    };

    let classifier = match &file.classifier {
        Some(spec) => {
            let f = at("classifier", spec.build(&space))?;
            if f.len() != space.len() {
                return Err((
                    "classifier",
                    format!(
                        "classifier: has {} entries but features has {}",
                        f.len(),
                        space.len()
                    ),
                ));
            }
            Some(f)
        }
        None => None,
    };

    Ok(Loaded {
        file,
        space,
        pop,
        cost,
        kernel,
        groups,
        classifier,
        gaussian: None,
    })
}

fn default_name(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("G{i}")
    }
}

fn resolve_gaussian(file: ScenarioFile, spec: &GaussianSpec) -> Resolve<Loaded> {
    if file.features.is_some() || file.pi.is_some() || file.h.is_some() {
        return Err((
            "gaussian_instance",
            "gaussian_instance builds its own grid; drop features, pi and h".to_string(),
        ));
    }
    let inst = at("gaussian_instance", spec.instance())?;
    let disc = at("gaussian_instance", spec.discretize(&inst))?;
    let scenario = disc.scenario.clone();
    let classifier = match &file.classifier {
        Some(ClassifierSpec::Threshold { .. }) | None => {
            let spec = file
                .classifier
                .clone()
                .unwrap_or(ClassifierSpec::Threshold {
                    tau: 0.0,
                    strict: true,
                });
            Some(at("classifier", spec.build(scenario.space()))?)
        }
        Some(ClassifierSpec::Table { .. }) => {
            return Err((
                "classifier",
                "classifier: a gaussian_instance grid needs a threshold classifier".to_string(),
            ))
        }
    };
    Ok(Loaded {
        file,
        space: scenario.space().clone(),
        pop: scenario.pop().clone(),
        cost: scenario.costs()[0].clone(),
        kernel: scenario.kernel().cloned(),
        groups: Some(scenario),
        classifier,
        gaussian: Some((inst, disc)),
    })
}
