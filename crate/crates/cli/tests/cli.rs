use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use stratclass_cli::scenario::{
    parse_str, ClassifierSpec, CostSpec, GaussianSpec, NoiseSpec, ScenarioFile, SubpopulationSpec,
};

const TWO_POINT: &str = r#"
features = [1, 2]
pi = [0.5, 0.5]
h = [0, 1]

[cost]
kind = "shift"
a = [0, 0.5]

[classifier]
kind = "table"
probs = [0.5, 1]
"#;

const THREE_POINT: &str = r#"
features = [1, 2, 3]
pi = [0.333333333333333333, 0.333333333333333333, 0.333333333333333334]
h = [0, 1, 1]

[cost]
kind = "shift"
a = [0, 0, 0.9]

[classifier]
kind = "table"
probs = [0, 1, 1]
"#;

const UNEQUAL_COSTS: &str = r#"
[gaussian_instance]
t = 1
d = 100
sigma_A = 0.5
sigma_B = 1
s_A = 0.25
grid_points = 401

[classifier]
kind = "threshold"
tau = 2
"#;

const NOISY_GROUPS: &str = r#"
[gaussian_instance]
t = 2.25597258193
d = 1000
sigma_A = 0.1
sigma_B = 1
s_A = 0.5
sigma = 1
grid_points = 401
"#;

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stratclass"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(path: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.insert(1, path.to_str().unwrap());
    run(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn num(v: &serde_json::Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn evaluates_two_point_classifier() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", TWO_POINT);
    let v = json(&run_on(&p, &["evaluate", "--format", "json"]));
    assert!((num(&v, "U") - 0.75).abs() < 1e-12);
    assert!(num(&v, "C").abs() < 1e-12);
    assert!((num(&v, "E") - 0.75).abs() < 1e-12);
}

#[test]
fn evaluates_three_point_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", THREE_POINT);
    let v = json(&run_on(&p, &["evaluate", "--format", "json"]));
    assert!((num(&v, "U") - 2.0 / 3.0).abs() < 1e-9, "{v}");
}

#[test]
fn bad_mass_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "s.toml",
        &TWO_POINT.replace("[0.5, 0.5]", "[0.5, 0.6]"),
    );
    let o = run_on(&p, &["evaluate"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("must sum to 1"), "{err}");
    assert!(err.contains(":3:"), "{err}");
}

#[test]
fn missing_file_is_a_usage_error() {
    let o = run(&["evaluate", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn randomized_efficiency_on_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", TWO_POINT);
    let v = json(&run_on(
        &p,
        &[
            "solve",
            "--objective",
            "efficiency",
            "--mode",
            "randomized",
            "--format",
            "json",
        ],
    ));
    assert!((num(&v, "value") - 0.75).abs() < 1e-9);
    let probs: Vec<f64> = v["classifier"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(
        (probs[0] - 0.5).abs() < 1e-9 && (probs[1] - 1.0).abs() < 1e-9,
        "{probs:?}"
    );
}

#[test]
fn deterministic_utility_on_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", TWO_POINT);
    let v = json(&run_on(&p, &["solve", "--format", "json"]));
    assert!((num(&v, "value") - 0.5).abs() < 1e-12);
}

#[test]
fn randomized_efficiency_on_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", THREE_POINT);
    let v = json(&run_on(
        &p,
        &[
            "solve",
            "--objective",
            "efficiency",
            "--mode",
            "randomized",
            "--format",
            "json",
        ],
    ));
    assert!((num(&v, "value") - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn randomized_utility_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", TWO_POINT);
    let o = run_on(
        &p,
        &["solve", "--objective", "utility", "--mode", "randomized"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("never stable"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn quick_reproductions_pass() {
    for id in ["ex-3pt", "ex-2pt", "ex-noise", "thm4", "thm5"] {
        let o = run(&["reproduce", id]);
        assert!(o.status.success(), "{id}: {}{}", stdout(&o), stderr(&o));
        assert!(!stdout(&o).contains("FAIL"), "{id}: {}", stdout(&o));
    }
}

#[test]
fn unknown_reproduction_lists_ids() {
    let o = run(&["reproduce", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for id in ["ex-3pt", "thm1-sweep", "thm5"] {
        assert!(err.contains(id), "{err}");
    }
}

#[test]
fn sweep_emits_header_and_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", UNEQUAL_COSTS);
    let o = run_on(&p, &["sweep", "--param", "tau", "--range", "1.5:2.5:2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,U,U_A,U_B,gap,E");
    assert_eq!(lines.len(), 3);
}

#[test]
fn tau_sweep_shows_minority_gap() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", UNEQUAL_COSTS);
    let o = run_on(
        &p,
        &[
            "sweep", "--param", "tau", "--range", "2:2.6:4", "--format", "json",
        ],
    );
    let rows = json(&o);
    for row in rows.as_array().unwrap() {
        assert!(num(row, "gap") > 0.0, "{row}");
        assert!(num(row, "U_B") > num(row, "U_A"), "{row}");
    }
}

#[test]
fn sigma_sweep_closes_the_gap_under_wide_noise() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", NOISY_GROUPS);
    let o = run_on(
        &p,
        &[
            "sweep", "--param", "sigma", "--range", "1:2:3", "--format", "json",
        ],
    );
    let rows = json(&o);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(num(row, "gap").abs() < 1e-12, "{row}");
        assert!(num(row, "U") > 0.5, "{row}");
    }
}

#[test]
fn share_sweep_needs_two_groups() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", TWO_POINT);
    let o = run_on(&p, &["sweep", "--param", "s_A", "--range", "0:1:3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", UNEQUAL_COSTS);
    let o = run_on(&p, &["sweep", "--param", "tau", "--range", "0:1:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_thread_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", UNEQUAL_COSTS);
    let args = [
        "sweep",
        "--param",
        "tau",
        "--range",
        "1.8:2.8:6",
        "--threads",
        "1",
    ];
    let a = run_on(&p, &args);
    let b = run_on(&p, &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let many = run_on(
        &p,
        &[
            "sweep",
            "--param",
            "tau",
            "--range",
            "1.8:2.8:6",
            "--threads",
            "4",
        ],
    );
    assert_eq!(a.stdout, many.stdout);
}

#[test]
fn json_and_csv_carry_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.toml", UNEQUAL_COSTS);
    let v = json(&run_on(&p, &["evaluate", "--format", "json"]));
    let csv = stdout(&run_on(&p, &["evaluate", "--format", "csv"]));
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (k, s) in header.iter().zip(values) {
        let from_csv: f64 = s.parse().unwrap();
        assert_eq!(from_csv, num(&v, k), "{k}");
    }
}

fn finite() -> impl Strategy<Value = f64> {
    -1e6..1e6f64
}

fn cost_spec() -> impl Strategy<Value = CostSpec> {
    prop_oneof![
        prop::collection::vec(prop::collection::vec(finite(), 1..4), 1..4)
            .prop_map(|matrix| CostSpec::Tabular { matrix }),
        prop::collection::vec(finite(), 1..5).prop_map(|a| CostSpec::Shift { a }),
        finite().prop_map(|sigma| CostSpec::Linear { sigma }),
    ]
}

fn noise_spec() -> impl Strategy<Value = NoiseSpec> {
    prop_oneof![
        Just(NoiseSpec::None),
        prop::collection::vec(prop::collection::vec(finite(), 1..4), 1..4)
            .prop_map(|matrix| NoiseSpec::Tabular { matrix }),
        finite().prop_map(|sigma| NoiseSpec::Gaussian { sigma }),
    ]
}

fn classifier_spec() -> impl Strategy<Value = ClassifierSpec> {
    prop_oneof![
        (finite(), any::<bool>())
            .prop_map(|(tau, strict)| ClassifierSpec::Threshold { tau, strict }),
        prop::collection::vec(0.0..=1.0f64, 1..5).prop_map(|probs| ClassifierSpec::Table { probs }),
    ]
}

fn gaussian_spec() -> impl Strategy<Value = GaussianSpec> {
    (
        finite(),
        finite(),
        finite(),
        finite(),
        finite(),
        finite(),
        1usize..2000,
        finite(),
    )
        .prop_map(
            |(t, d, sigma_a, sigma_b, s_a, sigma, grid_points, halfwidth_mult)| GaussianSpec {
                t,
                d,
                sigma_a,
                sigma_b,
                s_a,
                sigma,
                grid_points,
                halfwidth_mult,
            },
        )
}

fn scenario_file() -> impl Strategy<Value = ScenarioFile> {
    let vecs = || prop::option::of(prop::collection::vec(finite(), 1..5));
    let subpop = (
        prop::option::of("[a-zA-Z][a-zA-Z0-9_]{0,8}"),
        0.0..=1.0f64,
        cost_spec(),
    )
        .prop_map(|(name, share, cost)| SubpopulationSpec { name, share, cost });
    (
        (vecs(), vecs(), vecs(), any::<bool>()),
        prop::option::of(cost_spec()),
        prop::option::of(noise_spec()),
        prop::collection::vec(subpop, 0..3),
        prop::option::of(classifier_spec()),
        prop::option::of(gaussian_spec()),
    )
        .prop_map(
            |(
                (features, pi, h, allow_nonmonotone_h),
                cost,
                noise,
                subpopulations,
                classifier,
                gaussian_instance,
            )| {
                ScenarioFile {
                    features,
                    pi,
                    h,
                    allow_nonmonotone_h,
                    cost,
                    noise,
                    subpopulations,
                    classifier,
                    gaussian_instance,
                }
            },
        )
}

proptest! {
    #[test]
    fn scenario_files_round_trip(file in scenario_file()) {
        let text = toml::to_string(&file).unwrap();
        let back = parse_str(&text, "roundtrip").unwrap();
        prop_assert_eq!(back, file, "{}", text);
    }
}

#[test]
fn linear_cost_accepts_long_kind_name() {
    let body = r#"
features = [0, 1]
pi = [0.5, 0.5]
h = [0, 1]
cost = { kind = "linear_eq54", sigma = 1 }
classifier = { kind = "threshold", tau = 1 }
"#;
    let file = parse_str(body, "alias").unwrap();
    assert_eq!(file.cost, Some(CostSpec::Linear { sigma: 1.0 }));
}
