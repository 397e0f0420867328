use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotsize"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = run(&all);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

const VARIANCE: &[&str] = &[
    "plan-variance",
    "--sigma",
    "4",
    "--delta",
    "1",
    "--underpower-prob",
    "0.2",
    "--underpower-threshold",
    "0.6",
];

#[test]
fn variance_plan_reports_pilot_size() {
    let doc = json(VARIANCE);
    assert_eq!(doc["results"]["pilot_n"], 12);
    assert_eq!(doc["config"]["alpha"], 0.05);
    assert_eq!(doc["config"]["power"], 0.8);
    assert_eq!(doc["results"]["n_lower"], 158);
    let doc = json(&[
        "plan-variance",
        "--sigma",
        "4",
        "--delta",
        "1",
        "--underpower-prob",
        "0.1",
        "--underpower-threshold",
        "0.6",
    ]);
    assert_eq!(doc["results"]["pilot_n"], 25);
}

#[test]
fn human_output_traces_each_step() {
    let o = run(VARIANCE);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in [
        "Configuration",
        "N_L",
        "σ_L",
        "N_pL",
        "Pilot sample size N_p = 12",
    ] {
        assert!(text.contains(needle), "missing {needle}:\n{text}");
    }
}

#[test]
fn effect_plan_from_means_and_from_proportions() {
    let doc = json(&[
        "plan-effect",
        "--mu0",
        "2",
        "--sigma",
        "4",
        "--underpower-prob",
        "0.3",
        "--underpower-threshold",
        "0.6",
    ]);
    assert_eq!(doc["results"]["n_lower"], 40);
    assert_eq!(doc["results"]["pilot_n"], 32);
    let doc = json(&[
        "plan-effect",
        "--p1",
        "0.5",
        "--p2",
        "0.4",
        "--underpower-prob",
        "0.3",
        "--underpower-threshold",
        "0.6",
    ]);
    let n = doc["results"]["pilot_n"].as_u64().unwrap();
    assert!((185..=205).contains(&n), "{n}");
}

#[test]
fn effect_entry_forms_are_exclusive() {
    let both = run(&[
        "plan-effect",
        "--mu0",
        "0.5",
        "--sigma",
        "1",
        "--p1",
        "0.5",
        "--p2",
        "0.4",
        "--underpower-prob",
        "0.3",
        "--underpower-threshold",
        "0.6",
    ]);
    assert_eq!(both.status.code(), Some(2));
    let neither = run(&[
        "plan-effect",
        "--underpower-prob",
        "0.3",
        "--underpower-threshold",
        "0.6",
    ]);
    assert_eq!(neither.status.code(), Some(2));
}

#[test]
fn invalid_inputs_exit_with_usage_code() {
    let mut zero_sigma = VARIANCE.to_vec();
    zero_sigma[2] = "0";
    assert_eq!(run(&zero_sigma).status.code(), Some(2));

    let bad_p = run(&[
        "plan-effect",
        "--p1",
        "1.2",
        "--p2",
        "0.4",
        "--underpower-prob",
        "0.3",
        "--underpower-threshold",
        "0.6",
    ]);
    assert_eq!(bad_p.status.code(), Some(2));

    let threshold_above_target = run(&[
        "plan-variance",
        "--delta",
        "1",
        "--sigma",
        "4",
        "--underpower-prob",
        "0.3",
        "--underpower-threshold",
        "0.9",
    ]);
    assert_eq!(threshold_above_target.status.code(), Some(2));
}

#[test]
fn percentages_get_a_hint() {
    let o = run(&[
        "plan-variance",
        "--sigma",
        "4",
        "--delta",
        "1",
        "--underpower-prob",
        "20",
        "--underpower-threshold",
        "0.6",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("0.2"), "{}", stderr(&o));
}

#[test]
fn unsatisfiable_exact_plan_is_a_runtime_failure() {
    let o = run(&[
        "plan-variance",
        "--delta",
        "1",
        "--sigma",
        "4",
        "--underpower-prob",
        "0.001",
        "--underpower-threshold",
        "0.79999",
        "--mode",
        "exact",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("search cap"));
}

#[test]
fn simulate_requires_a_seed_and_a_known_scenario() {
    let no_seed = run(&[
        "simulate",
        "--scenario",
        "effect",
        "--effect",
        "0.5",
        "--pilot-n",
        "32",
    ]);
    assert_eq!(no_seed.status.code(), Some(2));
    let bad = run(&[
        "simulate",
        "--scenario",
        "bogus",
        "--effect",
        "0.5",
        "--pilot-n",
        "32",
        "--seed",
        "1",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulation_is_reproducible() {
    let args = [
        "simulate",
        "--scenario",
        "effect",
        "--effect",
        "0.5",
        "--pilot-n",
        "32",
        "--reps",
        "500",
        "--seed",
        "7",
        "--format",
        "json",
    ];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["config"]["replicates"], 500);
    let rate = doc["results"]["empirical_underpower"].as_f64().unwrap();
    assert!((0.2..0.4).contains(&rate), "{rate}");
}

#[test]
fn csv_output_has_header_and_one_row() {
    let mut args = VARIANCE.to_vec();
    args.extend(["--format", "csv"]);
    let o = run(&args);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<_> = lines[0].split(',').collect();
    let row: Vec<_> = lines[1].split(',').collect();
    assert_eq!(header.len(), row.len());
    let i = header.iter().position(|h| *h == "pilot_n").unwrap();
    assert_eq!(row[i], "12");
}

#[test]
fn table_csv_has_one_line_per_row() {
    let o = run(&[
        "tables", "--id", "1", "--reps", "20", "--seed", "3", "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 12);
    let o = run(&[
        "tables", "--id", "2", "--reps", "20", "--seed", "3", "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 5 + 1);
    assert!(text.lines().last().unwrap().contains("394,64,26"));
}

#[test]
fn power_subcommand_reports_power() {
    let doc = json(&["power", "--effect", "0.5", "--sigma", "1", "--n", "64"]);
    let p = doc["results"]["power_at_n"].as_f64().unwrap();
    assert_eq!(doc["results"]["required_n"], 64);
    assert!((p - 0.8015).abs() < 1e-3, "{p}");
}
