use gauss_extremes::experiment::{run_experiment, run_with_threads, ExperimentConfig, ExperimentKind};
use gauss_extremes::Error;

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn validation_lists_every_violation() {
    let c = cfg(r#"{"experiment":"converge-max","seed":1,"reps":0,"n":[1],"tolerances":{"level":2.0}}"#);
    match c.validate() {
        Err(Error::Config(list)) => {
            let all = list.join("\n");
            for needle in ["level", "reps", "gamma12", "y_grid", "n must"] {
                assert!(all.contains(needle), "missing {needle} in {all}");
            }
        }
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn seed_is_mandatory_and_fields_are_checked() {
    assert!(ExperimentConfig::from_json(r#"{"experiment":"marginal","reps":10}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"experiment":"marginal","seed":1,"reps":10,"colour":1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"experiment":"nope","seed":1}"#).is_err());
}

#[test]
fn fbm_checks_need_a_zero_site() {
    let c = cfg(r#"{"experiment":"fbm-max","seed":1,"alpha":0.5,"grid":[0.5,1.0],"n":[100],"reps":10,"y_grid":[0.0]}"#);
    assert!(matches!(c.validate(), Err(Error::Config(_))));
}

#[test]
fn kernel_check_records_expected_failure() {
    let c = cfg(r#"{
        "experiment": "kernel-check", "seed": 3,
        "kernels": [
            {"kernel": {"type": "fbm_increment", "alpha": 1.0}, "grid": [0, 1, 2, 3, 4], "expect_pass": true},
            {"power_exponent": 2.2, "grid": [0, 1, 2, 3, 4], "expect_pass": false},
            {"power_exponent": 2.2, "grid": [0, 1, 2, 3, 4], "expect_pass": true}
        ]
    }"#);
    let t = run_experiment(&c).unwrap();
    let pass: Vec<Option<bool>> = t.rows.iter().map(|r| r.pass).collect();
    assert_eq!(pass, vec![Some(true), Some(true), Some(false)]);
    assert!(!t.pass());
    assert!(t.rows.iter().all(|r| r.stream.is_none()));
}

#[test]
fn fidi_rows_compare_with_closed_form() {
    let c = cfg(r#"{"experiment":"fidi","seed":9,"gamma12":[1.0,"inf"],"y_grid":[0.0,1.0],"inner_samples":50000,
                    "tolerances":{"abs":0.005}}"#);
    let t = run_experiment(&c).unwrap();
    assert_eq!(t.rows.len(), 8);
    assert!(t.pass(), "{}", t.to_csv());
    // Γ = ∞ splits the sites into two exact single-site blocks.
    let r = &t.rows[4];
    assert_eq!(r.stat, 0.0);
    assert!((r.estimate - (-2.0f64).exp()).abs() < 1e-12);
}

#[test]
fn marginal_and_csv_are_reproducible() {
    let c = cfg(r#"{"experiment":"marginal","seed":17,"reps":3000,"kernel":{"type":"fbm_increment","alpha":1.0},"grid":[0.0,1.0]}"#);
    let a = run_with_threads(&c, Some(1)).unwrap();
    let b = run_with_threads(&c, Some(3)).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.rows.len(), 2);
    for r in &a.rows {
        assert!(r.stream.as_deref().unwrap().starts_with("17/0/"));
    }
    let mut other = c.clone();
    other.seed = 18;
    assert_ne!(run_experiment(&other).unwrap().to_csv(), a.to_csv());
}

#[test]
fn csv_has_full_precision() {
    let c = cfg(r#"{"experiment":"converge-max","seed":2,"gamma12":[1.0],"n":[50,200],"reps":2000,"y_grid":[0.0]}"#);
    let t = run_experiment(&c).unwrap();
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "row,metric,params,estimate,stat,reference,tolerance,pass,stream");
    for line in lines {
        let est = line.split(',').nth(3).unwrap();
        let mantissa = est.split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{est}");
    }
    // Undeclared tolerances leave every row informational.
    assert!(t.rows.iter().all(|r| r.pass.is_none() || r.metric == "decreasing"));
    assert_eq!(t.experiment, ExperimentKind::ConvergeMax);
}

#[test]
fn write_creates_table_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(r#"{"experiment":"kernel-check","seed":1,"label":"kc",
                    "kernels":[{"kernel":{"type":"sphere_geodesic","beta":0.5},"grid":[[0,0,1],[1,0,0],[0,1,0]],"expect_pass":true}]}"#);
    let t = run_experiment(&c).unwrap();
    let (csv, json) = t.write(dir.path()).unwrap();
    assert!(csv.ends_with("kc.csv"));
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(side["seed"], 1);
    assert_eq!(side["pass"], true);
    assert_eq!(side["config"]["label"], "kc");
    assert!(side["runtime_seconds"].is_number());
}

#[test]
fn stable_field_adjudicates() {
    let c = cfg(r#"{"experiment":"stable-field","seed":4,"reps":30000,
                    "kernel":{"type":"fbm_increment","alpha":1.0},"grid":[0.0,1.0],
                    "stable":{"alpha":0.5,"convention":"reciprocal","bootstrap":50}}"#);
    let t = run_experiment(&c).unwrap();
    let adj = t.rows.iter().find(|r| r.metric == "adjudication").unwrap();
    assert!(adj.params.contains("convention=reciprocal"));
    assert_eq!(adj.stat, 0.5);
    assert!(t.diagnostics["series"]["terms"].as_u64().unwrap() > 0);
}
