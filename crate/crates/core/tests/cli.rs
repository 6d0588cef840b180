use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gauss-extremes"))
}

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const KERNELS: &str = r#"{"experiment":"kernel-check","seed":5,"label":"k",
  "kernels":[{"kernel":{"type":"fbm_increment","alpha":1.9},"grid":[0,0.5,1,1.5,2],"expect_pass":true},
             {"power_exponent":2.2,"grid":[0,0.5,1,1.5,2],"expect_pass":false}]}"#;

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", KERNELS);
    assert!(bin().arg("validate").arg(&good).status().unwrap().success());

    let bad = write(dir.path(), "bad.json", r#"{"experiment":"fidi","seed":1,"y_grid":[]}"#);
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gamma12") && err.contains("y_grid") && err.contains("inner_samples"), "{err}");
}

#[test]
fn run_writes_outputs_and_reports_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.json", KERNELS);
    let out = dir.path().join("out");
    let status = bin().args(["run"]).arg(&cfg).arg("--out").arg(&out).args(["--threads", "2"]).status().unwrap();
    assert!(status.success());
    assert!(out.join("k.csv").exists() && out.join("k.json").exists());

    let failing = write(dir.path(), "f.json", &KERNELS.replace("\"expect_pass\":false", "\"expect_pass\":true"));
    let status = bin().arg("run").arg(&failing).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn seed_override_changes_streams_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.json",
        r#"{"experiment":"marginal","seed":1,"label":"m","reps":2000,"process":"min"}"#,
    );
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        assert!(bin().arg("run").arg(&cfg).arg("--out").arg(&out).args(["--seed", seed]).status().unwrap().success());
        std::fs::read_to_string(out.join("m.csv")).unwrap()
    };
    let a = run("44", "a");
    let b = run("44", "b");
    let c = run("45", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.contains(",44/0/0") && c.contains(",45/0/0"));
}
