//! Runs an experiment config and writes its CSV table and JSON sidecar.
//!
//! Usage: `cargo run --release --example run_config -- configs/c10_kernel_check.json [out-dir]`

use gauss_extremes::experiment::{run_experiment, ExperimentConfig};

fn main() -> gauss_extremes::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/c10_kernel_check.json").into());
    let out = args.next().unwrap_or_else(|| std::env::temp_dir().join("gauss-extremes").display().to_string());
    let cfg = ExperimentConfig::load(&path)?;
    let table = run_experiment(&cfg)?;
    print!("{}", table.to_csv());
    let (csv, json) = table.write(&out)?;
    println!("{} -> {}, {}; pass={}", cfg.experiment.as_str(), csv.display(), json.display(), table.pass());
    Ok(())
}
