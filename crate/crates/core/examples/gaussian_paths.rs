//! Samples fractional Brownian motion paths on a grid and writes them as CSV.
//!
//! Usage: `cargo run --example gaussian_paths -- [out.csv]`

use gauss_extremes::gauss::{cholesky_factor, fbm_cov, sample_paths, JitterPolicy};
use gauss_extremes::Stream;

fn main() -> gauss_extremes::Result<()> {
    let grid: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
    let cov = fbm_cov(&grid, 0.7)?;
    let factor = cholesky_factor(&cov, JitterPolicy::default())?;
    println!("jitter used: {:e}, reconstruction error: {:.2e}", factor.jitter_used(), factor.reconstruction_error());

    let mut stream = Stream::from_seed(7);
    let batch = sample_paths(&factor, 5, &mut stream);
    let end = batch.column(grid.len() - 1);
    println!("B(1) across 5 paths: {end:.3?}");

    if let Some(path) = std::env::args().nth(1) {
        batch.write_csv(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
