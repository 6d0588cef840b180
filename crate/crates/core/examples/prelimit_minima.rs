//! Minima of absolute values of n Gaussian vectors, scaled by w_n = n/√(2π),
//! against the exponential law with mean 1/2.

use gauss_extremes::empirical::{normalizer_min, rescale, sample_ln};
use gauss_extremes::gauss::{cholesky_factor, JitterPolicy};
use gauss_extremes::kernel::{schoenberg_cov_min, GammaMatrix};
use gauss_extremes::stats::ks_one_sample;
use gauss_extremes::Stream;

fn main() -> gauss_extremes::Result<()> {
    let g = GammaMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])?;
    let n = 500;
    let cov = schoenberg_cov_min(&g, n as f64)?;
    let factor = cholesky_factor(&cov, JitterPolicy::default())?;
    let norm = normalizer_min(&cov, n as f64, 0)?;
    let batch = rescale(&sample_ln(&factor, n, 20_000, &mut Stream::from_seed(3))?, norm.a_n, 0.0);

    let ks = ks_one_sample(&batch.column(0), |y| if y <= 0.0 { 0.0 } else { 1.0 - (-2.0 * y).exp() })?;
    println!("site 0 vs Exp(2): D={:.4}, critical(0.01)={:.4}", ks.statistic, ks.critical(0.01));
    let both = (0..batch.rows()).filter(|&r| batch.row(r).iter().all(|v| *v > 0.5)).count();
    println!("P[both > 0.5] = {:.4}", both as f64 / batch.rows() as f64);
    Ok(())
}
