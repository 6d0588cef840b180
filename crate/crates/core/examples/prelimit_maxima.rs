//! Maxima of n independent Gaussian vectors with correlation exp(−Γ/(4 log n)),
//! normalized by u_n, against the bivariate Hüsler–Reiss law.

use gauss_extremes::empirical::{normalizer_max, rescale, sample_mn, solve_un, un_asymptotic};
use gauss_extremes::gauss::{cholesky_factor, JitterPolicy};
use gauss_extremes::kernel::{schoenberg_cov, GammaMatrix};
use gauss_extremes::limitproc::hr_bivariate_cdf;
use gauss_extremes::Stream;

fn main() -> gauss_extremes::Result<()> {
    for n in [1e2, 1e4, 1e8] {
        println!("n={n:e}: u_n={:.6}, asymptotic {:.6}", solve_un(n)?, un_asymptotic(n));
    }

    let g = GammaMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])?;
    let mut stream = Stream::from_seed(11);
    for n in [100u64, 1000] {
        let cov = schoenberg_cov(&g, n as f64)?;
        let factor = cholesky_factor(&cov, JitterPolicy::default())?;
        let norm = normalizer_max(&cov, n as f64, 0)?;
        let batch = rescale(&sample_mn(&factor, n, 20_000, &mut stream)?, norm.a_n, norm.b_n);
        let hit = (0..batch.rows()).filter(|&r| batch.row(r).iter().all(|v| *v <= 0.0)).count();
        let emp = hit as f64 / batch.rows() as f64;
        println!("n={n}: P[both <= 0] empirical {emp:.4}, limit {:.4}", hr_bivariate_cdf(1.0, 0.0, 0.0)?);
    }
    Ok(())
}
