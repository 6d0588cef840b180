//! Maxima of fractional Brownian motions near t0 under the time rescaling
//! s_n, for the three regimes of the Hurst-type index α.

use gauss_extremes::empirical::{fbm_prelimit_cov, normalizer_max, rescale, sample_mn, FbmSchedule, ScheduleMode};
use gauss_extremes::gauss::{cholesky_factor, JitterPolicy};
use gauss_extremes::stats::correlation;
use gauss_extremes::Stream;

fn main() -> gauss_extremes::Result<()> {
    let grid = [0.0, 1.0];
    let n = 10_000u64;
    let mut stream = Stream::from_seed(8);
    for alpha in [0.5, 1.0, 1.5] {
        let sched = FbmSchedule::new(alpha, 1.0, ScheduleMode::Max)?;
        let cov = fbm_prelimit_cov(&sched, n as f64, &grid)?;
        let factor = cholesky_factor(&cov, JitterPolicy::default())?;
        let norm = normalizer_max(&cov, n as f64, 0)?;
        let b = rescale(&sample_mn(&factor, n, 5_000, &mut stream)?, norm.a_n, norm.b_n);
        let (c0, c1) = (b.column(0), b.column(1));
        let shift = c1.iter().sum::<f64>() / c1.len() as f64 - c0.iter().sum::<f64>() / c0.len() as f64;
        let kappa = sched.kappa(0.0, 1.0).map_or("diverges".to_string(), |k| format!("{k}"));
        println!(
            "alpha={alpha}: s_n={:.3e}, mean shift {shift:.3} (limit drift {kappa}), correlation {:.3}",
            sched.s_n(n as f64),
            correlation(&c0, &c1)
        );
    }
    Ok(())
}
