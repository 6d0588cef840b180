//! Finite-dimensional distributions of M_Γ by Monte Carlo, checked against
//! the bivariate Hüsler–Reiss closed form.

use gauss_extremes::kernel::{gamma_matrix, GammaMatrix, KernelSpec, Site};
use gauss_extremes::limitproc::{fidi_cdf_max, hr_bivariate_cdf, FidiQuery};
use gauss_extremes::Stream;

fn main() -> gauss_extremes::Result<()> {
    let mut stream = Stream::from_seed(2);
    for gamma in [0.25, 1.0, 4.0] {
        let g = GammaMatrix::from_rows(&[vec![0.0, gamma], vec![gamma, 0.0]])?;
        let mc = fidi_cdf_max(&FidiQuery::new(g, vec![0.0, 0.5]), 200_000, &mut stream)?;
        let hr = hr_bivariate_cdf(gamma, 0.0, 0.5)?;
        println!("Γ={gamma}: Monte Carlo {:.5} ± {:.5}, closed form {hr:.5}", mc.probability, mc.stderr);
    }

    // Three sites with a drift, as arises for Brownian motion maxima.
    let grid = Site::reals(&[0.0, 1.0, 2.0]);
    let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha: 1.0 }, &grid)?;
    let q = FidiQuery::new(g, vec![1.0, 1.0, 1.0]).with_drift(vec![0.0, 0.5, 1.0]);
    let r = fidi_cdf_max(&q, 200_000, &mut stream)?;
    println!("3 sites with drift: {:.5} ± {:.5} ({:?})", r.probability, r.stderr, r.method);
    Ok(())
}
