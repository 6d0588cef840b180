//! Samples the max-stable process M_Γ for Brownian Γ on a grid and checks
//! that every marginal is standard Gumbel.

use gauss_extremes::kernel::{gamma_matrix, KernelSpec, Site};
use gauss_extremes::limitproc::{MaxStableOptions, MaxStableSampler};
use gauss_extremes::stats::ks_one_sample;
use gauss_extremes::Stream;

fn main() -> gauss_extremes::Result<()> {
    let grid = Site::reals(&[0.0, 0.5, 1.0, 2.0]);
    let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha: 1.0 }, &grid)?;
    let mut stream = Stream::from_seed(5);
    let sampler = MaxStableSampler::new(&g, None, MaxStableOptions::default(), &mut stream.child(0))?;
    let (batch, diag) = sampler.sample(20_000, &mut stream)?;
    println!("stopping levels {:.3?}, mean points {:.1}, max points {}", diag.levels, diag.mean_points, diag.max_points);
    for (j, site) in batch.sites.iter().enumerate() {
        let ks = ks_one_sample(&batch.column(j), |y| (-(-y).exp()).exp())?;
        println!("site {site}: D={:.4} (critical {:.4})", ks.statistic, ks.critical(0.01));
    }
    Ok(())
}
