//! Samples the min-process L_Γ and compares its joint survival with the
//! finite-dimensional formula.

use gauss_extremes::kernel::{gamma_matrix, KernelSpec, Site};
use gauss_extremes::limitproc::{fidi_surv_min, sample_skeleton_lebesgue, FidiQuery, MinOptions, MinSampler};
use gauss_extremes::Stream;

fn main() -> gauss_extremes::Result<()> {
    let mut stream = Stream::from_seed(9);
    let sk = sample_skeleton_lebesgue(10.0, &mut stream)?;
    println!("unit-rate skeleton on [-10, 10]: {} points", sk.len());

    let grid = Site::reals(&[0.0, 1.0]);
    let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha: 1.0 }, &grid)?;
    let sampler = MinSampler::new(&g, MinOptions::default(), &mut stream.child(0))?;
    let (batch, diag) = sampler.sample(50_000, &mut stream)?;
    println!("window half-widths {:.2?}, mean points {:.1}", diag.levels, diag.mean_points);

    for y in [0.1, 0.3, 0.6] {
        let emp = (0..batch.rows()).filter(|&r| batch.row(r).iter().all(|v| *v > y)).count() as f64 / 50_000.0;
        let se = (emp * (1.0 - emp) / 50_000.0).sqrt();
        let exact = fidi_surv_min(&FidiQuery::new(g.clone(), vec![y, y]), 200_000, &mut stream)?;
        println!("y={y}: sampled {emp:.4} ± {se:.4}, formula {:.4} ± {:.4}", exact.probability, exact.stderr);
    }
    Ok(())
}
