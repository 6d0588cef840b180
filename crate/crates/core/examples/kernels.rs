//! Builds Γ matrices from kernels, checks negative definiteness and splits
//! an extended-valued matrix into its finite blocks.

use gauss_extremes::kernel::{
    decompose_extended, gamma_matrix, validate_negative_definite, ExtReal, GammaMatrix, KernelSpec, Site,
};

fn main() -> gauss_extremes::Result<()> {
    let grid = Site::reals(&[0.0, 0.5, 1.0, 1.5, 2.0]);
    for alpha in [0.5, 1.0, 1.9] {
        let g = gamma_matrix(&KernelSpec::FbmIncrement { alpha }, &grid)?;
        let rep = validate_negative_definite(&g, g.default_nd_tolerance())?;
        println!("fbm alpha={alpha}: largest projected eigenvalue {:+.3e}, pass={}", rep.worst, rep.pass);
    }

    // |Δt|^2.2 is not a variogram: the check must reject it.
    let ts = [0.0, 0.5, 1.0, 1.5, 2.0];
    let values = ts.iter().flat_map(|a| ts.iter().map(move |b| f64::abs(a - b).powf(2.2))).collect();
    let bad = GammaMatrix::from_values(grid.clone(), values)?;
    let rep = validate_negative_definite(&bad, bad.default_nd_tolerance())?;
    println!("power 2.2: largest projected eigenvalue {:+.3e}, pass={}", rep.worst, rep.pass);

    let sphere = Site::Sphere([0.0, 0.0, 1.0]);
    let g = gamma_matrix(&KernelSpec::SphereGeodesic { beta: 0.5 }, &[sphere, Site::Sphere([1.0, 0.0, 0.0])])?;
    println!("sphere geodesic^0.5 between pole and equator: {:.6}", g.get(0, 1));

    // Two groups that never interact: Γ = +∞ across them.
    let inf = ExtReal(f64::INFINITY);
    let spec = KernelSpec::CustomMatrix {
        sites: Site::reals(&[0.0, 1.0, 2.0, 3.0]),
        gamma: vec![
            vec![ExtReal(0.0), ExtReal(1.0), inf, inf],
            vec![ExtReal(1.0), ExtReal(0.0), inf, inf],
            vec![inf, inf, ExtReal(0.0), ExtReal(2.0)],
            vec![inf, inf, ExtReal(2.0), ExtReal(0.0)],
        ],
    };
    let g = gamma_matrix(&spec, &Site::reals(&[0.0, 1.0, 2.0, 3.0]))?;
    println!("finite blocks: {:?}", decompose_extended(&g)?.blocks);
    Ok(())
}
