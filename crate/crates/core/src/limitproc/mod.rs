//! The limiting processes M_Γ and L_Γ: Poisson skeletons, path samplers,
//! finite-dimensional distribution evaluators and the bivariate
//! Hüsler–Reiss closed form.

mod fidi;
mod hr;
mod sampler;
mod skeleton;

pub use fidi::{fidi_cdf_max, fidi_surv_min, union_length, FidiMethod, FidiQuery, FidiResult};
pub use hr::{hr_bivariate_cdf, hr_bivariate_cdf_with};
pub use sampler::{
    verify_sigma_invariance, InvarianceReport, InvarianceRow, MaxStableOptions, MaxStableSampler, MinOptions,
    MinSampler, SampleDiagnostics,
};
pub use skeleton::{sample_skeleton_gumbel, sample_skeleton_lebesgue, Intensity, PoissonSkeleton};

use crate::error::Result;
use crate::gauss::{cholesky_factor, FactoredCov, JitterPolicy};
use crate::kernel::{decompose_extended, ws_covariance, GammaMatrix};
use crate::rng::Stream;

/// One finite block of Γ together with the law of its W⁽ˢ⁾ marks.
#[derive(Clone, Debug)]
pub(crate) struct MarkBlock {
    /// Indices into the full site list.
    pub indices: Vec<usize>,
    pub factor: FactoredCov,
    /// σ²(t)/2 = Γ(t, anchor)/2 for each block site.
    pub half_var: Vec<f64>,
}

impl MarkBlock {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// One draw of W over the block; `z` is scratch of the same length.
    pub fn draw(&self, s: &mut Stream, z: &mut [f64], out: &mut [f64]) {
        s.fill_normal(z);
        self.factor.apply(z, out);
    }
}

/// Splits Γ into finite blocks and factors W⁽ˢ⁾ on each. The anchor is used
/// in the block containing it; every other block is anchored at its first site.
pub(crate) fn mark_blocks(g: &GammaMatrix, anchor: usize) -> Result<Vec<MarkBlock>> {
    if anchor >= g.len() {
        return Err(crate::Error::param(format!("anchor {anchor} out of range for {} sites", g.len())));
    }
    let partition = decompose_extended(g)?;
    partition
        .blocks
        .iter()
        .map(|idx| {
            let local = g.restrict(idx)?;
            let a = idx.iter().position(|&i| i == anchor).unwrap_or(0);
            let cov = ws_covariance(&local, a)?;
            let factor = cholesky_factor(&cov, JitterPolicy::default())?;
            let half_var = (0..idx.len()).map(|j| 0.5 * local.get(j, a)).collect();
            Ok(MarkBlock { indices: idx.clone(), factor, half_var })
        })
        .collect()
}
