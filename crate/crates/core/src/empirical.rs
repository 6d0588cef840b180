//! Pre-limit objects: pointwise maxima and minima of `n` independent copies
//! of a Gaussian vector, the normalizing sequences, and the rescaling
//! schedules for fractional Brownian motion.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gauss::{chunked_rows_by, fbm_cov, CovMatrix, FactoredCov, PathBatch};
use crate::normal;
use crate::rng::Stream;

/// ln √(2π)
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Unique positive root u of √(2π)·u·exp(u²/2) = n.
///
/// Safeguarded Newton on ln√(2π) + ln u + u²/2 − ln n, which is increasing
/// in u, with bisection whenever a step leaves the bracket.
pub fn solve_un(n: f64) -> Result<f64> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::param(format!("u_n needs a finite n >= 1, got {n}")));
    }
    let ln_n = n.ln();
    let f = |u: f64| LN_SQRT_2PI + u.ln() + 0.5 * u * u - ln_n;
    let (mut lo, mut hi) = (1e-8, (2.0 * ln_n).sqrt() + 2.0);
    let mut u = (2.0 * ln_n).sqrt().clamp(lo, hi).max(0.5);
    for _ in 0..200 {
        let fu = f(u);
        if fu.abs() < 1e-14 {
            break;
        }
        if fu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let step = u - fu / (1.0 / u + u);
        u = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(u)
}

/// √(2 log n) − (½ log log n + log(2√π)) / √(2 log n), the classical
/// asymptotic expansion of u_n with the o(1) term dropped.
pub fn un_asymptotic(n: f64) -> f64 {
    let s = (2.0 * n.ln()).sqrt();
    s - (0.5 * n.ln().ln() + (2.0 * PI.sqrt()).ln()) / s
}

/// Normalization a_n(M_n − b_n) for maxima anchored at site `t0_index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizerMax {
    pub n: f64,
    pub u_n: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub t0_index: usize,
}

/// a_n = u_n / σ(t0), b_n = σ(t0)·u_n.
pub fn normalizer_max(cov: &CovMatrix, n: f64, t0: usize) -> Result<NormalizerMax> {
    let sigma = anchor_sd(cov, t0)?;
    let u_n = solve_un(n)?;
    Ok(NormalizerMax { n, u_n, a_n: u_n / sigma, b_n: sigma * u_n, t0_index: t0 })
}

/// Normalization a_n·L_n for minima of absolute values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizerMin {
    pub n: f64,
    pub w_n: f64,
    pub a_n: f64,
    pub t0_index: usize,
}

/// w_n = n / √(2π), a_n = w_n / σ(t0).
pub fn normalizer_min(cov: &CovMatrix, n: f64, t0: usize) -> Result<NormalizerMin> {
    let sigma = anchor_sd(cov, t0)?;
    if !(n >= 1.0) {
        return Err(Error::param(format!("w_n needs n >= 1, got {n}")));
    }
    let w_n = n / (2.0 * PI).sqrt();
    Ok(NormalizerMin { n, w_n, a_n: w_n / sigma, t0_index: t0 })
}

fn anchor_sd(cov: &CovMatrix, t0: usize) -> Result<f64> {
    if t0 >= cov.len() {
        return Err(Error::param(format!("anchor index {t0} out of range for {} sites", cov.len())));
    }
    let var = cov.variance(t0);
    if !(var > 0.0) {
        return Err(Error::param(format!("variance at anchor site {t0} is {var}, must be positive")));
    }
    Ok(var.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Copies generated per fold step.
    pub block: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { block: 1024 }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Fold {
    Max,
    MinAbs,
}

// Replications per sub-stream; a function of n only so results never depend
// on the worker count.
fn reps_per_chunk(n: u64) -> usize {
    ((1u64 << 20) / n.max(1)).clamp(1, 1024) as usize
}

fn sample_extremes(
    cov: &FactoredCov,
    n: u64,
    reps: usize,
    stream: &mut Stream,
    opts: SampleOptions,
    fold: Fold,
) -> Result<PathBatch> {
    if n == 0 {
        return Err(Error::param("number of copies n must be >= 1"));
    }
    if opts.block == 0 {
        return Err(Error::param("block size must be >= 1"));
    }
    let k = cov.len();
    let key = stream.fork();
    let values = chunked_rows_by(&key, reps, k, if k == 1 { 1024 } else { reps_per_chunk(n) }, |s, rows, out| {
        if k == 1 {
            fold_single_site(cov, n, s, rows, out, fold);
        } else {
            fold_copies(cov, n, s, rows, out, opts.block, fold);
        }
        Ok(())
    })?;
    Ok(PathBatch::new(cov.cov().sites().to_vec(), values, Some(key)))
}

// One site: the extreme of n i.i.d. N(0, σ²) is drawn from its exact law.
fn fold_single_site(cov: &FactoredCov, n: u64, s: &mut Stream, rows: usize, out: &mut [f64], fold: Fold) {
    let sd = cov.lower(0, 0);
    for x in out.iter_mut().take(rows) {
        // V = U^{1/n}; 1 − V computed without cancellation.
        let log_v = s.uniform().ln() / n as f64;
        let one_minus_v = -log_v.exp_m1();
        *x = match fold {
            Fold::Max => sd * normal::upper_quantile(one_minus_v),
            // P[|Z| > x] = V  ⇔  Φ(x) = 1 − V/2
            Fold::MinAbs => sd * normal::quantile_offset(0.5 * one_minus_v),
        };
    }
}

fn fold_copies(cov: &FactoredCov, n: u64, s: &mut Stream, rows: usize, out: &mut [f64], block: usize, fold: Fold) {
    let k = cov.len();
    let block = block.min(n as usize);
    let mut z = vec![0.0; block * k];
    let mut x = vec![0.0; k];
    for r in 0..rows {
        let acc = &mut out[r * k..(r + 1) * k];
        acc.fill(match fold {
            Fold::Max => f64::NEG_INFINITY,
            Fold::MinAbs => f64::INFINITY,
        });
        let mut left = n as usize;
        while left > 0 {
            let b = block.min(left);
            s.fill_normal(&mut z[..b * k]);
            for copy in z[..b * k].chunks_exact(k) {
                cov.apply(copy, &mut x);
                match fold {
                    Fold::Max => acc.iter_mut().zip(&x).for_each(|(a, v)| *a = a.max(*v)),
                    Fold::MinAbs => acc.iter_mut().zip(&x).for_each(|(a, v)| *a = a.min(v.abs())),
                }
            }
            left -= b;
        }
    }
}

/// Sitewise maxima M_n(t) = maxᵢ Xᵢ(t) over `n` fresh copies, `reps` times.
pub fn sample_mn(cov: &FactoredCov, n: u64, reps: usize, stream: &mut Stream) -> Result<PathBatch> {
    sample_extremes(cov, n, reps, stream, SampleOptions::default(), Fold::Max)
}

pub fn sample_mn_with(
    cov: &FactoredCov,
    n: u64,
    reps: usize,
    stream: &mut Stream,
    opts: SampleOptions,
) -> Result<PathBatch> {
    sample_extremes(cov, n, reps, stream, opts, Fold::Max)
}

/// Sitewise minima of absolute values L_n(t) = minᵢ |Xᵢ(t)|.
pub fn sample_ln(cov: &FactoredCov, n: u64, reps: usize, stream: &mut Stream) -> Result<PathBatch> {
    sample_extremes(cov, n, reps, stream, SampleOptions::default(), Fold::MinAbs)
}

pub fn sample_ln_with(
    cov: &FactoredCov,
    n: u64,
    reps: usize,
    stream: &mut Stream,
    opts: SampleOptions,
) -> Result<PathBatch> {
    sample_extremes(cov, n, reps, stream, opts, Fold::MinAbs)
}

/// Elementwise a·(x − b).
pub fn rescale(batch: &PathBatch, a: f64, b: f64) -> PathBatch {
    PathBatch::new(
        batch.sites.clone(),
        batch.values.iter().map(|x| a * (x - b)).collect(),
        batch.provenance.clone(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Max,
    Min,
    /// Minima schedule t0·(2π/n²)^{1/α}, under which n²(1 − r_n)/π → |Δt|^α.
    MinQuadratic,
}

/// Time rescaling X_n(t) = B(t0 + s_n·t) of fractional Brownian motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbmSchedule {
    pub alpha: f64,
    pub t0: f64,
    pub mode: ScheduleMode,
}

impl FbmSchedule {
    pub fn new(alpha: f64, t0: f64, mode: ScheduleMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::param(format!("fbm alpha must lie in (0, 2], got {alpha}")));
        }
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::param(format!("t0 must be positive, got {t0}")));
        }
        Ok(FbmSchedule { alpha, t0, mode })
    }

    /// Max mode: t0 / (2 log n)^{1/α}. Min mode: t0·(2π/n)^{1/α}.
    ///
    /// Under the min mode n²(1 − r_n)/π grows like n·|Δt|^α, so the sites
    /// decouple in the limit; [`ScheduleMode::MinQuadratic`] is the
    /// rescaling that keeps Γ = |Δt|^α.
    pub fn s_n(&self, n: f64) -> f64 {
        match self.mode {
            ScheduleMode::Max => self.t0 / (2.0 * n.ln()).powf(1.0 / self.alpha),
            ScheduleMode::Min => self.t0 * (2.0 * PI / n).powf(1.0 / self.alpha),
            ScheduleMode::MinQuadratic => self.t0 * (2.0 * PI / (n * n)).powf(1.0 / self.alpha),
        }
    }

    /// Limit correction between grid times t1 (the anchor) and t2.
    ///
    /// Max mode: the additive drift κ(t1, t2), which is 0 for α < 1 and
    /// (t2 − t1)/2 for α = 1; `None` for α > 1, where it diverges. Min mode:
    /// the multiplicative factor, identically 1.
    pub fn kappa(&self, t1: f64, t2: f64) -> Option<f64> {
        match self.mode {
            ScheduleMode::Min | ScheduleMode::MinQuadratic => Some(1.0),
            ScheduleMode::Max if self.alpha < 1.0 => Some(0.0),
            ScheduleMode::Max if self.alpha == 1.0 => Some((t2 - t1) / 2.0),
            ScheduleMode::Max => (t1 == t2).then_some(0.0),
        }
    }
}

/// Covariance of X_n(t) = B(t0 + s_n·t) over `grid`; sites keep the
/// unshifted grid values.
pub fn fbm_prelimit_cov(schedule: &FbmSchedule, n: f64, grid: &[f64]) -> Result<CovMatrix> {
    let s = schedule.s_n(n);
    let times: Vec<f64> = grid.iter().map(|t| schedule.t0 + s * t).collect();
    if let Some((t, tau)) = grid.iter().zip(&times).find(|(_, tau)| !(**tau > 0.0)) {
        return Err(Error::param(format!(
            "grid point {t} maps to time {tau} <= 0 (s_n = {s}); shrink the window or raise n"
        )));
    }
    let c = fbm_cov(&times, schedule.alpha)?;
    let k = grid.len();
    let values = (0..k * k).map(|p| c.get(p / k, p % k)).collect();
    CovMatrix::new(crate::kernel::Site::reals(grid), values)
}

/// Writes a pretty-printed JSON provenance sidecar.
pub fn write_sidecar(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
