//! The stable field S(t) = Σᵢ (e^{p(Uᵢ + Wᵢ(t) − σ²(t)/2)} − bᵢ) over the
//! atoms Uᵢ of the e^{−u} du Poisson process, its centering constants, and
//! empirical stability diagnostics.
//!
//! With Tᵢ = e^{−Uᵢ} the i-th arrival of a unit-rate Poisson process, each
//! summand is Tᵢ^{−p}·Yᵢ(t) with Yᵢ(t) = e^{p(Wᵢ(t) − σ²(t)/2)}. Such a sum
//! has stability index 1/p. [`Convention::AsPrinted`] uses p = α and the
//! centering of [`centering_b`]; [`Convention::Reciprocal`] uses p = 1/α
//! with compensators matched to that exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{chunked_rows, PathBatch};
use crate::kernel::{GammaMatrix, Site};
use crate::limitproc::{mark_blocks, MarkBlock};
use crate::rng::Stream;
use crate::stats::quantile_sorted;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

// (x − sin x)/x², smooth with value ≈ x/6 near 0.
fn sin_defect(x: f64) -> f64 {
    if x < 1e-3 {
        let x2 = x * x;
        x / 6.0 - x * x2 / 120.0 + x * x2 * x2 / 5040.0
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// ∫_a^b x^{−2} sin x dx for 0 < a ≤ b ≤ 1.
fn sinc2_integral(a: f64, b: f64) -> f64 {
    (b / a).ln() - adaptive_simpson(&sin_defect, a, b, 1e-13)
}

/// Centering constant b_i^{(α)} in the printed three-case form:
/// 0 for α < 1; ∫_{1/i}^{1/(i−1)} x^{−2} sin x dx for α = 1 (upper limit +∞
/// at i = 1); (α/(α−1))·(i^{α/(α−1)} − (i−1)^{α/(α−1)}) for α ∈ (1, 2).
pub fn centering_b(i: u64, alpha: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::param("centering index starts at 1"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::param(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    let i_f = i as f64;
    Ok(if alpha < 1.0 {
        0.0
    } else if alpha == 1.0 {
        b_alpha_one(i)
    } else {
        let e = alpha / (alpha - 1.0);
        e * (i_f.powf(e) - (i_f - 1.0).powf(e))
    })
}

fn b_alpha_one(i: u64) -> f64 {
    if i == 1 {
        // ∫_1^∞ x^{−2} sin x dx = sin 1 − Ci(1), Ci(1) = γ + ∫_0^1 (cos t − 1)/t dt.
        let cos_defect = |t: f64| if t < 1e-4 { -t / 2.0 + t * t * t / 24.0 } else { (t.cos() - 1.0) / t };
        1f64.sin() - EULER_GAMMA - adaptive_simpson(&cos_defect, 0.0, 1.0, 1e-14)
    } else {
        let i = i as f64;
        sinc2_integral(1.0 / i, 1.0 / (i - 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Exponent α, centering from [`centering_b`].
    #[default]
    AsPrinted,
    /// Exponent 1/α with compensators E[Y]·∫_{i−1}^{i} t^{−1/α} dt (α > 1).
    Reciprocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub max_terms: usize,
    /// Allowed standard deviation of the compensated remainder.
    pub tail_budget: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { max_terms: 100_000, tail_budget: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSeriesParams {
    pub alpha: f64,
    pub gamma: GammaMatrix,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default = "yes")]
    pub centering: bool,
    #[serde(default)]
    pub random_signs: bool,
    #[serde(default)]
    pub anchor: usize,
}

fn yes() -> bool {
    true
}

impl StableSeriesParams {
    pub fn new(alpha: f64, gamma: GammaMatrix, convention: Convention) -> Self {
        StableSeriesParams {
            alpha,
            gamma,
            convention,
            truncation: Truncation::default(),
            centering: true,
            random_signs: false,
            anchor: 0,
        }
    }

    /// Power applied to e^{U}.
    pub fn exponent(&self) -> f64 {
        match self.convention {
            Convention::AsPrinted => self.alpha,
            Convention::Reciprocal => 1.0 / self.alpha,
        }
    }

    /// Stability index of the resulting series, 1/p.
    pub fn index(&self) -> f64 {
        1.0 / self.exponent()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Regime {
    /// p > 1: absolutely summable, no centering.
    Summable,
    /// p = 1: logarithmic centering.
    Log,
    /// p < 1 with power compensators E[Y]·(i^{1−p} − (i−1)^{1−p})/(1−p).
    Power,
    /// Symmetrized by random signs; no centering.
    Signed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableDiagnostics {
    pub exponent: f64,
    pub convention: Convention,
    pub terms: usize,
    /// Standard-deviation scale of the omitted remainder,
    /// (max_t E[Y(t)²]·Σ_{i>N} E[T_i^{−2p}])^{1/2}.
    pub tail_bound: f64,
    /// Analytic mean of the remainder, added to every path, per site.
    pub tail_mean: Vec<f64>,
    pub stream: Option<String>,
}

/// Truncated-series sampler with analytic remainder compensation.
#[derive(Clone, Debug)]
pub struct StableSampler {
    params: StableSeriesParams,
    sites: Vec<Site>,
    blocks: Vec<MarkBlock>,
    regime: Regime,
    terms: usize,
    /// Per site: E[Y(t)].
    mean_y: Vec<f64>,
    /// Centering bᵢ for i = 1..terms, before the E[Y] factor.
    centers: Vec<f64>,
    tail_mean: Vec<f64>,
    tail_bound: f64,
    /// max_t E[Y(t)²]
    max_sq: f64,
}

fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    libm::lgamma(a) - libm::lgamma(b)
}

impl StableSampler {
    pub fn new(params: StableSeriesParams) -> Result<Self> {
        let alpha = params.alpha;
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::param(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        if params.truncation.max_terms == 0 || !(params.truncation.tail_budget > 0.0) {
            return Err(Error::param("truncation needs max_terms >= 1 and a positive tail budget"));
        }
        let p = params.exponent();
        let regime = if params.random_signs {
            Regime::Signed
        } else if p > 1.0 {
            Regime::Summable
        } else if !params.centering {
            return Err(Error::Truncation(format!("exponent {p} <= 1 without centering diverges")));
        } else if p == 1.0 {
            Regime::Log
        } else {
            match params.convention {
                Convention::Reciprocal => Regime::Power,
                Convention::AsPrinted => {
                    return Err(Error::Truncation(format!(
                        "the as-printed series with alpha = {alpha} diverges: the summands e^(alpha U_i) decay \
                         like i^(-{alpha}), which is not summable, and the printed centering {} does not \
                         compensate them",
                        if alpha < 1.0 { "is zero and" } else { "grows with i and" }
                    )));
                }
            }
        };
        if params.convention == Convention::AsPrinted && alpha > 1.0 && params.centering && !params.random_signs {
            return Err(Error::Truncation(format!(
                "the as-printed centering for alpha = {alpha} grows like i^{:.3}, so the centered series diverges",
                1.0 / (alpha - 1.0)
            )));
        }
        let blocks = mark_blocks(&params.gamma, params.anchor)?;
        let k = params.gamma.len();
        let mut sigma2 = vec![0.0; k];
        for b in &blocks {
            for (j, &i) in b.indices.iter().enumerate() {
                sigma2[i] = 2.0 * b.half_var[j];
            }
        }
        let mean_y: Vec<f64> = sigma2.iter().map(|s| (0.5 * s * (p * p - p)).exp()).collect();
        let max_sq = sigma2.iter().map(|s| (s * (2.0 * p * p - p)).exp()).fold(0.0, f64::max);

        let mut sampler = StableSampler {
            sites: params.gamma.sites().to_vec(),
            params,
            blocks,
            regime,
            terms: 0,
            mean_y,
            centers: Vec::new(),
            tail_mean: vec![0.0; k],
            tail_bound: f64::INFINITY,
            max_sq,
        };
        let budget = sampler.params.truncation.tail_budget;
        let cap = sampler.params.truncation.max_terms;
        let bound = |n: usize| (max_sq * Self::second_moment_tail(p, n)).sqrt();
        if bound(cap) > budget {
            return Err(Error::Truncation(format!(
                "remainder bound {:.3e} after {cap} terms exceeds the budget {budget:e}; raise max_terms or the budget",
                bound(cap)
            )));
        }
        // Smallest N meeting the budget; the bound is decreasing in N.
        let (mut lo, mut hi) = (0usize, cap);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if bound(mid) <= budget {
                hi = mid
            } else {
                lo = mid
            }
        }
        let n = hi;
        sampler.terms = n;
        sampler.tail_bound = bound(n);
        sampler.centers = (1..=n as u64).map(|i| sampler.center(i)).collect();
        let tm = sampler.tail_mean_unit(n);
        sampler.tail_mean = sampler.mean_y.iter().map(|m| m * tm).collect();
        Ok(sampler)
    }

    /// Σ_{i>n} E[T_i^{−2p}] = Γ(n+1−2p) / ((2p−1)Γ(n)); infinite when some
    /// omitted term has no second moment.
    fn second_moment_tail(p: f64, n: usize) -> f64 {
        let a = n as f64 + 1.0 - 2.0 * p;
        if n == 0 || a <= 0.0 || 2.0 * p <= 1.0 {
            return f64::INFINITY;
        }
        ln_gamma_ratio(a, n as f64).exp() / (2.0 * p - 1.0)
    }

    /// Standard-deviation scale of the remainder after `n` terms.
    pub fn tail_bound_at(&self, n: usize) -> f64 {
        (self.max_sq * Self::second_moment_tail(self.params.exponent(), n)).sqrt()
    }

    fn center(&self, i: u64) -> f64 {
        let p = self.params.exponent();
        match self.regime {
            Regime::Summable | Regime::Signed => 0.0,
            Regime::Log => b_alpha_one(i),
            Regime::Power => {
                let i = i as f64;
                (i.powf(1.0 - p) - (i - 1.0).powf(1.0 - p)) / (1.0 - p)
            }
        }
    }

    /// Mean of the remainder Σ_{i>n}(T_i^{−p} − bᵢ) per unit E[Y].
    fn tail_mean_unit(&self, n: usize) -> f64 {
        let p = self.params.exponent();
        let nf = n as f64;
        match self.regime {
            Regime::Signed => 0.0,
            Regime::Summable => ln_gamma_ratio(nf + 1.0 - p, nf).exp() / (p - 1.0),
            Regime::Power => (nf.powf(1.0 - p) - ln_gamma_ratio(nf + 1.0 - p, nf).exp()) / (1.0 - p),
            Regime::Log => {
                // Σ_{j≥n} 1/j − ∫_0^{1/n} x^{−2} sin x dx
                let h: f64 = (1..n).map(|j| 1.0 / j as f64).sum();
                EULER_GAMMA - h + nf.ln() + adaptive_simpson(&sin_defect, 0.0, 1.0 / nf, 1e-14)
            }
        }
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    fn sample_into(&self, s: &mut Stream, out: &mut [f64]) {
        let p = self.params.exponent();
        for b in &self.blocks {
            let k = b.len();
            let mut acc = vec![0.0; k];
            let (mut z, mut w) = (vec![0.0; k], vec![0.0; k]);
            let mut t = 0.0;
            for i in 0..self.terms {
                t += s.exp1();
                let base = t.powf(-p);
                let sign = if self.regime == Regime::Signed { s.sign() } else { 1.0 };
                if k > 1 {
                    b.draw(s, &mut z, &mut w);
                }
                let c = self.centers[i];
                for j in 0..k {
                    let y = if k > 1 { (p * (w[j] - b.half_var[j])).exp() } else { 1.0 };
                    acc[j] += sign * base * y - c * self.mean_y[b.indices[j]];
                }
            }
            for (j, &i) in b.indices.iter().enumerate() {
                out[i] = acc[j] + self.tail_mean[i];
            }
        }
    }

    pub fn sample(&self, reps: usize, stream: &mut Stream) -> Result<(PathBatch, StableDiagnostics)> {
        let key = stream.fork();
        let k = self.sites.len();
        let values = chunked_rows(&key, reps, k, |s, rows, out| {
            for row in out.chunks_exact_mut(k).take(rows) {
                self.sample_into(s, row);
            }
            Ok(())
        })?;
        let diag = StableDiagnostics {
            exponent: self.params.exponent(),
            convention: self.params.convention,
            terms: self.terms,
            tail_bound: self.tail_bound,
            tail_mean: self.tail_mean.clone(),
            stream: Some(key.to_string()),
        };
        Ok((PathBatch::new(self.sites.clone(), values, Some(key)), diag))
    }
}

/// One-shot: build the sampler and draw `reps` paths.
pub fn sample_stable_field(
    params: &StableSeriesParams,
    reps: usize,
    stream: &mut Stream,
) -> Result<(PathBatch, StableDiagnostics)> {
    StableSampler::new(params.clone())?.sample(reps, stream)
}

pub const STABILITY_LEVELS: [f64; 4] = [0.25, 0.5, 0.75, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileGap {
    pub level: f64,
    pub sum_quantile: f64,
    pub scaled_quantile: f64,
    pub gap: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub theta: f64,
    pub scale: f64,
    /// Location shift fitted for θ = 1.
    pub shift: Option<f64>,
    pub gaps: Vec<QuantileGap>,
    pub max_abs_gap: f64,
    pub pass: bool,
}

fn gaps_for(sums: &mut [f64], scaled: &mut [f64], fit_shift: bool) -> (Vec<(f64, f64, f64)>, Option<f64>) {
    sums.sort_unstable_by(f64::total_cmp);
    scaled.sort_unstable_by(f64::total_cmp);
    let qs: Vec<(f64, f64)> =
        STABILITY_LEVELS.iter().map(|&l| (quantile_sorted(sums, l), quantile_sorted(scaled, l))).collect();
    let shift = fit_shift.then(|| qs.iter().map(|(a, b)| a - b).sum::<f64>() / qs.len() as f64);
    let d = shift.unwrap_or(0.0);
    (qs.iter().map(|&(a, b)| (a, b, a - b - d)).collect(), shift)
}

/// Compares quantiles of S + S′ with those of 2^{1/θ}·S.
///
/// The first two thirds of `samples` form independent pairs, the last third
/// is scaled. Standard errors come from `reps` bootstrap resamples; the
/// check passes when every |gap| ≤ 4·stderr.
pub fn stability_check(samples: &[f64], theta: f64, reps: usize, stream: &mut Stream) -> Result<StabilityReport> {
    if samples.len() < 10_000 {
        return Err(Error::param(format!("stability check needs at least 10^4 samples, got {}", samples.len())));
    }
    if !(theta > 0.0) || reps < 2 {
        return Err(Error::param("stability check needs theta > 0 and at least 2 bootstrap resamples"));
    }
    let m = samples.len() / 3;
    let scale = 2f64.powf(1.0 / theta);
    let sums: Vec<f64> = (0..m).map(|j| samples[2 * j] + samples[2 * j + 1]).collect();
    let scaled: Vec<f64> = samples[2 * m..3 * m].iter().map(|x| scale * x).collect();
    let fit_shift = theta == 1.0;
    let (point, shift) = gaps_for(&mut sums.clone(), &mut scaled.clone(), fit_shift);

    let key = stream.fork();
    let boots: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut s = key.child(r as u64).stream();
            let mut a: Vec<f64> = (0..m).map(|_| sums[(s.next_u64() % m as u64) as usize]).collect();
            let mut b: Vec<f64> = (0..m).map(|_| scaled[(s.next_u64() % m as u64) as usize]).collect();
            gaps_for(&mut a, &mut b, fit_shift).0.iter().map(|g| g.2).collect()
        })
        .collect();
    let gaps: Vec<QuantileGap> = point
        .iter()
        .enumerate()
        .map(|(q, &(sq, cq, gap))| {
            let vals: Vec<f64> = boots.iter().map(|b| b[q]).collect();
            let mean = vals.iter().sum::<f64>() / reps as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            QuantileGap { level: STABILITY_LEVELS[q], sum_quantile: sq, scaled_quantile: cq, gap, stderr: var.sqrt() }
        })
        .collect();
    let max_abs_gap = gaps.iter().map(|g| g.gap.abs()).fold(0.0, f64::max);
    let pass = gaps.iter().all(|g| g.gap.abs() <= 4.0 * g.stderr);
    Ok(StabilityReport { theta, scale, shift, gaps, max_abs_gap, pass })
}

/// Tail index from the log-log slope of the empirical survival function
/// over the order statistics between quantile levels `lo` and `hi`.
pub fn tail_index(samples: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    let (i0, i1) = ((lo * n as f64) as usize, ((hi * n as f64) as usize).min(n - 1));
    if i1 <= i0 + 2 || xs[i0] <= 0.0 {
        return Err(Error::Data("tail index needs positive upper order statistics".into()));
    }
    let pts: Vec<(f64, f64)> = (i0..=i1).map(|i| (xs[i].ln(), ((n - i) as f64 / n as f64).ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    // Termwise integration of the sine series.
    fn series_oracle(a: f64, b: f64) -> f64 {
        let mut s = (b / a).ln();
        let mut fact = 1.0; // (2k+1)!
        for k in 1..30 {
            fact *= (2 * k) as f64 * (2 * k + 1) as f64;
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            s += sign * (b.powi(2 * k as i32) - a.powi(2 * k as i32)) / (2.0 * k as f64 * fact);
        }
        s
    }

    #[test]
    fn centering_cases() {
        for i in 1..20 {
            assert_eq!(centering_b(i, 0.5).unwrap(), 0.0);
            assert_eq!(centering_b(i, 0.99).unwrap(), 0.0);
        }
        assert!((centering_b(2, 1.5).unwrap() - 21.0).abs() < 1e-12);
        for i in 2..12u64 {
            let want = series_oracle(1.0 / i as f64, 1.0 / (i - 1) as f64);
            assert!((centering_b(i, 1.0).unwrap() - want).abs() < 1e-10, "i={i}");
        }
        // sin 1 − Ci(1)
        assert!((centering_b(1, 1.0).unwrap() - 0.504_067_061_906_928_4).abs() < 1e-10);
        assert!(centering_b(0, 1.0).is_err());
    }

    #[test]
    fn simpson_polynomial() {
        let v = adaptive_simpson(&|x: f64| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-10);
    }

    fn point() -> GammaMatrix {
        GammaMatrix::from_rows(&[vec![0.0]]).unwrap()
    }

    #[test]
    fn as_printed_divergence_reported() {
        for a in [0.5, 1.5] {
            let p = StableSeriesParams::new(a, point(), Convention::AsPrinted);
            assert!(matches!(StableSampler::new(p), Err(Error::Truncation(_))));
        }
    }

    #[test]
    fn as_printed_alpha_one_is_log_regime() {
        let mut p = StableSeriesParams::new(1.0, point(), Convention::AsPrinted);
        p.truncation.tail_budget = 0.05;
        let s = StableSampler::new(p).unwrap();
        assert_eq!(s.regime, Regime::Log);
        let (b, _) = s.sample(20, &mut Stream::from_seed(1)).unwrap();
        assert!(b.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn reproducible_and_equal_columns() {
        let g = GammaMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let p = StableSeriesParams::new(0.6, g, Convention::Reciprocal);
        let a = sample_stable_field(&p, 300, &mut Stream::from_seed(4)).unwrap().0;
        let b = sample_stable_field(&p, 300, &mut Stream::from_seed(4)).unwrap().0;
        assert_eq!(a, b);
        assert!((0..a.rows()).all(|r| a.row(r)[0] == a.row(r)[1]));
    }

    #[test]
    fn positive_when_uncentered() {
        let p = StableSeriesParams::new(0.5, point(), Convention::Reciprocal);
        let s = StableSampler::new(p).unwrap();
        let (b, d) = s.sample(2000, &mut Stream::from_seed(2)).unwrap();
        assert!(b.values.iter().all(|v| *v > 0.0));
        assert!(d.tail_mean[0] > 0.0);
    }

    #[test]
    fn tail_bound_decreases() {
        // Index 1.4: the compensated remainder shrinks only like N^{-0.21}.
        let mut p = StableSeriesParams::new(1.4, point(), Convention::Reciprocal);
        p.truncation.tail_budget = 0.2;
        let s = StableSampler::new(p).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2usize, 8, 32, 128, 512, 4096] {
            let b = s.tail_bound_at(n);
            assert!(b < prev, "n={n}");
            prev = b;
        }
        assert!(s.tail_bound() <= 0.2 && s.tail_bound_at(s.terms() - 1) > 0.2);
    }

    #[test]
    fn tail_mean_matches_brute_force() {
        // Summable regime: Σ_{i>n} Γ(i−p)/Γ(i) against a long partial sum.
        let p = StableSeriesParams::new(0.6, point(), Convention::Reciprocal);
        let s = StableSampler::new(p).unwrap();
        let e = s.params.exponent();
        let m = 2_000_000u64;
        let brute: f64 = (11..m).map(|i| ln_gamma_ratio(i as f64 - e, i as f64).exp()).sum::<f64>()
            + (m as f64 - 0.5).powf(1.0 - e) / (e - 1.0);
        assert!((s.tail_mean_unit(10) - brute).abs() < 1e-6, "{} {brute}", s.tail_mean_unit(10));
    }

    #[test]
    fn gaussian_is_two_stable() {
        let mut st = Stream::from_seed(5);
        let xs: Vec<f64> = (0..30_000).map(|_| st.normal()).collect();
        let r = stability_check(&xs, 2.0, 100, &mut st).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(!stability_check(&xs, 1.0, 100, &mut st).unwrap().pass);
    }

    #[test]
    fn constant_input_flagged() {
        let xs = vec![1.0; 12_000];
        let r = stability_check(&xs, 1.5, 20, &mut Stream::from_seed(1)).unwrap();
        assert!(!r.pass && r.max_abs_gap > 0.0);
        assert!(stability_check(&xs[..100], 1.5, 20, &mut Stream::from_seed(1)).is_err());
    }

    #[test]
    fn cauchy_needs_shift_only_at_one() {
        // Shifted Cauchy: 1-stable, and S + S' = 2S + c·log 2-free shift only.
        let mut st = Stream::from_seed(6);
        let xs: Vec<f64> = (0..30_000).map(|_| (std::f64::consts::PI * (st.uniform() - 0.5)).tan() + 3.0).collect();
        let r = stability_check(&xs, 1.0, 100, &mut st).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.shift.is_some());
    }

    #[test]
    fn anchor_invariance() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let g = GammaMatrix::from_rows(&rows).unwrap();
        let mut p = StableSeriesParams::new(0.7, g, Convention::Reciprocal);
        let a = sample_stable_field(&p, 5000, &mut Stream::from_seed(1)).unwrap().0;
        p.anchor = 1;
        let b = sample_stable_field(&p, 5000, &mut Stream::from_seed(2)).unwrap().0;
        for c in 0..2 {
            assert!(ks_two_sample(&a.column(c), &b.column(c)).unwrap().passes(0.01));
        }
    }

    #[test]
    fn tail_slope_estimate() {
        // Index-1/2 Lévy-type sum: P[S > x] ~ c·x^{−1/2}.
        let p = StableSeriesParams::new(0.5, point(), Convention::Reciprocal);
        let (b, _) = sample_stable_field(&p, 200_000, &mut Stream::from_seed(3)).unwrap();
        let idx = tail_index(&b.values, 0.99, 0.999).unwrap();
        assert!((idx - 0.5).abs() < 0.1, "{idx}");
    }
}
