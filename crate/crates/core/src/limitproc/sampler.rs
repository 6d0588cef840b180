use serde::{Deserialize, Serialize};

use super::{mark_blocks, MarkBlock};
use crate::error::{Error, Result};
use crate::gauss::{chunked_rows, PathBatch};
use crate::kernel::{GammaMatrix, Site};
use crate::normal;
use crate::rng::Stream;
use crate::stats::{ks_two_sample, quantile, KsResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxStableOptions {
    /// Site at which the marks W⁽ˢ⁾ vanish.
    pub anchor: usize,
    /// Tail probability used to set the stopping level.
    pub delta: f64,
    pub pilot_draws: usize,
    pub max_points: usize,
}

impl Default for MaxStableOptions {
    fn default() -> Self {
        MaxStableOptions { anchor: 0, delta: 1e-4, pilot_draws: 1000, max_points: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinOptions {
    pub anchor: usize,
    /// Largest threshold at which the sampled minima are guaranteed accurate.
    pub y_max: f64,
    pub delta: f64,
    pub pilot_draws: usize,
    /// Upper limit on the window length 2R.
    pub max_window: f64,
}

impl Default for MinOptions {
    fn default() -> Self {
        MinOptions { anchor: 0, y_max: 4.0, delta: 1e-4, pilot_draws: 1000, max_window: 1e7 }
    }
}

/// Per-batch bookkeeping of a limit-process sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub samples: usize,
    pub mean_points: f64,
    pub max_points: usize,
    /// Stopping level B (maxima) or window half-width R (minima), per block.
    pub levels: Vec<f64>,
    /// Per-sample probability budget for points left out.
    pub delta: f64,
    pub stream: Option<String>,
}

fn check_common(delta: f64, pilot: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if pilot < 2 {
        return Err(Error::param("pilot_draws must be >= 2"));
    }
    Ok(())
}

fn pilot_quantile(b: &MarkBlock, draws: usize, level: f64, s: &mut Stream, f: impl Fn(&[f64]) -> f64) -> f64 {
    let k = b.len();
    let (mut z, mut w) = (vec![0.0; k], vec![0.0; k]);
    let vals: Vec<f64> = (0..draws)
        .map(|_| {
            b.draw(s, &mut z, &mut w);
            f(&w)
        })
        .collect();
    quantile(&vals, level)
}

/// Sampler for M_Γ(t) = maxᵢ (Uᵢ + Wᵢ(t) − σ²(t)/2) + κ(t).
#[derive(Clone, Debug)]
pub struct MaxStableSampler {
    sites: Vec<Site>,
    blocks: Vec<MarkBlock>,
    levels: Vec<f64>,
    drift: Vec<f64>,
    opts: MaxStableOptions,
}

impl MaxStableSampler {
    /// Factors the marks and runs the pilot that fixes the stopping level of
    /// every block.
    pub fn new(g: &GammaMatrix, drift: Option<Vec<f64>>, opts: MaxStableOptions, pilot: &mut Stream) -> Result<Self> {
        check_common(opts.delta, opts.pilot_draws)?;
        let k = g.len();
        let drift = drift.unwrap_or_else(|| vec![0.0; k]);
        if drift.len() != k || drift.iter().any(|d| !d.is_finite()) {
            return Err(Error::param(format!("drift must hold {k} finite values")));
        }
        let blocks = mark_blocks(g, opts.anchor)?;
        let levels = blocks
            .iter()
            .map(|b| {
                let hv = &b.half_var;
                let emp = pilot_quantile(b, opts.pilot_draws, 1.0 - opts.delta, pilot, |w| {
                    w.iter().zip(hv).map(|(w, h)| w - h).fold(f64::NEG_INFINITY, f64::max)
                });
                // A pilot of modest size cannot see a 1 − δ quantile, so the
                // level is also floored by a per-site Gaussian bound taken
                // under the exponentially tilted law of each mark.
                let z = normal::upper_quantile(opts.delta / b.len() as f64);
                let analytic = hv.iter().map(|h| h + (2.0 * h).sqrt() * z).fold(0.0, f64::max);
                emp.max(analytic)
            })
            .collect();
        Ok(MaxStableSampler { sites: g.sites().to_vec(), blocks, levels, drift, opts })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// One path; returns the number of Poisson points used.
    fn sample_into(&self, s: &mut Stream, out: &mut [f64]) -> Result<usize> {
        let mut used = 0;
        for (b, &level) in self.blocks.iter().zip(&self.levels) {
            let k = b.len();
            let mut cur = vec![f64::NEG_INFINITY; k];
            let (mut z, mut w) = (vec![0.0; k], vec![0.0; k]);
            let mut t = 0.0;
            loop {
                t += s.exp1();
                let u = -t.ln();
                let floor = cur.iter().copied().fold(f64::INFINITY, f64::min);
                if u + level < floor {
                    break;
                }
                used += 1;
                if used > self.opts.max_points {
                    return Err(Error::Truncation(format!(
                        "max-stable path needed more than {} points (stopping level {level:.4}, current floor {floor:.4})",
                        self.opts.max_points
                    )));
                }
                b.draw(s, &mut z, &mut w);
                for j in 0..k {
                    cur[j] = cur[j].max(u + w[j] - b.half_var[j]);
                }
            }
            for (j, &i) in b.indices.iter().enumerate() {
                out[i] = cur[j] + self.drift[i];
            }
        }
        Ok(used)
    }

    pub fn sample(&self, reps: usize, stream: &mut Stream) -> Result<(PathBatch, SampleDiagnostics)> {
        let key = stream.fork();
        let k = self.sites.len();
        let raw = chunked_rows(&key, reps, k + 1, |s, rows, out| {
            for row in out.chunks_exact_mut(k + 1).take(rows) {
                row[k] = self.sample_into(s, &mut row[..k])? as f64;
            }
            Ok(())
        })?;
        Ok(split_points(raw, k, self.sites.clone(), key, self.levels.clone(), self.opts.delta))
    }
}

fn split_points(
    raw: Vec<f64>,
    k: usize,
    sites: Vec<Site>,
    key: crate::rng::StreamKey,
    levels: Vec<f64>,
    delta: f64,
) -> (PathBatch, SampleDiagnostics) {
    let rows = raw.len() / (k + 1);
    let mut values = Vec::with_capacity(rows * k);
    let (mut total, mut most) = (0.0, 0usize);
    for row in raw.chunks_exact(k + 1) {
        values.extend_from_slice(&row[..k]);
        total += row[k];
        most = most.max(row[k] as usize);
    }
    let diag = SampleDiagnostics {
        samples: rows,
        mean_points: if rows > 0 { total / rows as f64 } else { 0.0 },
        max_points: most,
        levels,
        delta,
        stream: Some(key.to_string()),
    };
    (PathBatch::new(sites, values, Some(key)), diag)
}

/// Sampler for L_Γ(t) = minᵢ |Uᵢ + Wᵢ(t)| with unit-rate atoms Uᵢ.
#[derive(Clone, Debug)]
pub struct MinSampler {
    sites: Vec<Site>,
    blocks: Vec<MarkBlock>,
    windows: Vec<f64>,
    opts: MinOptions,
}

impl MinSampler {
    pub fn new(g: &GammaMatrix, opts: MinOptions, pilot: &mut Stream) -> Result<Self> {
        check_common(opts.delta, opts.pilot_draws)?;
        if !(opts.y_max > 0.0) || !opts.y_max.is_finite() {
            return Err(Error::param(format!("y_max must be positive, got {}", opts.y_max)));
        }
        let blocks = mark_blocks(g, opts.anchor)?;
        let mut windows = Vec::with_capacity(blocks.len());
        for b in &blocks {
            let emp = pilot_quantile(b, opts.pilot_draws, 1.0 - opts.delta / 2.0, pilot, |w| {
                w.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
            });
            let z = normal::upper_quantile(opts.delta / (4.0 * b.len() as f64));
            let analytic = b.half_var.iter().map(|h| (2.0 * h).sqrt() * z).fold(0.0, f64::max);
            let r = opts.y_max + emp.max(analytic);
            if 2.0 * r > opts.max_window {
                return Err(Error::param(format!(
                    "window 2R = {} exceeds the limit {}; lower y_max or delta",
                    2.0 * r,
                    opts.max_window
                )));
            }
            windows.push(r);
        }
        Ok(MinSampler { sites: g.sites().to_vec(), blocks, windows, opts })
    }

    pub fn windows(&self) -> &[f64] {
        &self.windows
    }

    fn sample_into(&self, s: &mut Stream, out: &mut [f64]) -> usize {
        let mut used = 0;
        for (b, &r) in self.blocks.iter().zip(&self.windows) {
            let k = b.len();
            let mut cur = vec![f64::INFINITY; k];
            let (mut z, mut w) = (vec![0.0; k], vec![0.0; k]);
            let mut visit = |lo: f64, hi: f64, s: &mut Stream, cur: &mut [f64]| {
                let mut u = lo + s.exp1();
                while u <= hi {
                    used += 1;
                    b.draw(s, &mut z, &mut w);
                    for j in 0..k {
                        cur[j] = cur[j].min((u + w[j]).abs());
                    }
                    u += s.exp1();
                }
            };
            visit(-r, r, s, &mut cur);
            // An empty window leaves sites undefined; widen it by annuli
            // [R, 2R] on both sides until every site has seen a point.
            let mut inner = r;
            while cur.iter().any(|c| c.is_infinite()) {
                visit(inner, 2.0 * inner, s, &mut cur);
                visit(-2.0 * inner, -inner, s, &mut cur);
                inner *= 2.0;
            }
            for (j, &i) in b.indices.iter().enumerate() {
                out[i] = cur[j];
            }
        }
        used
    }

    pub fn sample(&self, reps: usize, stream: &mut Stream) -> Result<(PathBatch, SampleDiagnostics)> {
        let key = stream.fork();
        let k = self.sites.len();
        let raw = chunked_rows(&key, reps, k + 1, |s, rows, out| {
            for row in out.chunks_exact_mut(k + 1).take(rows) {
                row[k] = self.sample_into(s, &mut row[..k]) as f64;
            }
            Ok(())
        })?;
        Ok(split_points(raw, k, self.sites.clone(), key, self.windows.clone(), self.opts.delta))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRow {
    /// "site <i>", "max" or "spread".
    pub functional: String,
    pub anchors: (usize, usize),
    pub ks: KsResult,
    pub critical_01: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub pass: bool,
}

/// Samples M_Γ once per anchor (different σ², same Γ) and compares every
/// marginal, the sitewise maximum and the spread max − min against the
/// first anchor by two-sample KS at level 0.01.
pub fn verify_sigma_invariance(
    g: &GammaMatrix,
    anchors: &[usize],
    reps: usize,
    stream: &mut Stream,
) -> Result<InvarianceReport> {
    if anchors.len() < 2 {
        return Err(Error::param("sigma invariance needs at least two anchors"));
    }
    if !g.is_all_finite() {
        return Err(Error::param("sigma invariance needs an all-finite gamma"));
    }
    let k = g.len();
    let functionals = |b: &PathBatch| -> Vec<(String, Vec<f64>)> {
        let mut f: Vec<(String, Vec<f64>)> = (0..k).map(|j| (format!("site {j}"), b.column(j))).collect();
        let rows = (0..b.rows()).map(|r| b.row(r));
        f.push(("max".into(), rows.clone().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()));
        f.push((
            "spread".into(),
            rows.map(|r| {
                let (lo, hi) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
                hi - lo
            })
            .collect(),
        ));
        f
    };
    let mut per_anchor = Vec::with_capacity(anchors.len());
    for &a in anchors {
        let opts = MaxStableOptions { anchor: a, ..Default::default() };
        let sampler = MaxStableSampler::new(g, None, opts, stream)?;
        per_anchor.push(functionals(&sampler.sample(reps, stream)?.0));
    }
    let mut rows = Vec::new();
    for (ai, other) in per_anchor.iter().enumerate().skip(1) {
        for ((name, base), (_, cmp)) in per_anchor[0].iter().zip(other) {
            let ks = ks_two_sample(base, cmp)?;
            rows.push(InvarianceRow {
                functional: name.clone(),
                anchors: (anchors[0], anchors[ai]),
                critical_01: ks.critical(0.01),
                pass: ks.passes(0.01),
                ks,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(InvarianceReport { rows, pass })
}
