use serde::{Deserialize, Serialize};

use super::{mark_blocks, MarkBlock};
use crate::error::{Error, Result};
use crate::gauss::chunked_rows;
use crate::kernel::{GammaMatrix, Site};
use crate::rng::Stream;
use crate::stats::mc_stderr;

/// Joint distribution query at k sites. `gamma` is Γ restricted to the
/// queried sites, in query order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidiQuery {
    pub thresholds: Vec<f64>,
    pub gamma: GammaMatrix,
    /// Additive per-site constants κ; the query then concerns M_Γ + κ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    /// Anchor of the W⁽ˢ⁾ marks, as a position in the query.
    #[serde(default)]
    pub anchor: usize,
}

impl FidiQuery {
    pub fn new(gamma: GammaMatrix, thresholds: Vec<f64>) -> Self {
        FidiQuery { thresholds, gamma, drift: None, anchor: 0 }
    }

    pub fn with_drift(mut self, drift: Vec<f64>) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn with_anchor(mut self, anchor: usize) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn sites(&self) -> &[Site] {
        self.gamma.sites()
    }

    /// Thresholds with the drift subtracted.
    fn effective(&self) -> Vec<f64> {
        match &self.drift {
            Some(d) => self.thresholds.iter().zip(d).map(|(y, k)| y - k).collect(),
            None => self.thresholds.clone(),
        }
    }

    fn check(&self, min_query: bool) -> Result<()> {
        let k = self.thresholds.len();
        let mut bad = Vec::new();
        if k == 0 {
            bad.push("query needs at least one site".to_string());
        }
        if self.gamma.len() != k {
            bad.push(format!("gamma has {} sites but {k} thresholds were given", self.gamma.len()));
        }
        if let Some(d) = &self.drift {
            if d.len() != k {
                bad.push(format!("drift has {} entries, expected {k}", d.len()));
            }
            if d.iter().any(|x| !x.is_finite()) {
                bad.push("drift values must be finite".to_string());
            }
        }
        if self.thresholds.iter().any(|y| !y.is_finite()) {
            bad.push("thresholds must be finite".to_string());
        }
        if min_query && self.thresholds.iter().any(|y| *y < 0.0) {
            bad.push("minimum thresholds must be >= 0".to_string());
        }
        if k > 0 && self.anchor >= k {
            bad.push(format!("anchor {} out of range for {k} sites", self.anchor));
        }
        match bad.len() {
            0 => Ok(()),
            _ => Err(Error::Config(bad)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidiMethod {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidiResult {
    pub probability: f64,
    pub stderr: f64,
    pub inner_samples: usize,
    pub method: FidiMethod,
    /// Root seed and path of the stream that produced the estimate.
    pub stream: Option<String>,
}

/// P[M_Γ(t_j) ≤ y_j for all j] = exp(−E[max_j exp(W(t_j) − σ²(t_j)/2 − y_j)]).
pub fn fidi_cdf_max(q: &FidiQuery, inner_samples: usize, stream: &mut Stream) -> Result<FidiResult> {
    q.check(false)?;
    let y = q.effective();
    evaluate(q, inner_samples, stream, |b| {
        let ys: Vec<f64> = b.indices.iter().map(|&i| y[i]).collect();
        if b.len() == 1 {
            return Inner::Exact((-ys[0]).exp());
        }
        Inner::Mc(Box::new(move |b: &MarkBlock, w: &[f64]| {
            let mut m = f64::NEG_INFINITY;
            for j in 0..w.len() {
                m = m.max(w[j] - b.half_var[j] - ys[j]);
            }
            m.exp()
        }))
    })
}

/// P[L_Γ(t_j) > y_j for all j] = exp(−E|∪_j [−W(t_j) − y_j, −W(t_j) + y_j]|).
pub fn fidi_surv_min(q: &FidiQuery, inner_samples: usize, stream: &mut Stream) -> Result<FidiResult> {
    q.check(true)?;
    if q.drift.is_some() {
        return Err(Error::param("drift is not defined for minimum queries"));
    }
    let y = q.thresholds.clone();
    evaluate(q, inner_samples, stream, |b| {
        let ys: Vec<f64> = b.indices.iter().map(|&i| y[i]).collect();
        if b.len() == 1 {
            return Inner::Exact(2.0 * ys[0]);
        }
        Inner::Mc(Box::new(move |_: &MarkBlock, w: &[f64]| {
            let mut iv: Vec<(f64, f64)> = w.iter().zip(&ys).map(|(w, y)| (-w - y, -w + y)).collect();
            union_length(&mut iv)
        }))
    })
}

/// Lebesgue measure of a union of closed intervals (sorted in place).
pub fn union_length(intervals: &mut [(f64, f64)]) -> f64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &(a, b) in intervals.iter().filter(|(a, b)| b > a) {
        cur = match cur {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((ca, cb)) = cur {
        total += cb - ca;
    }
    total
}

type InnerFn = Box<dyn Fn(&MarkBlock, &[f64]) -> f64 + Sync>;

enum Inner {
    Exact(f64),
    Mc(InnerFn),
}

// Σ over blocks of E_b, with the probability exp(−Σ E_b).
fn evaluate(
    q: &FidiQuery,
    inner_samples: usize,
    stream: &mut Stream,
    inner: impl Fn(&MarkBlock) -> Inner,
) -> Result<FidiResult> {
    let blocks = mark_blocks(&q.gamma, q.anchor)?;
    let key = stream.fork();
    let (mut e, mut var) = (0.0, 0.0);
    let mut method = FidiMethod::Exact;
    for (bi, b) in blocks.iter().enumerate() {
        match inner(b) {
            Inner::Exact(v) => e += v,
            Inner::Mc(f) => {
                if inner_samples < 2 {
                    return Err(Error::param("Monte Carlo fidi needs inner_samples >= 2"));
                }
                method = FidiMethod::MonteCarlo;
                let k = b.len();
                let draws = chunked_rows(&key.child(bi as u64), inner_samples, 1, |s, rows, out| {
                    let (mut z, mut w) = (vec![0.0; k], vec![0.0; k]);
                    for o in out.iter_mut().take(rows) {
                        b.draw(s, &mut z, &mut w);
                        *o = f(b, &w);
                    }
                    Ok(())
                })?;
                let (m, se) = mc_stderr(&draws)?;
                e += m;
                var += se * se;
            }
        }
    }
    let p = (-e).exp();
    Ok(FidiResult {
        probability: p.clamp(0.0, 1.0),
        stderr: p * var.sqrt(),
        inner_samples: if method == FidiMethod::Exact { 0 } else { inner_samples },
        method,
        stream: (method == FidiMethod::MonteCarlo).then(|| key.to_string()),
    })
}
