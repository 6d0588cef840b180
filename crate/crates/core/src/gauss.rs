//! Covariance matrices, jittered Cholesky factorization and batched sampling
//! of zero-mean Gaussian paths on a site grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::Site;
use crate::rng::{Stream, StreamKey};

/// Paths per independent sub-stream in batched sampling.
pub(crate) const ROWS_PER_CHUNK: usize = 1024;

/// A symmetric covariance matrix over an ordered site list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix {
    sites: Vec<Site>,
    values: Vec<f64>,
}

impl CovMatrix {
    pub fn new(sites: Vec<Site>, values: Vec<f64>) -> Result<Self> {
        let k = sites.len();
        if k == 0 || values.len() != k * k {
            return Err(Error::param(format!("covariance needs {k}x{k} values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("covariance entries must be finite"));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..k {
            for j in 0..i {
                if (values[i * k + j] - values[j * k + i]).abs() > 1e-12 * scale {
                    return Err(Error::param(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(CovMatrix { sites, values })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Fractional Brownian motion covariance ½(|t₁|^α + |t₂|^α − |t₁ − t₂|^α).
pub fn fbm_cov(grid: &[f64], alpha: f64) -> Result<CovMatrix> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::param(format!("fbm alpha must lie in (0, 2], got {alpha}")));
    }
    if let Some(t) = grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::param(format!("fbm grid points must be finite and >= 0, got {t}")));
    }
    let k = grid.len();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let (a, b) = (grid[i], grid[j]);
            values[i * k + j] = 0.5 * (a.powf(alpha) + b.powf(alpha) - (a - b).abs().powf(alpha));
        }
    }
    CovMatrix::new(Site::reals(grid), values)
}

/// Diagonal jitter escalation: `start · max_norm · growth^j` for j = 0..max_tries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterPolicy {
    pub start: f64,
    pub growth: f64,
    pub max_tries: u32,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy { start: 1e-12, growth: 10.0, max_tries: 6 }
    }
}

/// A covariance together with a lower-triangular L, L·Lᵀ ≈ C + jitter·I.
#[derive(Clone, Debug)]
pub struct FactoredCov {
    cov: CovMatrix,
    lower: Vec<f64>,
    jitter_used: f64,
}

impl FactoredCov {
    pub fn cov(&self) -> &CovMatrix {
        &self.cov
    }

    pub fn len(&self) -> usize {
        self.cov.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cov.is_empty()
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.len() + j]
    }

    /// out = L·z.
    #[inline]
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        let k = self.len();
        for i in 0..k {
            let row = &self.lower[i * k..i * k + i + 1];
            out[i] = row.iter().zip(z).map(|(l, x)| l * x).sum();
        }
    }

    /// Largest entrywise |L·Lᵀ − C|.
    pub fn reconstruction_error(&self) -> f64 {
        reconstruction_error(&self.cov, &self.lower)
    }
}

fn reconstruction_error(cov: &CovMatrix, lower: &[f64]) -> f64 {
    let k = cov.len();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..=j).map(|p| lower[i * k + p] * lower[j * k + p]).sum();
            worst = worst.max((s - cov.get(i, j)).abs());
        }
    }
    worst
}

// Semidefinite-aware Cholesky of C + jitter·I. Pivots within `zero_tol` of
// zero get an all-zero column. Returns the offending (row, pivot) on failure.
fn try_cholesky(cov: &CovMatrix, jitter: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let k = cov.len();
    let norm = cov.max_norm();
    let zero_tol = 1e-13 * norm * k as f64;
    let mut l = vec![0.0; k * k];
    for j in 0..k {
        let d = cov.get(j, j) + jitter - (0..j).map(|p| l[j * k + p] * l[j * k + p]).sum::<f64>();
        if d < -zero_tol {
            return Err((j, d));
        }
        if d <= zero_tol {
            continue;
        }
        let root = d.sqrt();
        l[j * k + j] = root;
        for i in (j + 1)..k {
            let off = cov.get(i, j) - (0..j).map(|p| l[i * k + p] * l[j * k + p]).sum::<f64>();
            l[i * k + j] = off / root;
        }
    }
    let mut jittered = cov.clone();
    for i in 0..k {
        jittered.values[i * k + i] += jitter;
    }
    if reconstruction_error(&jittered, &l) > 1e-8 * norm.max(f64::MIN_POSITIVE) + jitter {
        // A skipped pivot hid a nonzero off-diagonal remainder: indefinite.
        let row = (0..k).find(|&j| l[j * k + j] == 0.0).unwrap_or(0);
        return Err((row, 0.0));
    }
    Ok(l)
}

/// Factors `c`, first without jitter, then escalating per `policy`.
pub fn cholesky_factor(c: &CovMatrix, policy: JitterPolicy) -> Result<FactoredCov> {
    let norm = c.max_norm();
    let base = policy.start * if norm > 0.0 { norm } else { 1.0 };
    let mut last = (0, 0.0);
    for attempt in 0..=policy.max_tries {
        let jitter = if attempt == 0 { 0.0 } else { base * policy.growth.powi(attempt as i32 - 1) };
        match try_cholesky(c, jitter) {
            Ok(lower) => return Ok(FactoredCov { cov: c.clone(), lower, jitter_used: jitter }),
            Err(fail) => last = fail,
        }
    }
    Err(Error::Factorization { tries: policy.max_tries, pivot: last.1, row: last.0 })
}

/// Sampled paths: one row per path, columns aligned with `sites`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBatch {
    pub sites: Vec<Site>,
    /// Row-major `rows × sites.len()` values.
    pub values: Vec<f64>,
    pub provenance: Option<StreamKey>,
}

impl PathBatch {
    pub fn new(sites: Vec<Site>, values: Vec<f64>, provenance: Option<StreamKey>) -> Self {
        debug_assert!(sites.is_empty() || values.len() % sites.len() == 0);
        PathBatch { sites, values, provenance }
    }

    pub fn width(&self) -> usize {
        self.sites.len()
    }

    pub fn rows(&self) -> usize {
        if self.sites.is_empty() {
            0
        } else {
            self.values.len() / self.sites.len()
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let k = self.width();
        &self.values[r * k..(r + 1) * k]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.width()).copied().collect()
    }

    /// CSV text: a header of site coordinates, then one row per path, each
    /// value written with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.sites.iter().map(|s| s.to_string()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.rows() {
            let row: Vec<String> = self.row(r).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Runs `fill(chunk_stream, rows_in_chunk, out)` over fixed-size chunks of
/// `rows`, each chunk on its own sub-stream of `key`. The result does not
/// depend on the rayon worker count.
pub(crate) fn chunked_rows<F>(key: &StreamKey, rows: usize, width: usize, fill: F) -> Result<Vec<f64>>
where
    F: Fn(&mut Stream, usize, &mut [f64]) -> Result<()> + Sync,
{
    chunked_rows_by(key, rows, width, ROWS_PER_CHUNK, fill)
}

pub(crate) fn chunked_rows_by<F>(
    key: &StreamKey,
    rows: usize,
    width: usize,
    per_chunk: usize,
    fill: F,
) -> Result<Vec<f64>>
where
    F: Fn(&mut Stream, usize, &mut [f64]) -> Result<()> + Sync,
{
    let mut values = vec![0.0; rows * width];
    if width == 0 {
        return Ok(values);
    }
    values
        .par_chunks_mut(per_chunk.max(1) * width)
        .enumerate()
        .try_for_each(|(c, out)| {
            let mut stream = key.child(c as u64).stream();
            fill(&mut stream, out.len() / width, out)
        })?;
    Ok(values)
}

/// `m` i.i.d. N(0, C) paths.
pub fn sample_paths(c: &FactoredCov, m: usize, stream: &mut Stream) -> PathBatch {
    let k = c.len();
    let key = stream.fork();
    let values = chunked_rows(&key, m, k, |s, rows, out| {
        let mut z = vec![0.0; k];
        for r in 0..rows {
            s.fill_normal(&mut z);
            c.apply(&z, &mut out[r * k..(r + 1) * k]);
        }
        Ok(())
    })
    .expect("path sampling is infallible");
    PathBatch::new(c.cov().sites().to_vec(), values, Some(key))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(rows: &[&[f64]]) -> CovMatrix {
        let k = rows.len();
        CovMatrix::new((0..k).map(|i| Site::Real(i as f64)).collect(), rows.iter().flat_map(|r| r.iter().copied()).collect())
            .unwrap()
    }

    #[test]
    fn fbm_cov_examples() {
        assert_eq!(fbm_cov(&[1.0], 1.0).unwrap().get(0, 0), 1.0);
        let c = fbm_cov(&[1.0, 2.0], 1.0).unwrap();
        assert_eq!((c.get(0, 0), c.get(0, 1), c.get(1, 1)), (1.0, 1.0, 2.0));
        let c = fbm_cov(&[0.0, 3.0], 0.7).unwrap();
        assert_eq!((c.get(0, 0), c.get(0, 1)), (0.0, 0.0));
        assert!((c.get(1, 1) - 3f64.powf(0.7)).abs() < 1e-14);
        assert!(fbm_cov(&[1.0], 2.5).is_err());
        assert!(fbm_cov(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn identity_factors_exactly() {
        let f = cholesky_factor(&cov(&[&[1.0, 0.0], &[0.0, 1.0]]), JitterPolicy::default()).unwrap();
        assert_eq!(f.jitter_used(), 0.0);
        assert_eq!((f.lower(0, 0), f.lower(1, 0), f.lower(1, 1)), (1.0, 0.0, 1.0));
    }

    #[test]
    fn rank_deficient_reconstructs() {
        let c = cov(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let f = cholesky_factor(&c, JitterPolicy::default()).unwrap();
        assert!(f.reconstruction_error() <= f.jitter_used() + 1e-8 * c.max_norm());
    }

    #[test]
    fn indefinite_fails() {
        // eigenvalues 3 and -1
        let c = cov(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let policy = JitterPolicy { start: 1e-12, growth: 10.0, max_tries: 1 };
        match cholesky_factor(&c, policy) {
            Err(Error::Factorization { pivot, row, .. }) => {
                assert_eq!(row, 1);
                assert!(pivot < 0.0);
            }
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn jitter_rescues_slightly_indefinite() {
        let c = cov(&[&[1.0, 1.0 + 1e-9], &[1.0 + 1e-9, 1.0]]);
        let f = cholesky_factor(&c, JitterPolicy::default()).unwrap();
        assert!(f.jitter_used() > 0.0);
        assert!(f.reconstruction_error() <= f.jitter_used() + 1e-8);
    }

    #[test]
    fn identity_sample_means() {
        let f = cholesky_factor(&cov(&[&[1.0, 0.0], &[0.0, 1.0]]), JitterPolicy::default()).unwrap();
        let m = 100_000;
        let b = sample_paths(&f, m, &mut Stream::from_seed(11));
        assert_eq!(b.rows(), m);
        for c in 0..2 {
            let mean = b.column(c).iter().sum::<f64>() / m as f64;
            assert!(mean.abs() < 4.0 / (m as f64).sqrt(), "mean {mean}");
        }
    }

    #[test]
    fn perfectly_correlated_columns_match() {
        let f = cholesky_factor(&cov(&[&[1.0, 1.0], &[1.0, 1.0]]), JitterPolicy::default()).unwrap();
        let b = sample_paths(&f, 1000, &mut Stream::from_seed(5));
        let scale = f.jitter_used().sqrt() * 10.0;
        for r in 0..b.rows() {
            assert!((b.row(r)[0] - b.row(r)[1]).abs() <= scale);
        }
    }

    #[test]
    fn brownian_covariance_matches() {
        let f = cholesky_factor(&fbm_cov(&[1.0, 2.0], 1.0).unwrap(), JitterPolicy::default()).unwrap();
        let m = 100_000;
        let b = sample_paths(&f, m, &mut Stream::from_seed(99));
        let (x, y) = (b.column(0), b.column(1));
        let prods: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
        let (mean, se) = crate::stats::mc_stderr(&prods).unwrap();
        assert!((mean - 1.0).abs() < 4.0 * se, "cov {mean} ± {se}");
    }

    #[test]
    fn empty_batch() {
        let f = cholesky_factor(&cov(&[&[1.0]]), JitterPolicy::default()).unwrap();
        let b = sample_paths(&f, 0, &mut Stream::from_seed(1));
        assert_eq!(b.rows(), 0);
        assert_eq!(b.to_csv(), "0\n");
    }

    #[test]
    fn deterministic_given_seed() {
        let f = cholesky_factor(&fbm_cov(&[0.5, 1.0, 1.5], 0.8).unwrap(), JitterPolicy::default()).unwrap();
        let a = sample_paths(&f, 3000, &mut Stream::from_seed(42));
        let b = sample_paths(&f, 3000, &mut Stream::from_seed(42));
        assert_eq!(a, b);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = one.install(|| sample_paths(&f, 3000, &mut Stream::from_seed(42)));
        assert_eq!(a.values, c.values);
    }

    #[test]
    fn csv_format() {
        let b = PathBatch::new(Site::reals(&[0.0, 1.5]), vec![1.0, -0.25], None);
        assert_eq!(b.to_csv(), "0,1.5\n1.0000000000000000e0,-2.5000000000000000e-1\n");
    }
}
