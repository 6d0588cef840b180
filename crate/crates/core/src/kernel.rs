//! Negative-definite kernels and their discretization on finite site grids.
//!
//! A kernel Γ may take the value +∞ (stored as `f64::INFINITY`); the sites
//! are then split into blocks on which Γ is finite, and blocks are mutually
//! independent in every process built from Γ.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::gauss::CovMatrix;

/// Sentinel for Γ = +∞ (independent blocks).
pub const INF: f64 = f64::INFINITY;

/// A point of an index set: a real time or a point on the unit sphere in R³.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Site {
    Real(f64),
    Sphere([f64; 3]),
}

impl Site {
    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Site::Real(t) => Some(t),
            Site::Sphere(_) => None,
        }
    }

    pub fn reals(ts: &[f64]) -> Vec<Site> {
        ts.iter().map(|&t| Site::Real(t)).collect()
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Real(t) => write!(f, "{t}"),
            Site::Sphere([x, y, z]) => write!(f, "({x} {y} {z})"),
        }
    }
}

/// An extended nonnegative real in JSON: a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() && self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtReal(x)),
            Raw::Str(s) if s == "inf" || s == "+inf" => Ok(ExtReal(INF)),
            Raw::Str(s) => Err(de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

/// A negative-definite kernel, possibly extended-valued.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Γ(t₁,t₂) = |t₁ − t₂|^α on the real line, α ∈ (0, 2].
    FbmIncrement { alpha: f64 },
    /// Γ = ρ^β with ρ the geodesic distance on the unit sphere, β ∈ (0, 1).
    SphereGeodesic { beta: f64 },
    /// Explicit matrix over a fixed list of sites.
    CustomMatrix { sites: Vec<Site>, gamma: Vec<Vec<ExtReal>> },
    Scaled { base: Box<KernelSpec>, factor: f64 },
}

impl KernelSpec {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            KernelSpec::FbmIncrement { .. } => "fbm_increment",
            KernelSpec::SphereGeodesic { .. } => "sphere_geodesic",
            KernelSpec::CustomMatrix { .. } => "custom_matrix",
            KernelSpec::Scaled { .. } => "scaled",
        }
    }

    /// Checks the parameter invariants of the variant (recursively for `Scaled`).
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::FbmIncrement { alpha } => {
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return Err(Error::param(format!("fbm alpha must lie in (0, 2], got {alpha}")));
                }
            }
            KernelSpec::SphereGeodesic { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::param(format!("sphere beta must lie in (0, 1), got {beta}")));
                }
            }
            KernelSpec::CustomMatrix { sites, gamma } => {
                let values: Vec<f64> = gamma.iter().flatten().map(|e| e.0).collect();
                if gamma.len() != sites.len() || gamma.iter().any(|r| r.len() != sites.len()) {
                    return Err(Error::Structure(format!(
                        "custom matrix must be {0}x{0} to match its sites",
                        sites.len()
                    )));
                }
                check_matrix(sites.len(), &values)?;
                decompose_values(sites.len(), &values)?;
            }
            KernelSpec::Scaled { base, factor } => {
                if !(*factor >= 0.0) || !factor.is_finite() {
                    return Err(Error::param(format!("scale factor must be finite and >= 0, got {factor}")));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// Loads a custom kernel from `{"sites": [...], "gamma": [[...]]}`.
    pub fn custom_from_json(text: &str) -> Result<KernelSpec> {
        #[derive(Deserialize)]
        struct Doc {
            sites: Vec<Site>,
            gamma: Vec<Vec<ExtReal>>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        let spec = KernelSpec::CustomMatrix { sites: doc.sites, gamma: doc.gamma };
        spec.validate()?;
        Ok(spec)
    }
}

/// Γ(t₁, t₂) for the given kernel.
pub fn eval_gamma(spec: &KernelSpec, t1: &Site, t2: &Site) -> Result<f64> {
    spec.validate()?;
    eval_unchecked(spec, t1, t2)
}

fn eval_unchecked(spec: &KernelSpec, t1: &Site, t2: &Site) -> Result<f64> {
    let domain = |s: &Site| Error::Domain { site: s.to_string(), kernel: spec.name() };
    match spec {
        KernelSpec::FbmIncrement { alpha } => {
            let a = t1.as_real().filter(|x| x.is_finite()).ok_or_else(|| domain(t1))?;
            let b = t2.as_real().filter(|x| x.is_finite()).ok_or_else(|| domain(t2))?;
            Ok((a - b).abs().powf(*alpha))
        }
        KernelSpec::SphereGeodesic { beta } => {
            let a = sphere_point(t1).ok_or_else(|| domain(t1))?;
            let b = sphere_point(t2).ok_or_else(|| domain(t2))?;
            if a == b {
                return Ok(0.0);
            }
            let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
            Ok(dot.acos().powf(*beta))
        }
        KernelSpec::CustomMatrix { sites, gamma } => {
            let i = sites.iter().position(|s| s == t1).ok_or_else(|| domain(t1))?;
            let j = sites.iter().position(|s| s == t2).ok_or_else(|| domain(t2))?;
            Ok(gamma[i][j].0)
        }
        KernelSpec::Scaled { base, factor } => {
            let v = eval_unchecked(base, t1, t2)?;
            Ok(if v.is_infinite() { INF } else { v * factor })
        }
    }
}

fn sphere_point(s: &Site) -> Option<[f64; 3]> {
    match *s {
        Site::Sphere(p) => {
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            ((norm - 1.0).abs() < 1e-9).then_some(p)
        }
        Site::Real(_) => None,
    }
}

/// Γ evaluated on a finite grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaMatrix {
    sites: Vec<Site>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GammaMatrixDoc {
    sites: Vec<Site>,
    gamma: Vec<Vec<ExtReal>>,
}

impl Serialize for GammaMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let k = self.len();
        GammaMatrixDoc {
            sites: self.sites.clone(),
            gamma: (0..k).map(|i| (0..k).map(|j| ExtReal(self.get(i, j))).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GammaMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = GammaMatrixDoc::deserialize(d)?;
        let values: Vec<f64> = doc.gamma.iter().flatten().map(|e| e.0).collect();
        GammaMatrix::from_values(doc.sites, values).map_err(de::Error::custom)
    }
}

fn check_matrix(k: usize, values: &[f64]) -> Result<()> {
    if k == 0 {
        return Err(Error::Structure("empty site grid".into()));
    }
    if values.len() != k * k {
        return Err(Error::Structure(format!("expected {} entries, got {}", k * k, values.len())));
    }
    let finite_max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    for i in 0..k {
        if values[i * k + i] != 0.0 {
            return Err(Error::Structure(format!("diagonal entry {i} is {} (must be 0)", values[i * k + i])));
        }
        for j in 0..k {
            let v = values[i * k + j];
            if v.is_nan() || v < 0.0 {
                return Err(Error::Structure(format!("entry ({i},{j}) = {v} is not in [0, inf]")));
            }
            let w = values[j * k + i];
            let symmetric = if v.is_infinite() || w.is_infinite() {
                v == w
            } else {
                (v - w).abs() <= 1e-12 * finite_max.max(1.0)
            };
            if !symmetric {
                return Err(Error::Structure(format!("matrix not symmetric at ({i},{j}): {v} vs {w}")));
            }
        }
    }
    Ok(())
}

impl GammaMatrix {
    /// Builds and validates a matrix from row-major values.
    pub fn from_values(sites: Vec<Site>, values: Vec<f64>) -> Result<Self> {
        let k = sites.len();
        check_matrix(k, &values)?;
        decompose_values(k, &values)?;
        Ok(GammaMatrix { sites, values })
    }

    /// Convenience constructor over integer-labelled real sites 0..k.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let sites = (0..rows.len()).map(|i| Site::Real(i as f64)).collect();
        GammaMatrix::from_values(sites, rows.iter().flatten().copied().collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
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

    /// Largest finite entry.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }

    pub fn is_all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sub-matrix on `indices` (in the given order).
    pub fn restrict(&self, indices: &[usize]) -> Result<GammaMatrix> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::param(format!("index {bad} out of range for {} sites", self.len())));
        }
        let sites = indices.iter().map(|&i| self.sites[i].clone()).collect();
        let values = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        GammaMatrix::from_values(sites, values)
    }

    /// Default negative-definiteness tolerance: 1e-8 times the max-norm.
    pub fn default_nd_tolerance(&self) -> f64 {
        1e-8 * self.max_norm()
    }
}

/// Discretizes `spec` on `grid`.
pub fn gamma_matrix(spec: &KernelSpec, grid: &[Site]) -> Result<GammaMatrix> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(Error::Structure("empty site grid".into()));
    }
    let k = grid.len();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        // Validate the diagonal sites too, so a lone bad site is reported.
        eval_unchecked(spec, &grid[i], &grid[i])?;
        for j in (i + 1)..k {
            let v = eval_unchecked(spec, &grid[i], &grid[j])?;
            values[i * k + j] = v;
            values[j * k + i] = v;
        }
    }
    GammaMatrix::from_values(grid.to_vec(), values)
}

/// Disjoint index sets on which Γ is finite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn block_of(&self, index: usize) -> Option<&[usize]> {
        self.blocks.iter().find(|b| b.contains(&index)).map(|b| b.as_slice())
    }
}

fn decompose_values(k: usize, values: &[f64]) -> Result<BlockPartition> {
    let mut label = vec![usize::MAX; k];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        if label[i] != usize::MAX {
            continue;
        }
        let b = blocks.len();
        let members: Vec<usize> = (i..k).filter(|&j| values[i * k + j].is_finite()).collect();
        for &j in &members {
            if label[j] != usize::MAX {
                return Err(Error::Structure(format!(
                    "finiteness is not transitive: site {j} is finite with both {i} and an earlier block"
                )));
            }
            label[j] = b;
        }
        blocks.push(members);
    }
    for i in 0..k {
        for j in 0..k {
            if (label[i] == label[j]) != values[i * k + j].is_finite() {
                return Err(Error::Structure(format!(
                    "finiteness is not transitive: Γ({i},{j}) = {} contradicts the block structure",
                    values[i * k + j]
                )));
            }
        }
    }
    Ok(BlockPartition { blocks })
}

/// Equivalence classes of the relation Γ(i, j) < ∞.
pub fn decompose_extended(g: &GammaMatrix) -> Result<BlockPartition> {
    decompose_values(g.len(), &g.values)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockCheck {
    pub indices: Vec<usize>,
    /// Largest eigenvalue of the block form projected onto zero-sum vectors.
    pub max_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NdReport {
    pub blocks: Vec<BlockCheck>,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks Σᵢⱼ aᵢaⱼΓᵢⱼ ≤ 0 for all zero-sum `a` on every finite block by
/// looking at the spectrum of (I − J/k) Γ (I − J/k).
pub fn validate_negative_definite(g: &GammaMatrix, tol: f64) -> Result<NdReport> {
    let partition = decompose_extended(g)?;
    let mut blocks = Vec::with_capacity(partition.blocks.len());
    for idx in partition.blocks {
        let m = idx.len();
        let max_eigenvalue = if m == 1 {
            0.0
        } else {
            let a = DMatrix::from_fn(m, m, |i, j| g.get(idx[i], idx[j]));
            let p = DMatrix::from_fn(m, m, |i, j| (if i == j { 1.0 } else { 0.0 }) - 1.0 / m as f64);
            let projected = &p * a * &p;
            let projected = (&projected + projected.transpose()) * 0.5;
            SymmetricEigen::new(projected).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        blocks.push(BlockCheck { indices: idx, max_eigenvalue, pass: max_eigenvalue <= tol });
    }
    let worst = blocks.iter().map(|b| b.max_eigenvalue).fold(f64::NEG_INFINITY, f64::max);
    let pass = blocks.iter().all(|b| b.pass);
    Ok(NdReport { blocks, worst, tolerance: tol, pass })
}

/// Covariance of W⁽ˢ⁾, the Gaussian process with incremental variance Γ
/// pinned to zero at site `anchor`.
pub fn ws_covariance(g: &GammaMatrix, anchor: usize) -> Result<CovMatrix> {
    let k = g.len();
    if anchor >= k {
        return Err(Error::param(format!("anchor {anchor} out of range for {k} sites")));
    }
    let outside: Vec<usize> = (0..k).filter(|&i| !g.get(i, anchor).is_finite()).collect();
    if !outside.is_empty() {
        return Err(Error::Block { anchor, indices: outside });
    }
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            values[i * k + j] = 0.5 * (g.get(i, anchor) + g.get(j, anchor) - g.get(i, j));
        }
    }
    CovMatrix::new(g.sites().to_vec(), values)
}

/// exp(−Γ / scale) with +∞ mapped to 0; a valid correlation matrix whenever
/// Γ is negative definite.
pub fn schoenberg_cov_scaled(g: &GammaMatrix, scale: f64) -> Result<CovMatrix> {
    if !(scale > 0.0) {
        return Err(Error::param(format!("schoenberg scale must be positive, got {scale}")));
    }
    let k = g.len();
    let values = (0..k * k).map(|p| (-g.values[p] / scale).exp()).collect();
    CovMatrix::new(g.sites().to_vec(), values)
}

/// Pre-limit correlation exp(−Γ/(4 log n)), for which 4 log n (1 − r) → Γ.
pub fn schoenberg_cov(g: &GammaMatrix, n: f64) -> Result<CovMatrix> {
    if !(n >= 2.0) {
        return Err(Error::param(format!("schoenberg covariance needs n >= 2, got {n}")));
    }
    schoenberg_cov_scaled(g, 4.0 * n.ln())
}

/// Pre-limit correlation exp(−πΓ/n²), for which n²(1 − r)/π → Γ (minima scaling).
pub fn schoenberg_cov_min(g: &GammaMatrix, n: f64) -> Result<CovMatrix> {
    if !(n >= 1.0) {
        return Err(Error::param(format!("minima covariance needs n >= 1, got {n}")));
    }
    schoenberg_cov_scaled(g, n * n / std::f64::consts::PI)
}
