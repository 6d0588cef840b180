use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::{ExtReal, KernelSpec, Site};
use crate::stable::{Convention, Truncation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Marginal,
    Fidi,
    ConvergeMax,
    ConvergeMin,
    FbmMax,
    FbmMin,
    SigmaInvariance,
    MaxStability,
    StableField,
    KernelCheck,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Marginal => "marginal",
            ExperimentKind::Fidi => "fidi",
            ExperimentKind::ConvergeMax => "converge-max",
            ExperimentKind::ConvergeMin => "converge-min",
            ExperimentKind::FbmMax => "fbm-max",
            ExperimentKind::FbmMin => "fbm-min",
            ExperimentKind::SigmaInvariance => "sigma-invariance",
            ExperimentKind::MaxStability => "max-stability",
            ExperimentKind::StableField => "stable-field",
            ExperimentKind::KernelCheck => "kernel-check",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    #[default]
    Max,
    Min,
}

/// What an fbm-max run measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbmCheck {
    /// Joint distribution against the limit.
    #[default]
    Fidi,
    /// Gumbel location at each non-anchor site against the drift κ.
    Drift,
    /// Correlation of rescaled maxima between two sites.
    Degeneracy,
}

/// Pass/fail thresholds; each experiment reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// KS significance level.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Multiple of the standard error allowed before a row fails.
    #[serde(default = "default_stderr_multiple")]
    pub stderr_multiple: f64,
    /// Absolute floor for probability comparisons.
    #[serde(default)]
    pub abs: Option<f64>,
    /// Bound on the sup distance over the y-grid at the largest n.
    #[serde(default)]
    pub sup_distance: Option<f64>,
    #[serde(default)]
    pub location: Option<f64>,
    #[serde(default)]
    pub correlation: Option<f64>,
}

fn default_level() -> f64 {
    0.01
}

fn default_stderr_multiple() -> f64 {
    4.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            level: default_level(),
            stderr_multiple: default_stderr_multiple(),
            abs: None,
            sup_distance: None,
            location: None,
            correlation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableSection {
    pub alpha: f64,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub random_signs: bool,
    /// Candidate indices for the stability check; default {α, 1/α}.
    #[serde(default)]
    pub thetas: Vec<f64>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_bootstrap() -> usize {
    200
}

/// One kernel-check entry: either a kernel spec or a power |Δt|^p matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCase {
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    /// Builds Γ = |t₁ − t₂|^p directly, bypassing the kernel's parameter range.
    #[serde(default)]
    pub power_exponent: Option<f64>,
    pub grid: Vec<Site>,
    pub expect_pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    /// File stem; defaults to the label, then the experiment name.
    #[serde(default)]
    pub stem: Option<String>,
}

/// A declarative experiment. Fields not used by the chosen experiment are
/// ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub grid: Vec<Site>,
    /// Two-site Γ values, each giving a [[0, g], [g, 0]] matrix.
    #[serde(default)]
    pub gamma12: Vec<ExtReal>,
    #[serde(default)]
    pub n: Vec<u64>,
    #[serde(default)]
    pub reps: usize,
    #[serde(default)]
    pub inner_samples: usize,
    /// Per-site threshold values; the queried points are the k-fold product.
    #[serde(default)]
    pub y_grid: Vec<f64>,
    #[serde(default)]
    pub process: Process,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub check: FbmCheck,
    /// fbm-min rescaling: "min" (default) or "min_quadratic".
    #[serde(default)]
    pub schedule: Option<crate::empirical::ScheduleMode>,
    #[serde(default)]
    pub anchors: Vec<usize>,
    /// Number of copies folded in max-stability.
    #[serde(default)]
    pub copies: Option<usize>,
    #[serde(default)]
    pub stable: Option<StableSection>,
    #[serde(default)]
    pub kernels: Vec<KernelCase>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_json(&text)
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().or_else(|| self.label.clone()).unwrap_or_else(|| self.experiment.as_str().to_string())
    }

    fn real_grid(&self) -> Option<Vec<f64>> {
        self.grid.iter().map(Site::as_real).collect()
    }

    /// Every violated field, one message each.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let mut bad: Vec<String> = Vec::new();
        let need = |bad: &mut Vec<String>, cond: bool, msg: &str| {
            if !cond {
                bad.push(msg.to_string());
            }
        };
        let kind = self.experiment;
        let t = &self.tolerances;
        need(&mut bad, t.level > 0.0 && t.level < 1.0, "tolerances.level must lie in (0, 1)");
        need(&mut bad, t.stderr_multiple > 0.0, "tolerances.stderr_multiple must be positive");
        if let Some(k) = &self.kernel {
            if let Err(e) = k.validate() {
                bad.push(format!("kernel: {e}"));
            }
        }
        let uses_reps = !matches!(kind, Fidi | KernelCheck);
        if uses_reps {
            need(&mut bad, self.reps > 0, "reps must be a positive count");
        }
        let has_gamma = !self.gamma12.is_empty() || (self.kernel.is_some() && !self.grid.is_empty());
        match kind {
            Fidi | ConvergeMax | ConvergeMin => {
                need(&mut bad, has_gamma, "gamma12 or kernel with grid is required");
                need(&mut bad, !self.y_grid.is_empty(), "y_grid must list at least one threshold");
                for g in &self.gamma12 {
                    need(&mut bad, g.0 >= 0.0, "gamma12 values must be >= 0");
                }
            }
            SigmaInvariance | MaxStability => need(&mut bad, self.kernel.is_some() && !self.grid.is_empty(), "kernel and grid are required"),
            _ => {}
        }
        if matches!(kind, Fidi | ConvergeMin | FbmMin) {
            need(&mut bad, self.inner_samples > 0, "inner_samples must be a positive count");
        }
        if matches!(kind, ConvergeMax | ConvergeMin | FbmMax | FbmMin) {
            need(&mut bad, !self.n.is_empty(), "n must list at least one copy count");
            need(&mut bad, self.n.iter().all(|&n| n >= 2), "every n must be >= 2");
        }
        let min_thresholds = kind == ConvergeMin || kind == FbmMin || (kind == Fidi && self.process == Process::Min);
        if min_thresholds {
            need(&mut bad, self.y_grid.iter().all(|y| *y >= 0.0), "y_grid values must be >= 0 for minima");
        }
        if matches!(kind, FbmMax | FbmMin) {
            match self.alpha {
                Some(a) => need(&mut bad, a > 0.0 && a <= 2.0, "alpha must lie in (0, 2]"),
                None => need(&mut bad, false, "alpha is required"),
            }
            need(&mut bad, self.t0.is_none_or(|t| t > 0.0), "t0 must be positive");
            match self.real_grid() {
                Some(g) => need(&mut bad, g.contains(&0.0), "grid must contain 0, the t0 anchor"),
                None => need(&mut bad, false, "grid must hold real sites"),
            }
            need(&mut bad, self.grid.len() >= 2 || self.check == FbmCheck::Drift, "grid needs at least two sites");
            if kind == FbmMin || self.check == FbmCheck::Fidi {
                need(&mut bad, !self.y_grid.is_empty(), "y_grid must list at least one threshold");
            }
            if kind == FbmMax && self.check == FbmCheck::Fidi {
                need(&mut bad, self.alpha.is_none_or(|a| a <= 1.0), "the fidi check needs alpha <= 1 (no limit otherwise)");
            }
            if kind == FbmMax && self.check != FbmCheck::Fidi {
                let tol = if self.check == FbmCheck::Drift { t.location } else { t.correlation };
                need(&mut bad, tol.is_some(), "tolerances.location / tolerances.correlation must be set for this check");
            }
            if kind == FbmMin {
                need(&mut bad, 
                    self.schedule.is_none_or(|m| m != crate::empirical::ScheduleMode::Max),
                    "fbm-min needs a minima schedule",
                );
            }
        }
        if kind == SigmaInvariance {
            need(&mut bad, self.anchors.len() >= 2, "anchors must list at least two sites");
            need(&mut bad, self.anchors.iter().all(|&a| a < self.grid.len()), "anchors must index the grid");
        }
        if kind == MaxStability {
            need(&mut bad, self.copies.is_none_or(|c| c >= 2), "copies must be >= 2");
        }
        if kind == StableField {
            match &self.stable {
                Some(s) => {
                    need(&mut bad, s.alpha > 0.0 && s.alpha < 2.0, "stable.alpha must lie in (0, 2)");
                    need(&mut bad, s.bootstrap >= 2, "stable.bootstrap must be >= 2");
                    need(&mut bad, s.thetas.iter().all(|t| *t > 0.0), "stable.thetas must be positive");
                    need(&mut bad, self.reps >= 10_000, "stable-field needs reps >= 10^4 for the stability check");
                }
                None => need(&mut bad, false, "stable section is required"),
            }
        }
        if kind == KernelCheck {
            need(&mut bad, !self.kernels.is_empty(), "kernels must list at least one case");
            for (i, c) in self.kernels.iter().enumerate() {
                if c.kernel.is_some() == c.power_exponent.is_some() {
                    bad.push(format!("kernels[{i}]: give exactly one of kernel, power_exponent"));
                }
                if c.grid.is_empty() {
                    bad.push(format!("kernels[{i}]: grid is empty"));
                }
                if c.power_exponent.is_some() && c.grid.iter().any(|s| s.as_real().is_none()) {
                    bad.push(format!("kernels[{i}]: power_exponent needs a real grid"));
                }
            }
        }
        match bad.len() {
            0 => Ok(()),
            _ => Err(Error::Config(bad)),
        }
    }
}
