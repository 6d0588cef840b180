use serde::Serialize;
use std::time::Instant;

use super::config::{ExperimentConfig, ExperimentKind, FbmCheck, Process};
use super::{ResultRow, ResultTable};
use crate::empirical::{
    fbm_prelimit_cov, normalizer_max, normalizer_min, rescale, sample_ln, sample_mn, FbmSchedule, ScheduleMode,
};
use crate::error::{Error, Result};
use crate::gauss::{cholesky_factor, CovMatrix, JitterPolicy, PathBatch};
use crate::kernel::{
    gamma_matrix, schoenberg_cov, schoenberg_cov_min, validate_negative_definite, GammaMatrix, KernelSpec, Site,
};
use crate::limitproc::{
    fidi_cdf_max, fidi_surv_min, hr_bivariate_cdf_with, verify_sigma_invariance, FidiQuery, MaxStableOptions,
    MaxStableSampler, MinOptions, MinSampler,
};
use crate::rng::StreamKey;
use crate::stable::{stability_check, tail_index, StableSampler, StableSeriesParams};
use crate::stats::{correlation, ks_one_sample, ks_two_sample, mc_stderr, with_rerun};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Runs the configured experiment on the global rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let start = Instant::now();
    let mut ctx = Ctx::new(cfg);
    match cfg.experiment {
        ExperimentKind::Marginal => marginal(&mut ctx)?,
        ExperimentKind::Fidi => fidi(&mut ctx)?,
        ExperimentKind::ConvergeMax => converge(&mut ctx, Process::Max)?,
        ExperimentKind::ConvergeMin => converge(&mut ctx, Process::Min)?,
        ExperimentKind::FbmMax => fbm_max(&mut ctx)?,
        ExperimentKind::FbmMin => fbm_min(&mut ctx)?,
        ExperimentKind::SigmaInvariance => sigma_invariance(&mut ctx)?,
        ExperimentKind::MaxStability => max_stability(&mut ctx)?,
        ExperimentKind::StableField => stable_field(&mut ctx)?,
        ExperimentKind::KernelCheck => kernel_check(&mut ctx)?,
    }
    Ok(ResultTable {
        experiment: cfg.experiment,
        label: cfg.label.clone(),
        seed: cfg.seed,
        rows: ctx.rows,
        row_seconds: ctx.secs,
        runtime_seconds: start.elapsed().as_secs_f64(),
        diagnostics: serde_json::Value::Object(ctx.diag),
        config: cfg.clone(),
    })
}

/// As [`run_experiment`] on a dedicated pool of `threads` workers. Results do
/// not depend on the worker count.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ResultTable> {
    match threads {
        None => run_experiment(cfg),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::param(format!("cannot start {k} worker threads: {e}")))?
            .install(|| run_experiment(cfg)),
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    root: StreamKey,
    next: u64,
    rows: Vec<ResultRow>,
    secs: Vec<f64>,
    clock: Instant,
    diag: serde_json::Map<String, serde_json::Value>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Ctx {
            cfg,
            root: StreamKey::new(cfg.seed),
            next: 0,
            rows: Vec::new(),
            secs: Vec::new(),
            clock: Instant::now(),
            diag: serde_json::Map::new(),
        }
    }

    /// Next stream key; keys are handed out in program order.
    fn key(&mut self) -> StreamKey {
        let k = self.root.child(self.next);
        self.next += 1;
        k
    }

    fn push(&mut self, row: ResultRow) {
        let now = Instant::now();
        self.secs.push((now - self.clock).as_secs_f64());
        self.clock = now;
        self.rows.push(row);
    }

    fn note(&mut self, name: impl Into<String>, value: &impl Serialize) -> Result<()> {
        self.diag.insert(name.into(), serde_json::to_value(value)?);
        Ok(())
    }

    fn level(&self) -> f64 {
        self.cfg.tolerances.level
    }
}

fn row(metric: &str, params: String, estimate: f64, stat: f64) -> ResultRow {
    ResultRow {
        metric: metric.into(),
        params,
        estimate,
        stat,
        reference: None,
        tolerance: None,
        pass: None,
        stream: None,
    }
}

fn fmt_point(y: &[f64]) -> String {
    y.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn two_site(g: f64) -> Result<GammaMatrix> {
    GammaMatrix::from_values(Site::reals(&[0.0, 1.0]), vec![0.0, g, g, 0.0])
}

/// Γ matrices to run over, with a short label each.
fn gammas(cfg: &ExperimentConfig) -> Result<Vec<(String, GammaMatrix)>> {
    if !cfg.gamma12.is_empty() {
        return cfg.gamma12.iter().map(|g| Ok((format!("gamma={}", g.0), two_site(g.0)?))).collect();
    }
    match &cfg.kernel {
        Some(k) => Ok(vec![(format!("kernel={}", k.name()), gamma_matrix(k, &cfg.grid)?)]),
        None => Ok(vec![("sites=1".into(), GammaMatrix::from_values(Site::reals(&[0.0]), vec![0.0])?)]),
    }
}

/// All k-tuples over `ys`, first coordinate slowest.
fn product(ys: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                ys.iter().map(move |&y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

fn joint_fraction(b: &PathBatch, hit: impl Fn(&[f64]) -> bool) -> f64 {
    (0..b.rows()).filter(|&r| hit(b.row(r))).count() as f64 / b.rows() as f64
}

fn emp_cdf(b: &PathBatch, y: &[f64]) -> f64 {
    joint_fraction(b, |r| r.iter().zip(y).all(|(v, y)| v <= y))
}

fn emp_surv(b: &PathBatch, y: &[f64]) -> f64 {
    joint_fraction(b, |r| r.iter().zip(y).all(|(v, y)| v > y))
}

/// Reference value of the limit law at `y`: closed form for one or two
/// sites under maxima, Monte Carlo otherwise.
#[derive(Serialize)]
struct Reference {
    point: Vec<f64>,
    value: f64,
    stderr: f64,
    stream: Option<String>,
}

fn references(
    ctx: &mut Ctx,
    g: &GammaMatrix,
    drift: Option<&[f64]>,
    process: Process,
) -> Result<Vec<Reference>> {
    let k = g.len();
    let inner = ctx.cfg.inner_samples;
    let mut out = Vec::new();
    for y in product(&ctx.cfg.y_grid, k) {
        let shifted: Vec<f64> = match drift {
            Some(d) => y.iter().zip(d).map(|(y, d)| y - d).collect(),
            None => y.clone(),
        };
        let closed = match (process, k) {
            (Process::Max, 1) => Some((-(-shifted[0]).exp()).exp()),
            (Process::Max, 2) => Some(hr_bivariate_cdf_with(g.get(0, 1), shifted[0], shifted[1], true)?),
            _ => None,
        };
        let r = match closed {
            Some(value) => Reference { point: y, value, stderr: 0.0, stream: None },
            None => {
                if inner == 0 {
                    return Err(Error::Config(vec![format!(
                        "inner_samples must be positive for a {k}-site reference"
                    )]));
                }
                let key = ctx.key();
                let q = FidiQuery::new(g.clone(), shifted);
                let res = match process {
                    Process::Max => fidi_cdf_max(&q, inner, &mut key.stream())?,
                    Process::Min => fidi_surv_min(&q, inner, &mut key.stream())?,
                };
                Reference { point: y, value: res.probability, stderr: res.stderr, stream: Some(key.to_string()) }
            }
        };
        out.push(r);
    }
    let name = format!("references_{}", ctx.diag.len());
    ctx.note(name, &out)?;
    Ok(out)
}

/// Per-n sup distances between a rescaled sample and the references, plus
/// the per-point rows and, for several n, a monotonicity row.
fn distance_rows(
    ctx: &mut Ctx,
    prefix: &str,
    refs: &[Reference],
    process: Process,
    decreasing_declared: bool,
    mut sample: impl FnMut(&mut Ctx, u64, &StreamKey) -> Result<PathBatch>,
) -> Result<()> {
    let ns = ctx.cfg.n.clone();
    let tol = ctx.cfg.tolerances.sup_distance;
    let mut sups = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let key = ctx.key();
        let batch = sample(ctx, n, &key)?;
        let reps = batch.rows() as f64;
        let (mut sup, mut se) = (0.0f64, 0.0f64);
        for r in refs {
            let e = match process {
                Process::Max => emp_cdf(&batch, &r.point),
                Process::Min => emp_surv(&batch, &r.point),
            };
            sup = sup.max((e - r.value).abs());
            se = se.max((e * (1.0 - e) / reps).sqrt());
            let metric = if process == Process::Max { "cdf" } else { "survival" };
            let mut pr = row(metric, format!("{prefix};n={n};y={}", fmt_point(&r.point)), e, r.stderr);
            pr.reference = Some(r.value);
            pr.stream = Some(key.to_string());
            ctx.push(pr);
        }
        sups.push(sup);
        let mut sr = row("sup_distance", format!("{prefix};n={n}"), sup, se);
        sr.stream = Some(key.to_string());
        if i + 1 == ns.len() {
            if let Some(t) = tol {
                sr.tolerance = Some(t);
                sr.pass = Some(sup < t);
            }
        }
        ctx.push(sr);
    }
    if sups.len() >= 2 {
        let worst = sups.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let mut dr = row("decreasing", format!("{prefix};largest_step"), worst, 0.0);
        if decreasing_declared {
            dr.pass = Some(worst < 0.0);
            dr.tolerance = Some(0.0);
        }
        ctx.push(dr);
    }
    Ok(())
}

fn marginal(ctx: &mut Ctx) -> Result<()> {
    let (_, g) = gammas(ctx.cfg)?.remove(0);
    let (reps, level, process) = (ctx.cfg.reps, ctx.level(), ctx.cfg.process);
    let k = g.len();
    let key = ctx.key();
    let mut diag = None;
    let att = with_rerun(|a| {
        let mut s = key.child(a as u64).stream();
        let mut pilot = s.child(0);
        let (batch, d) = match process {
            Process::Max => MaxStableSampler::new(&g, None, MaxStableOptions::default(), &mut pilot)?.sample(reps, &mut s)?,
            Process::Min => MinSampler::new(&g, MinOptions::default(), &mut pilot)?.sample(reps, &mut s)?,
        };
        diag = Some(d);
        let ks = (0..k)
            .map(|j| match process {
                Process::Max => ks_one_sample(&batch.column(j), |y| (-(-y).exp()).exp()),
                Process::Min => ks_one_sample(&batch.column(j), |y| if y <= 0.0 { 0.0 } else { -(-2.0 * y).exp_m1() }),
            })
            .collect::<Result<Vec<_>>>()?;
        let pass = ks.iter().all(|r| r.passes(level));
        Ok((ks, pass))
    })?;
    let stream = key.child(att.attempts as u64 - 1).to_string();
    let law = if process == Process::Max { "gumbel" } else { "exp2" };
    for (j, ks) in att.outcome.iter().enumerate() {
        let mut r = row("ks", format!("site={};law={law};attempts={}", g.sites()[j], att.attempts), ks.statistic, ks.critical(level));
        r.tolerance = Some(ks.critical(level));
        r.pass = Some(ks.passes(level));
        r.stream = Some(stream.clone());
        ctx.push(r);
    }
    ctx.note("sampler", &diag)
}

fn fidi(ctx: &mut Ctx) -> Result<()> {
    let (inner, process, tol) = (ctx.cfg.inner_samples, ctx.cfg.process, ctx.cfg.tolerances.clone());
    for (label, g) in gammas(ctx.cfg)? {
        let k = g.len();
        for y in product(&ctx.cfg.y_grid, k) {
            let key = ctx.key();
            let q = FidiQuery::new(g.clone(), y.clone());
            let res = match process {
                Process::Max => fidi_cdf_max(&q, inner, &mut key.stream())?,
                Process::Min => fidi_surv_min(&q, inner, &mut key.stream())?,
            };
            let reference = match (process, k) {
                (Process::Max, 1) => Some((-(-y[0]).exp()).exp()),
                (Process::Max, 2) => Some(hr_bivariate_cdf_with(g.get(0, 1), y[0], y[1], true)?),
                (Process::Min, 1) => Some((-2.0 * y[0]).exp()),
                _ => None,
            };
            let metric = if process == Process::Max { "cdf" } else { "survival" };
            let mut r = row(metric, format!("{label};y={}", fmt_point(&y)), res.probability, res.stderr);
            r.stream = Some(key.to_string());
            if let Some(v) = reference {
                let t = (tol.stderr_multiple * res.stderr).max(tol.abs.unwrap_or(0.0));
                r.reference = Some(v);
                r.tolerance = Some(t);
                r.pass = Some((res.probability - v).abs() < t);
            }
            ctx.push(r);
        }
    }
    Ok(())
}

fn converge(ctx: &mut Ctx, process: Process) -> Result<()> {
    let reps = ctx.cfg.reps;
    for (label, g) in gammas(ctx.cfg)? {
        let refs = references(ctx, &g, None, process)?;
        distance_rows(ctx, &label, &refs, process, process == Process::Max, |_, n, key| {
            let nf = n as f64;
            match process {
                Process::Max => {
                    let cov = schoenberg_cov(&g, nf)?;
                    let f = cholesky_factor(&cov, JitterPolicy::default())?;
                    let norm = normalizer_max(&cov, nf, 0)?;
                    Ok(rescale(&sample_mn(&f, n, reps, &mut key.stream())?, norm.a_n, norm.b_n))
                }
                Process::Min => {
                    let cov = schoenberg_cov_min(&g, nf)?;
                    let f = cholesky_factor(&cov, JitterPolicy::default())?;
                    let norm = normalizer_min(&cov, nf, 0)?;
                    Ok(rescale(&sample_ln(&f, n, reps, &mut key.stream())?, norm.a_n, 0.0))
                }
            }
        })?;
    }
    Ok(())
}

struct FbmSetup {
    grid: Vec<f64>,
    anchor: usize,
    schedule: FbmSchedule,
    gamma: GammaMatrix,
}

fn fbm_setup(cfg: &ExperimentConfig, mode: ScheduleMode) -> Result<FbmSetup> {
    let grid: Vec<f64> = cfg.grid.iter().filter_map(Site::as_real).collect();
    let anchor = grid.iter().position(|&t| t == 0.0).ok_or_else(|| Error::param("grid must contain 0"))?;
    let alpha = cfg.alpha.ok_or_else(|| Error::param("alpha is required"))?;
    let schedule = FbmSchedule::new(alpha, cfg.t0.unwrap_or(1.0), mode)?;
    let gamma = gamma_matrix(&KernelSpec::FbmIncrement { alpha }, &cfg.grid)?;
    Ok(FbmSetup { grid, anchor, schedule, gamma })
}

fn sub_cov(cov: &CovMatrix, idx: &[usize]) -> Result<CovMatrix> {
    let sites = idx.iter().map(|&i| cov.sites()[i].clone()).collect();
    let values = idx.iter().flat_map(|&i| idx.iter().map(move |&j| cov.get(i, j))).collect();
    CovMatrix::new(sites, values)
}

fn fbm_max(ctx: &mut Ctx) -> Result<()> {
    let fs = fbm_setup(ctx.cfg, ScheduleMode::Max)?;
    let reps = ctx.cfg.reps;
    let prefix = format!("alpha={};t0={}", fs.schedule.alpha, fs.schedule.t0);
    ctx.note("schedule", &fs.schedule)?;
    match ctx.cfg.check {
        FbmCheck::Fidi => {
            let drift: Vec<f64> = fs
                .grid
                .iter()
                .map(|&t| fs.schedule.kappa(fs.grid[fs.anchor], t).ok_or_else(|| Error::param("drift diverges for alpha > 1")))
                .collect::<Result<_>>()?;
            let refs = references(ctx, &fs.gamma, Some(&drift), Process::Max)?;
            distance_rows(ctx, &prefix, &refs, Process::Max, false, |_, n, key| {
                let nf = n as f64;
                let cov = fbm_prelimit_cov(&fs.schedule, nf, &fs.grid)?;
                let f = cholesky_factor(&cov, JitterPolicy::default())?;
                let norm = normalizer_max(&cov, nf, fs.anchor)?;
                Ok(rescale(&sample_mn(&f, n, reps, &mut key.stream())?, norm.a_n, norm.b_n))
            })
        }
        FbmCheck::Drift => {
            let ns = ctx.cfg.n.clone();
            let tol = ctx.cfg.tolerances.location;
            for (i, &n) in ns.iter().enumerate() {
                let nf = n as f64;
                let cov = fbm_prelimit_cov(&fs.schedule, nf, &fs.grid)?;
                let norm = normalizer_max(&cov, nf, fs.anchor)?;
                for j in (0..fs.grid.len()).filter(|&j| j != fs.anchor) {
                    let kappa = fs
                        .schedule
                        .kappa(fs.grid[fs.anchor], fs.grid[j])
                        .ok_or_else(|| Error::param("drift diverges for alpha > 1"))?;
                    // Only the marginal law enters, so each site is sampled alone.
                    let f = cholesky_factor(&sub_cov(&cov, &[j])?, JitterPolicy::default())?;
                    let key = ctx.key();
                    let b = rescale(&sample_mn(&f, n, reps, &mut key.stream())?, norm.a_n, norm.b_n);
                    let (mean, se) = mc_stderr(&b.values)?;
                    let mut r = row("location", format!("{prefix};n={n};site={}", fs.grid[j]), mean - EULER_GAMMA, se);
                    r.reference = Some(kappa);
                    r.stream = Some(key.to_string());
                    if i + 1 == ns.len() {
                        if let Some(t) = tol {
                            r.tolerance = Some(t);
                            r.pass = Some((mean - EULER_GAMMA - kappa).abs() <= t);
                        }
                    }
                    ctx.push(r);
                }
            }
            Ok(())
        }
        FbmCheck::Degeneracy => {
            let ns = ctx.cfg.n.clone();
            let tol = ctx.cfg.tolerances.correlation;
            let pair = [0, 1];
            for (i, &n) in ns.iter().enumerate() {
                let nf = n as f64;
                let cov = fbm_prelimit_cov(&fs.schedule, nf, &fs.grid)?;
                let norm = normalizer_max(&cov, nf, fs.anchor)?;
                let f = cholesky_factor(&sub_cov(&cov, &pair)?, JitterPolicy::default())?;
                let key = ctx.key();
                let b = rescale(&sample_mn(&f, n, reps, &mut key.stream())?, norm.a_n, norm.b_n);
                let rho = correlation(&b.column(0), &b.column(1));
                let se = (1.0 - rho * rho) / (reps as f64).sqrt();
                let mut r =
                    row("correlation", format!("{prefix};n={n};sites={} {}", fs.grid[0], fs.grid[1]), rho, se);
                r.stream = Some(key.to_string());
                if i + 1 == ns.len() {
                    if let Some(t) = tol {
                        r.tolerance = Some(t);
                        r.pass = Some(rho > t);
                    }
                }
                ctx.push(r);
            }
            Ok(())
        }
    }
}

fn fbm_min(ctx: &mut Ctx) -> Result<()> {
    let mode = ctx.cfg.schedule.unwrap_or(ScheduleMode::Min);
    let fs = fbm_setup(ctx.cfg, mode)?;
    let reps = ctx.cfg.reps;
    let mode_name = if mode == ScheduleMode::MinQuadratic { "min_quadratic" } else { "min" };
    let prefix = format!("alpha={};t0={};schedule={mode_name}", fs.schedule.alpha, fs.schedule.t0);
    ctx.note("schedule", &fs.schedule)?;
    let refs = references(ctx, &fs.gamma, None, Process::Min)?;
    distance_rows(ctx, &prefix, &refs, Process::Min, false, |_, n, key| {
        let nf = n as f64;
        let cov = fbm_prelimit_cov(&fs.schedule, nf, &fs.grid)?;
        let f = cholesky_factor(&cov, JitterPolicy::default())?;
        let norm = normalizer_min(&cov, nf, fs.anchor)?;
        Ok(rescale(&sample_ln(&f, n, reps, &mut key.stream())?, norm.a_n, 0.0))
    })
}

fn sigma_invariance(ctx: &mut Ctx) -> Result<()> {
    let (_, g) = gammas(ctx.cfg)?.remove(0);
    let (reps, level) = (ctx.cfg.reps, ctx.level());
    let anchors = ctx.cfg.anchors.clone();
    let key = ctx.key();
    let att = with_rerun(|a| {
        let rep = verify_sigma_invariance(&g, &anchors, reps, &mut key.child(a as u64).stream())?;
        let pass = rep.rows.iter().all(|r| r.ks.passes(level));
        Ok((rep, pass))
    })?;
    let stream = key.child(att.attempts as u64 - 1).to_string();
    for ir in &att.outcome.rows {
        let crit = ir.ks.critical(level);
        let params =
            format!("functional={};anchors={} {};attempts={}", ir.functional, ir.anchors.0, ir.anchors.1, att.attempts);
        let mut r = row("ks2", params, ir.ks.statistic, crit);
        r.tolerance = Some(crit);
        r.pass = Some(ir.ks.passes(level));
        r.stream = Some(stream.clone());
        ctx.push(r);
    }
    Ok(())
}

fn max_stability(ctx: &mut Ctx) -> Result<()> {
    let (_, g) = gammas(ctx.cfg)?.remove(0);
    let (reps, level) = (ctx.cfg.reps, ctx.level());
    let copies = ctx.cfg.copies.unwrap_or(4);
    let k = g.len();
    let key = ctx.key();
    let att = with_rerun(|a| {
        let mut s = key.child(a as u64).stream();
        let sampler = MaxStableSampler::new(&g, None, MaxStableOptions::default(), &mut s.child(0))?;
        let (pooled, _) = sampler.sample(copies * reps, &mut s)?;
        let (fresh, _) = sampler.sample(reps, &mut s)?;
        let shift = (copies as f64).ln();
        let mut folded = Vec::with_capacity(reps * k);
        for r in 0..reps {
            for j in 0..k {
                let m = (0..copies).map(|c| pooled.row(r * copies + c)[j]).fold(f64::NEG_INFINITY, f64::max);
                folded.push(m - shift);
            }
        }
        let folded = PathBatch::new(g.sites().to_vec(), folded, None);
        let ks = (0..k).map(|j| ks_two_sample(&folded.column(j), &fresh.column(j))).collect::<Result<Vec<_>>>()?;
        let pass = ks.iter().all(|r| r.passes(level));
        Ok((ks, pass))
    })?;
    let stream = key.child(att.attempts as u64 - 1).to_string();
    for (j, ks) in att.outcome.iter().enumerate() {
        let crit = ks.critical(level);
        let params = format!("site={};copies={copies};attempts={}", g.sites()[j], att.attempts);
        let mut r = row("ks2", params, ks.statistic, crit);
        r.tolerance = Some(crit);
        r.pass = Some(ks.passes(level));
        r.stream = Some(stream.clone());
        ctx.push(r);
    }
    Ok(())
}

fn stable_field(ctx: &mut Ctx) -> Result<()> {
    let st = ctx.cfg.stable.clone().ok_or_else(|| Error::Config(vec!["stable section is required".into()]))?;
    let (_, g) = gammas(ctx.cfg)?.remove(0);
    let k = g.len();
    let params = StableSeriesParams {
        truncation: st.truncation,
        random_signs: st.random_signs,
        ..StableSeriesParams::new(st.alpha, g, st.convention)
    };
    let index = params.index();
    let convention = serde_json::to_value(st.convention)?.as_str().unwrap_or_default().to_string();
    let sampler = StableSampler::new(params)?;
    let key = ctx.key();
    let (batch, diag) = sampler.sample(ctx.cfg.reps, &mut key.stream())?;
    ctx.note("series", &diag)?;
    let col = batch.column(k - 1);
    let site = batch.sites[k - 1].clone();

    let mut thetas = st.thetas.clone();
    if thetas.is_empty() {
        thetas.push(st.alpha);
        if st.alpha != 1.0 {
            thetas.push(1.0 / st.alpha);
        }
    }
    let mut passing = Vec::new();
    let mut reports = Vec::new();
    for &theta in &thetas {
        let bkey = ctx.key();
        let rep = stability_check(&col, theta, st.bootstrap, &mut bkey.stream())?;
        let ratio = rep.gaps.iter().map(|q| q.gap.abs() / q.stderr).fold(0.0, f64::max);
        let mut r = row(
            "stability",
            format!("theta={theta};convention={convention};site={site};passes={}", rep.pass),
            rep.max_abs_gap,
            ratio,
        );
        r.tolerance = Some(4.0);
        r.stream = Some(bkey.to_string());
        ctx.push(r);
        if rep.pass {
            passing.push(theta);
        }
        reports.push(rep);
    }
    ctx.note("stability", &reports)?;
    if let Ok(ti) = tail_index(&col, 0.99, 0.999) {
        let mut r = row("tail_index", format!("convention={convention};site={site};levels=0.99 0.999"), ti, 0.0);
        r.reference = Some(index);
        r.stream = Some(key.to_string());
        ctx.push(r);
    }
    let list = if passing.is_empty() {
        "none".to_string()
    } else {
        passing.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
    };
    let mut adj = row(
        "adjudication",
        format!("convention={convention};terms={};passing={list}", diag.terms),
        passing.len() as f64,
        index,
    );
    adj.reference = Some(1.0);
    adj.pass = Some(passing.len() == 1);
    ctx.push(adj);
    Ok(())
}

fn kernel_check(ctx: &mut Ctx) -> Result<()> {
    for case in ctx.cfg.kernels.clone() {
        let (label, g) = match (&case.kernel, case.power_exponent) {
            (Some(k), None) => {
                let detail = match k {
                    KernelSpec::FbmIncrement { alpha } => format!(";alpha={alpha}"),
                    KernelSpec::SphereGeodesic { beta } => format!(";beta={beta}"),
                    _ => String::new(),
                };
                (format!("kernel={}{detail}", k.name()), gamma_matrix(k, &case.grid)?)
            }
            (None, Some(p)) => {
                let ts: Vec<f64> = case.grid.iter().filter_map(Site::as_real).collect();
                let m = ts.len();
                let values = (0..m * m).map(|q| (ts[q / m] - ts[q % m]).abs().powf(p)).collect();
                (format!("power={p}"), GammaMatrix::from_values(case.grid.clone(), values)?)
            }
            _ => return Err(Error::Config(vec!["kernel case needs exactly one of kernel, power_exponent".into()])),
        };
        let rep = validate_negative_definite(&g, g.default_nd_tolerance())?;
        let expect = if case.expect_pass { "pass" } else { "fail" };
        let mut r = row(
            "max_eigenvalue",
            format!("{label};sites={};expect={expect};nd={}", g.len(), rep.pass),
            rep.worst,
            rep.tolerance,
        );
        r.tolerance = Some(rep.tolerance);
        r.pass = Some(rep.pass == case.expect_pass);
        ctx.push(r);
    }
    Ok(())
}
