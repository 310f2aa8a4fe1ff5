//! Randomized experiment harness: weak approximation of a fixed target,
//! fixed-grid approximation across an adversary list, and pool-relative
//! uniform-convergence trials. Emits `results.csv`, `summary.json`, and
//! optional SVG renders, all reproducible from the config seed.

use std::fs;
use std::fs::File;
use std::io::Write as IoWrite;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::hypotheses::{
    auxiliary_union, convex_hull_hypothesis, label_grid, realizability_check, Grid, Hypothesis,
    Labeling,
};
use crate::losses::{
    derive_seed, empirical_loss, loss_report, total_loss_exact, total_loss_mc, Region, Z_99,
};
use crate::measures::{sample, Measure1D, MeasureSpec};
use crate::sets::{HalfOpenRect, RectUnionIndex, TargetSet, TargetSpec};
use crate::vcdim::{m_uc, UCBoundParams};

const MAX_GRID_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    WeakApprox,
    FixedGrid,
    Uc,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::WeakApprox => "weak_approx",
            ExperimentKind::FixedGrid => "fixed_grid",
            ExperimentKind::Uc => "uc",
        }
    }
}

/// The hypothesis class driving the constructors: convex hulls, auxiliary
/// rectangle unions with a declared alternation bound, or the finite-grid
/// mode (discrete measures, rectangle unions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Convex,
    BoundedAlternation(usize),
    FiniteGrid,
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Convex => "convex".into(),
            Family::BoundedAlternation(d) => format!("bounded_alternation({d})"),
            Family::FiniteGrid => "finite_grid".into(),
        }
    }

    /// Alternation bound used when generating rectangle-union pool members.
    fn alternation_bound(&self) -> usize {
        match self {
            Family::BoundedAlternation(d) => *d,
            Family::Convex | Family::FiniteGrid => 2,
        }
    }

    /// Slicewise VC bound fed to the sample-size calculator: 2 for convex
    /// sets (slices are intervals), D + 1 for D-alternation sets.
    fn svc_bound(&self) -> u64 {
        match self {
            Family::Convex | Family::FiniteGrid => 2,
            Family::BoundedAlternation(d) => *d as u64 + 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_kind")]
    pub experiment: ExperimentKind,
    pub family: Family,
    pub target: TargetSpec,
    pub mu0: MeasureSpec,
    pub mu1: MeasureSpec,
    pub m: usize,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    pub seed: u64,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default)]
    pub adversary: Vec<TargetSpec>,
    #[serde(default)]
    pub render_first: usize,
}

fn default_kind() -> ExperimentKind {
    ExperimentKind::WeakApprox
}

fn default_trials() -> usize {
    1
}

fn default_mc_samples() -> usize {
    100_000
}

fn default_pool_size() -> usize {
    20
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be >= 1".into()));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.mc_samples < 100 {
            return Err(Error::InvalidConfig("mc_samples must be >= 100".into()));
        }
        if self.experiment == ExperimentKind::FixedGrid && self.adversary.len() < 2 {
            return Err(Error::InvalidConfig(
                "fixed_grid needs an adversary list with at least two targets".into(),
            ));
        }
        if self.experiment == ExperimentKind::Uc && self.pool_size < 2 {
            return Err(Error::InvalidConfig("uc needs pool_size >= 2".into()));
        }
        Ok(())
    }
}

/// One row of `results.csv`. `max_pair_deviation` is the largest observed
/// |empirical - total| among the pairs the trial checked.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub grid_seed: u64,
    pub empirical_defect_on_grid: u64,
    pub total_loss_vs_target: f64,
    pub total_ci_halfwidth: f64,
    pub max_pair_deviation: f64,
    pub representative: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub family: String,
    pub m: usize,
    pub trials: usize,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub mc_samples: usize,
    /// What the reported fraction quantifies over; pool-relative results are
    /// necessary-condition checks, not claims about the whole class.
    pub scope: String,
    pub fraction_pass: f64,
    pub mean_total_loss: f64,
    pub max_empirical_defect: u64,
    pub degenerate_retries: usize,
    /// Worst-case sufficient sample size for (eps, delta) and the family's
    /// slicewise VC bound, printed next to the desk-scale m actually used.
    pub m_uc_reference: u64,
    pub details: serde_json::Value,
}

struct Ctx {
    cfg: ExperimentConfig,
    target: TargetSet,
    mu0: Measure1D,
    mu1: Measure1D,
}

impl Ctx {
    fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Ctx {
            cfg: cfg.clone(),
            target: cfg.target.build()?,
            mu0: Measure1D::from_spec(&cfg.mu0)?,
            mu1: Measure1D::from_spec(&cfg.mu1)?,
        })
    }

    fn constructor(&self, lab: &Labeling) -> Result<Hypothesis> {
        match self.cfg.family {
            Family::Convex => Ok(convex_hull_hypothesis(lab)),
            Family::BoundedAlternation(_) | Family::FiniteGrid => auxiliary_union(lab),
        }
    }
}

/// Samples a grid and runs `build` on it, re-sampling on degenerate-grid
/// errors up to a fixed retry budget. The retry count feeds the summary.
fn with_grid_retries<T>(
    mu0: &Measure1D,
    mu1: &Measure1D,
    m: usize,
    trial_seed: u64,
    mut build: impl FnMut(&Grid, usize) -> Result<T>,
) -> Result<(T, usize)> {
    let mut retries = 0;
    loop {
        let a = sample(mu0, m, derive_seed(trial_seed, 4 * retries as u64))?;
        let b = sample(mu1, m, derive_seed(trial_seed, 4 * retries as u64 + 1))?;
        let grid = Grid::new(a.values, b.values)?;
        match build(&grid, retries) {
            Ok(v) => return Ok((v, retries)),
            Err(Error::DegenerateGrid(msg)) => {
                if retries >= MAX_GRID_RETRIES {
                    return Err(Error::DegenerateGrid(format!(
                        "{msg} (after {MAX_GRID_RETRIES} re-samples)"
                    )));
                }
                retries += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// A labeling whose 1-region is a union of index rectangles with pairwise
/// disjoint column ranges: at most floor(d/2) rectangles, so every vertical
/// line sees at most d alternations and every horizontal line at most 2.
/// Alternations are counted with the implicit zeros beyond the grid, so any
/// 1-label already forces two along its lines; d < 2 therefore admits only
/// the all-zero labeling.
pub fn random_bounded_alternation_labeling(grid: &Grid, d: usize, seed: u64) -> Result<Labeling> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ca: Vec<f64> = grid.a().to_vec();
    ca.sort_by(f64::total_cmp);
    ca.dedup();
    let mut cb: Vec<f64> = grid.b().to_vec();
    cb.sort_by(f64::total_cmp);
    cb.dedup();
    let (r, s) = (ca.len(), cb.len());

    // Membership decided on dedup indices, then broadcast onto the grid.
    let one: Box<dyn Fn(usize, usize) -> bool> = if d < 2 {
        Box::new(|_, _| false)
    } else {
        let k = d / 2;
        let mut cuts: Vec<usize> = (0..2 * k).map(|_| rng.gen_range(0..=s)).collect();
        cuts.sort_unstable();
        let mut rects: Vec<(usize, usize, usize, usize)> = Vec::new();
        for t in 0..k {
            let (j0, j1) = (cuts[2 * t], cuts[2 * t + 1]);
            if j0 == j1 {
                continue;
            }
            let i0 = rng.gen_range(0..r);
            let i1 = rng.gen_range(i0..r);
            rects.push((i0, i1, j0, j1));
        }
        Box::new(move |ia, jb| {
            rects
                .iter()
                .any(|&(i0, i1, j0, j1)| i0 <= ia && ia <= i1 && j0 <= jb && jb < j1)
        })
    };

    let m = grid.m();
    let mut labels = vec![false; m * m];
    for i in 0..m {
        let ia = ca.binary_search_by(|v| v.total_cmp(&grid.a()[i])).expect("present");
        for j in 0..m {
            let jb = cb.binary_search_by(|v| v.total_cmp(&grid.b()[j])).expect("present");
            labels[i * m + j] = one(ia, jb);
        }
    }
    Labeling::new(grid.clone(), labels)
}

struct TrialOutput {
    /// At least one record; fixed-grid trials emit one per adversary target.
    records: Vec<TrialRecord>,
    retries: usize,
    render: Option<(Grid, Hypothesis)>,
    triples: Vec<serde_json::Value>,
    passed: bool,
}

fn weak_trial(ctx: &Ctx, t: u64) -> Result<TrialOutput> {
    let ts = ctx.cfg.seed ^ t;
    let ((grid, hyp, defect), retries) =
        with_grid_retries(&ctx.mu0, &ctx.mu1, ctx.cfg.m, ts, |grid, _| {
            let lab = label_grid(&ctx.target, grid);
            let hyp = ctx.constructor(&lab)?;
            let defect = realizability_check(&ctx.target, grid, &hyp) as u64;
            Ok((grid.clone(), hyp, defect))
        })?;
    let report = loss_report(
        &hyp,
        &ctx.target,
        &grid,
        &ctx.mu0,
        &ctx.mu1,
        ctx.cfg.mc_samples,
        derive_seed(ts, 2),
    )?;
    let passed = report.total_estimate <= ctx.cfg.eps / 2.0;
    let record = TrialRecord {
        trial_id: t,
        grid_seed: ts,
        empirical_defect_on_grid: defect,
        total_loss_vs_target: report.total_estimate,
        total_ci_halfwidth: report.total_ci_halfwidth,
        max_pair_deviation: report.deviation(),
        representative: "na".into(),
        hypothesis: hyp.summary(),
    };
    let render = (t < ctx.cfg.render_first as u64).then(|| (grid, hyp));
    Ok(TrialOutput { records: vec![record], retries, render, triples: Vec::new(), passed })
}

fn fixed_trial(ctx: &Ctx, t: u64) -> Result<TrialOutput> {
    let ts = ctx.cfg.seed ^ t;
    let targets: Vec<TargetSet> =
        ctx.cfg.adversary.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;

    // One shared grid for all targets, plus a fresh target-specific grid per
    // adversary entry for the weak-approximation side of the triangle.
    let (bundle, retries) = with_grid_retries(&ctx.mu0, &ctx.mu1, ctx.cfg.m, ts, |grid, _| {
        let mut per_target = Vec::with_capacity(targets.len());
        for (k, c) in targets.iter().enumerate() {
            let lab = label_grid(c, grid);
            let h1 = ctx.constructor(&lab)?;
            let (h0, _) = with_grid_retries(
                &ctx.mu0,
                &ctx.mu1,
                ctx.cfg.m,
                derive_seed(ts, 0x100 + k as u64),
                |own_grid, _| {
                    let own_lab = label_grid(c, own_grid);
                    ctx.constructor(&own_lab)
                },
            )?;
            per_target.push((k, c, h1, h0));
        }
        Ok((grid.clone(), per_target))
    })?;
    let (grid, per_target) = bundle;

    let mut records = Vec::with_capacity(per_target.len());
    let mut triples = Vec::with_capacity(per_target.len());
    let mut all_within = true;
    let mut render = None;
    for (k, c, h1, h0) in &per_target {
        let (l_c_h1, l_c_h0, l_h0_h1, ci) =
            triple_losses(ctx, c, h0, h1, derive_seed(ts, 0x2000 + *k as u64))?;
        let defect = realizability_check(c, &grid, h1) as u64;
        let emp = empirical_loss(*c, h1, &grid).value();
        let within = l_c_h1 <= ctx.cfg.eps;
        all_within &= within;
        triples.push(json!({
            "trial": t,
            "target": k,
            "loss_c_h1": l_c_h1,
            "loss_c_h0": l_c_h0,
            "loss_h0_h1": l_h0_h1,
            "ci": ci,
            "triangle_slack": l_c_h1 - (l_c_h0 + l_h0_h1),
        }));
        records.push(TrialRecord {
            trial_id: t,
            grid_seed: ts,
            empirical_defect_on_grid: defect,
            total_loss_vs_target: l_c_h1,
            total_ci_halfwidth: ci,
            max_pair_deviation: (emp - l_c_h1).abs(),
            representative: if within { "yes".into() } else { "no".into() },
            hypothesis: format!("target{k} {}", h1.summary()),
        });
        if render.is_none() && t < ctx.cfg.render_first as u64 {
            render = Some((grid.clone(), h1.clone()));
        }
    }
    Ok(TrialOutput { records, retries, render, triples, passed: all_within })
}

/// The three pairwise total losses (C, H1), (C, H0), (H0, H1), plus the CI
/// half-width of the first. All-exact when every operand has rectangle
/// structure; otherwise one shared set of Monte Carlo draws evaluates all
/// three indicators, so the triangle inequality holds exactly on the counts.
fn triple_losses(
    ctx: &Ctx,
    c: &TargetSet,
    h0: &Hypothesis,
    h1: &Hypothesis,
    seed: u64,
) -> Result<(f64, f64, f64, f64)> {
    if let (Some(rc), Some(r0), Some(r1)) = (c.as_rects(), h0.as_rects(), h1.as_rects()) {
        let l_c_h1 = total_loss_exact(rc, r1, &ctx.mu0, &ctx.mu1);
        let l_c_h0 = total_loss_exact(rc, r0, &ctx.mu0, &ctx.mu1);
        let l_h0_h1 = total_loss_exact(r0, r1, &ctx.mu0, &ctx.mu1);
        return Ok((l_c_h1, l_c_h0, l_h0_h1, 0.0));
    }
    let n = ctx.cfg.mc_samples;
    let (n_c_h1, n_c_h0, n_h0_h1) = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k));
            let p = Point::new(ctx.mu0.sample_one(&mut rng), ctx.mu1.sample_one(&mut rng));
            let ic = c.contains(p);
            let i0 = h0.contains(p);
            let i1 = h1.contains(p);
            ((ic != i1) as u64, (ic != i0) as u64, (i0 != i1) as u64)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    let nf = n as f64;
    let est = |hits: u64| hits as f64 / nf;
    let ci = |p: f64| Z_99 * (p * (1.0 - p) / nf).sqrt();
    let (e1, e2, e3) = (est(n_c_h1), est(n_c_h0), est(n_h0_h1));
    Ok((e1, e2, e3, ci(e1)))
}

enum PoolRegion {
    Hyp(Hypothesis),
    Target(TargetSet),
}

impl Region for PoolRegion {
    fn contains_point(&self, p: Point) -> bool {
        match self {
            PoolRegion::Hyp(h) => h.contains(p),
            PoolRegion::Target(t) => t.contains(p),
        }
    }

    fn as_rects(&self) -> Option<&[HalfOpenRect]> {
        match self {
            PoolRegion::Hyp(h) => h.as_rects(),
            PoolRegion::Target(t) => t.as_rects(),
        }
    }
}

struct PoolElem {
    region: PoolRegion,
    index: Option<RectUnionIndex>,
}

impl PoolElem {
    fn new(region: PoolRegion) -> Self {
        let index = region.as_rects().map(RectUnionIndex::build);
        PoolElem { region, index }
    }

    /// Row-major membership bitmap over the m x m grid.
    fn bitset(&self, grid: &Grid) -> Vec<u64> {
        let m = grid.m();
        let mut bits = vec![0u64; (m * m).div_ceil(64)];
        let mut set = |i: usize, j: usize| {
            let bit = i * m + j;
            bits[bit / 64] |= 1 << (bit % 64);
        };
        match &self.index {
            Some(idx) => {
                let xc: Vec<Option<usize>> = grid.a().iter().map(|&x| idx.x_slab(x)).collect();
                let yc: Vec<Option<usize>> = grid.b().iter().map(|&y| idx.y_slab(y)).collect();
                for i in 0..m {
                    let Some(xi) = xc[i] else { continue };
                    for (j, yj) in yc.iter().enumerate() {
                        if let Some(yj) = yj {
                            if idx.cell_covered(xi, *yj) {
                                set(i, j);
                            }
                        }
                    }
                }
            }
            None => {
                for i in 0..m {
                    for j in 0..m {
                        if self.region.contains_point(grid.point(i, j)) {
                            set(i, j);
                        }
                    }
                }
            }
        }
        bits
    }
}

struct UcPool {
    elems: Vec<PoolElem>,
    /// (total, ci, exact) per unordered pair, indexed like `pairs`.
    totals: Vec<(f64, f64, bool)>,
    pairs: Vec<(usize, usize)>,
    sub_grid_m: usize,
    build_retries: usize,
}

/// Pool of auxiliary-union hypotheses built from independent sub-grid
/// samples with random bounded-alternation labelings, plus the target.
/// Pairwise totals are computed once up front, exactly where possible.
fn build_uc_pool(ctx: &Ctx) -> Result<UcPool> {
    let msub = (ctx.cfg.m / 8).max(4);
    let d = ctx.cfg.family.alternation_bound();
    let mut elems = Vec::with_capacity(ctx.cfg.pool_size + 1);
    let mut build_retries = 0;
    for p in 0..ctx.cfg.pool_size {
        let (hyp, retries) = with_grid_retries(
            &ctx.mu0,
            &ctx.mu1,
            msub,
            derive_seed(ctx.cfg.seed, 0x5000 + p as u64),
            |grid, attempt| {
                let lab = random_bounded_alternation_labeling(
                    grid,
                    d,
                    derive_seed(ctx.cfg.seed, 0x6000 + (p * 32 + attempt) as u64),
                )?;
                auxiliary_union(&lab)
            },
        )?;
        build_retries += retries;
        elems.push(PoolElem::new(PoolRegion::Hyp(hyp)));
    }
    elems.push(PoolElem::new(PoolRegion::Target(ctx.target.clone())));

    let pairs: Vec<(usize, usize)> = (0..elems.len())
        .flat_map(|i| (i + 1..elems.len()).map(move |j| (i, j)))
        .collect();
    let totals = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_id, &(i, j))| {
            match (elems[i].region.as_rects(), elems[j].region.as_rects()) {
                (Some(ri), Some(rj)) => {
                    Ok((total_loss_exact(ri, rj, &ctx.mu0, &ctx.mu1), 0.0, true))
                }
                _ => {
                    let (est, ci) = total_loss_mc(
                        &elems[i].region,
                        &elems[j].region,
                        &ctx.mu0,
                        &ctx.mu1,
                        ctx.cfg.mc_samples,
                        derive_seed(ctx.cfg.seed, 0x7000 + pair_id as u64),
                    )?;
                    Ok((est, ci, false))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UcPool { elems, totals, pairs, sub_grid_m: msub, build_retries })
}

fn uc_trial(ctx: &Ctx, pool: &UcPool, t: u64) -> Result<TrialOutput> {
    let ts = ctx.cfg.seed ^ t;
    let ((grid, hyp, defect), retries) =
        with_grid_retries(&ctx.mu0, &ctx.mu1, ctx.cfg.m, ts, |grid, _| {
            let lab = label_grid(&ctx.target, grid);
            let hyp = ctx.constructor(&lab)?;
            let defect = realizability_check(&ctx.target, grid, &hyp) as u64;
            Ok((grid.clone(), hyp, defect))
        })?;

    let m = grid.m();
    let pairs_total = (m * m) as f64;
    let bitsets: Vec<Vec<u64>> = pool.elems.iter().map(|e| e.bitset(&grid)).collect();
    let mut max_dev = 0.0f64;
    let mut any_fail = false;
    let mut any_inconclusive = false;
    for (pair_id, &(i, j)) in pool.pairs.iter().enumerate() {
        let mismatches: u64 = bitsets[i]
            .iter()
            .zip(&bitsets[j])
            .map(|(x, y)| (x ^ y).count_ones() as u64)
            .sum();
        let emp = mismatches as f64 / pairs_total;
        let (total, ci, exact) = pool.totals[pair_id];
        let dev = (emp - total).abs();
        max_dev = max_dev.max(dev);
        if exact {
            any_fail |= dev > ctx.cfg.eps;
        } else if dev > ctx.cfg.eps + ci {
            any_fail = true;
        } else if dev > ctx.cfg.eps {
            any_inconclusive = true;
        }
    }
    let verdict = if any_fail {
        "no"
    } else if any_inconclusive {
        "inconclusive"
    } else {
        "yes"
    };

    let report = loss_report(
        &hyp,
        &ctx.target,
        &grid,
        &ctx.mu0,
        &ctx.mu1,
        ctx.cfg.mc_samples,
        derive_seed(ts, 3),
    )?;
    let record = TrialRecord {
        trial_id: t,
        grid_seed: ts,
        empirical_defect_on_grid: defect,
        total_loss_vs_target: report.total_estimate,
        total_ci_halfwidth: report.total_ci_halfwidth,
        max_pair_deviation: max_dev,
        representative: verdict.into(),
        hypothesis: hyp.summary(),
    };
    let render = (t < ctx.cfg.render_first as u64).then(|| (grid, hyp));
    Ok(TrialOutput {
        records: vec![record],
        retries,
        render,
        triples: Vec::new(),
        passed: verdict == "yes",
    })
}

fn run_trials<F>(ctx: &Ctx, trial: F) -> Result<Vec<TrialOutput>>
where
    F: Fn(&Ctx, u64) -> Result<TrialOutput> + Sync,
{
    (0..ctx.cfg.trials as u64)
        .into_par_iter()
        .map(|t| trial(ctx, t))
        .collect()
}

fn execute(ctx: &Ctx) -> Result<(Vec<TrialOutput>, RunSummary)> {
    match ctx.cfg.experiment {
        ExperimentKind::WeakApprox => {
            let outputs = run_trials(ctx, weak_trial)?;
            let summary = summarize(
                ctx,
                &outputs,
                "per-trial total loss of the constructed hypothesis against the fixed target; \
                 pass means loss <= eps/2",
                json!({}),
            );
            Ok((outputs, summary))
        }
        ExperimentKind::FixedGrid => {
            let outputs = run_trials(ctx, fixed_trial)?;
            let triples: Vec<serde_json::Value> =
                outputs.iter().flat_map(|o| o.triples.iter().cloned()).collect();
            let summary = summarize(
                ctx,
                &outputs,
                "one shared grid per trial, hypotheses built per adversary target from its \
                 labeling; pass means every target's loss <= eps",
                json!({ "adversary_size": ctx.cfg.adversary.len(), "triples": triples }),
            );
            Ok((outputs, summary))
        }
        ExperimentKind::Uc => {
            let pool = build_uc_pool(ctx)?;
            let outputs = run_trials(ctx, |ctx, t| uc_trial(ctx, &pool, t))?;
            let exact_pairs = pool.totals.iter().filter(|t| t.2).count();
            let inconclusive = outputs
                .iter()
                .filter(|o| o.records[0].representative == "inconclusive")
                .count();
            let mut summary = summarize(
                ctx,
                &outputs,
                "pool-relative necessary condition: representativeness (|empirical - total| <= \
                 eps) is checked over a finite hypothesis pool plus the target, not over the \
                 whole class",
                json!({
                    "pool_size": pool.elems.len(),
                    "sub_grid_m": pool.sub_grid_m,
                    "pairs": pool.pairs.len(),
                    "exact_pairs": exact_pairs,
                    "mc_pairs": pool.pairs.len() - exact_pairs,
                    "inconclusive_trials": inconclusive,
                }),
            );
            summary.degenerate_retries += pool.build_retries;
            Ok((outputs, summary))
        }
    }
}

fn summarize(
    ctx: &Ctx,
    outputs: &[TrialOutput],
    scope: &str,
    mut details: serde_json::Value,
) -> RunSummary {
    let n_trials = outputs.len().max(1) as f64;
    let fraction_pass = outputs.iter().filter(|o| o.passed).count() as f64 / n_trials;
    let records: Vec<&TrialRecord> = outputs.iter().flat_map(|o| &o.records).collect();
    let n_records = records.len().max(1) as f64;
    let mean_total_loss = records.iter().map(|r| r.total_loss_vs_target).sum::<f64>() / n_records;
    let max_defect = records.iter().map(|r| r.empirical_defect_on_grid).max().unwrap_or(0);
    let retries = outputs.iter().map(|o| o.retries).sum();
    let params = UCBoundParams::two_way(ctx.cfg.family.svc_bound(), ctx.cfg.eps, ctx.cfg.delta);
    if let serde_json::Value::Object(map) = &mut details {
        map.insert("target".into(), json!(ctx.target.describe()));
        map.insert("mu0".into(), json!(ctx.mu0.describe()));
        map.insert("mu1".into(), json!(ctx.mu1.describe()));
    }
    RunSummary {
        experiment: ctx.cfg.experiment.label().into(),
        family: ctx.cfg.family.label(),
        m: ctx.cfg.m,
        trials: ctx.cfg.trials,
        eps: ctx.cfg.eps,
        delta: ctx.cfg.delta,
        seed: ctx.cfg.seed,
        mc_samples: ctx.cfg.mc_samples,
        scope: scope.into(),
        fraction_pass,
        mean_total_loss,
        max_empirical_defect: max_defect,
        degenerate_retries: retries,
        m_uc_reference: m_uc(&params).unwrap_or(u64::MAX),
        details,
    }
}

fn collect_records(outputs: Vec<TrialOutput>) -> Vec<TrialRecord> {
    outputs.into_iter().flat_map(|o| o.records).collect()
}

pub fn run_weak_approx(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, RunSummary)> {
    let mut cfg = cfg.clone();
    cfg.experiment = ExperimentKind::WeakApprox;
    let ctx = Ctx::build(&cfg)?;
    let (outputs, summary) = execute(&ctx)?;
    Ok((collect_records(outputs), summary))
}

pub fn run_fixed_grid(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, RunSummary)> {
    let mut cfg = cfg.clone();
    cfg.experiment = ExperimentKind::FixedGrid;
    let ctx = Ctx::build(&cfg)?;
    let (outputs, summary) = execute(&ctx)?;
    Ok((collect_records(outputs), summary))
}

pub fn run_uc_trials(cfg: &ExperimentConfig) -> Result<(f64, Vec<TrialRecord>, RunSummary)> {
    let mut cfg = cfg.clone();
    cfg.experiment = ExperimentKind::Uc;
    let ctx = Ctx::build(&cfg)?;
    let (outputs, summary) = execute(&ctx)?;
    Ok((summary.fraction_pass, collect_records(outputs), summary))
}

/// Runs the configured experiment and writes `results.csv`, `summary.json`,
/// and `trial_<k>.svg` renders into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let ctx = Ctx::build(cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (outputs, summary) = execute(&ctx)?;

    let render_target = match ctx.cfg.experiment {
        ExperimentKind::FixedGrid => ctx.cfg.adversary[0].build()?,
        _ => ctx.target.clone(),
    };
    let mut renders = Vec::new();
    let mut kept = Vec::with_capacity(outputs.len());
    for mut o in outputs {
        if let Some(r) = o.render.take() {
            renders.push(r);
        }
        kept.push(o);
    }

    write_records_csv(&out_dir.join("results.csv"), &collect_records(kept))?;
    let summary_path = out_dir.join("summary.json");
    let mut file = File::create(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
    serde_json::to_writer_pretty(&mut file, &summary)
        .map_err(|e| Error::json(&summary_path, e))?;
    file.write_all(b"\n").map_err(|e| Error::io(&summary_path, e))?;

    for (k, (grid, hyp)) in renders.iter().enumerate() {
        render_svg(grid, &render_target, hyp, &out_dir.join(format!("trial_{k}.svg")))?;
    }
    Ok(summary)
}

pub fn write_records_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::losses::csv_error(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| crate::losses::csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Builds the first trial's grid and hypothesis from the config and renders
/// it to one SVG file.
pub fn render_one(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let ctx = Ctx::build(cfg)?;
    let ((grid, hyp), _) = with_grid_retries(&ctx.mu0, &ctx.mu1, cfg.m, cfg.seed, |grid, _| {
        let lab = label_grid(&ctx.target, grid);
        Ok((grid.clone(), ctx.constructor(&lab)?))
    })?;
    render_svg(&grid, &ctx.target, &hyp, path)
}

/// Writes an SVG with three layers: target outline, hypothesis outline, and
/// the grid points (1-labeled points highlighted). Drawable targets are
/// disks, polygons, and rectangle unions.
pub fn render_svg(grid: &Grid, target: &TargetSet, hyp: &Hypothesis, path: &Path) -> Result<()> {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    let mut cover = |x: f64, y: f64| {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    };
    for &x in grid.a() {
        cover(x, grid.b()[0]);
    }
    for &y in grid.b() {
        cover(grid.a()[0], y);
    }
    match target {
        TargetSet::Disk { center, radius } => {
            cover(center.x - radius, center.y - radius);
            cover(center.x + radius, center.y + radius);
        }
        TargetSet::ConvexPolygon(v) => v.iter().for_each(|p| cover(p.x, p.y)),
        TargetSet::RectUnion(u) => u.rects().iter().for_each(|r| {
            cover(r.x_lo, r.y_lo);
            cover(r.x_hi, r.y_hi);
        }),
        TargetSet::HalfPlaneIntersection(_) | TargetSet::OracleSet(_) => {
            return Err(Error::InvalidArgument(format!(
                "target {} is not drawable",
                target.describe()
            )))
        }
    }
    match hyp {
        Hypothesis::RectUnionHyp(u) => u.rects().iter().for_each(|r| {
            cover(r.x_lo, r.y_lo);
            cover(r.x_hi, r.y_hi);
        }),
        Hypothesis::ConvexHull(v) => v.iter().for_each(|p| cover(p.x, p.y)),
        Hypothesis::Empty => {}
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-9);
    let margin = span * 0.05;
    let (vx, vy) = (min_x - margin, -(max_y + margin));
    let (vw, vh) = (max_x - min_x + 2.0 * margin, max_y - min_y + 2.0 * margin);
    let sw = span * 0.005;
    let dot = span * 0.008;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{vx} {vy} {vw} {vh}\">\n\
         <g transform=\"scale(1,-1)\">\n"
    ));

    svg.push_str(&format!(
        "<g id=\"target\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"{sw}\">\n"
    ));
    match target {
        TargetSet::Disk { center, radius } => {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n",
                center.x, center.y, radius
            ));
        }
        TargetSet::ConvexPolygon(v) => {
            let pts: Vec<String> = v.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
            svg.push_str(&format!("<polygon points=\"{}\"/>\n", pts.join(" ")));
        }
        TargetSet::RectUnion(u) => {
            for r in u.rects() {
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n",
                    r.x_lo,
                    r.y_lo,
                    r.x_hi - r.x_lo,
                    r.y_hi - r.y_lo
                ));
            }
        }
        _ => unreachable!("rejected above"),
    }
    svg.push_str("</g>\n");

    svg.push_str(&format!(
        "<g id=\"hypothesis\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"{sw}\">\n"
    ));
    match hyp {
        Hypothesis::ConvexHull(v) if v.len() >= 3 => {
            let pts: Vec<String> = v.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
            svg.push_str(&format!("<polygon points=\"{}\"/>\n", pts.join(" ")));
        }
        Hypothesis::ConvexHull(v) if v.len() == 2 => {
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
                v[0].x, v[0].y, v[1].x, v[1].y
            ));
        }
        Hypothesis::ConvexHull(v) if v.len() == 1 => {
            svg.push_str(&format!("<circle cx=\"{}\" cy=\"{}\" r=\"{dot}\"/>\n", v[0].x, v[0].y));
        }
        Hypothesis::ConvexHull(_) => {}
        Hypothesis::RectUnionHyp(u) => {
            for r in u.rects() {
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n",
                    r.x_lo,
                    r.y_lo,
                    r.x_hi - r.x_lo,
                    r.y_hi - r.y_lo
                ));
            }
        }
        Hypothesis::Empty => {
            svg.push_str("<!-- empty hypothesis -->\n");
        }
    }
    svg.push_str("</g>\n");

    svg.push_str("<g id=\"grid\">\n");
    let lab = label_grid(target, grid);
    let m = grid.m();
    for i in 0..m {
        for j in 0..m {
            let p = grid.point(i, j);
            let fill = if lab.label(i, j) { "#2ca02c" } else { "#cccccc" };
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{dot}\" fill=\"{fill}\"/>\n",
                p.x, p.y
            ));
        }
    }
    svg.push_str("</g>\n</g>\n</svg>\n");

    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "family": "convex",
                "target": {"disk": {"c": [0, 0], "r": 1}},
                "mu0": {"uniform": [-1.5, 1.5]},
                "mu1": {"uniform": [-1.5, 1.5]},
                "m": 20,
                "eps": 0.4,
                "delta": 0.5,
                "trials": 4,
                "mc_samples": 2000,
                "seed": 11
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg = base_config();
        assert_eq!(cfg.experiment, ExperimentKind::WeakApprox);
        assert_eq!(cfg.pool_size, 20);
        assert_eq!(cfg.render_first, 0);
        cfg.validate().unwrap();
    }

    #[test]
    fn weak_approx_empty_target_has_zero_loss() {
        let mut cfg = base_config();
        cfg.target = serde_json::from_str(r#"{"rects":[]}"#).unwrap();
        cfg.family = Family::BoundedAlternation(2);
        let (records, summary) = run_weak_approx(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        for r in &records {
            assert_eq!(r.empirical_defect_on_grid, 0);
            assert_eq!(r.total_loss_vs_target, 0.0);
            assert_eq!(r.hypothesis, "empty");
        }
        assert_eq!(summary.fraction_pass, 1.0);
    }

    #[test]
    fn weak_approx_atom_grid_carries_all_mass() {
        let mut cfg = base_config();
        cfg.mu0 = serde_json::from_str(r#"{"atom": 0.25}"#).unwrap();
        cfg.mu1 = serde_json::from_str(r#"{"atom": -0.125}"#).unwrap();
        cfg.m = 1;
        cfg.trials = 2;
        cfg.family = Family::FiniteGrid;
        let (records, _) = run_weak_approx(&cfg).unwrap();
        for r in &records {
            assert_eq!(r.empirical_defect_on_grid, 0);
            assert_eq!(r.total_loss_vs_target, 0.0);
        }
    }

    #[test]
    fn weak_approx_disk_hull_converges() {
        let mut cfg = base_config();
        cfg.trials = 8;
        cfg.m = 40;
        let (_, summary) = run_weak_approx(&cfg).unwrap();
        assert_eq!(summary.max_empirical_defect, 0);
        assert!(summary.mean_total_loss < 0.2, "mean = {}", summary.mean_total_loss);
    }

    #[test]
    fn fixed_grid_duplicate_targets_get_identical_losses() {
        let mut cfg = base_config();
        cfg.family = Family::BoundedAlternation(2);
        cfg.trials = 2;
        cfg.adversary = vec![
            serde_json::from_str(r#"{"rects":[[0,1,0,1]]}"#).unwrap(),
            serde_json::from_str(r#"{"rects":[[0,1,0,1]]}"#).unwrap(),
        ];
        let (records, _) = run_fixed_grid(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        assert_eq!(records[0].total_loss_vs_target, records[1].total_loss_vs_target);
        assert_eq!(records[0].empirical_defect_on_grid, 0);
        assert_eq!(records[1].empirical_defect_on_grid, 0);
    }

    #[test]
    fn fixed_grid_empty_and_full_are_reproduced() {
        let mut cfg = base_config();
        cfg.family = Family::BoundedAlternation(2);
        cfg.trials = 1;
        cfg.m = 60;
        cfg.mu0 = serde_json::from_str(r#"{"uniform": [0, 3]}"#).unwrap();
        cfg.mu1 = serde_json::from_str(r#"{"uniform": [0, 3]}"#).unwrap();
        cfg.adversary = vec![
            serde_json::from_str(r#"{"rects":[]}"#).unwrap(),
            serde_json::from_str(r#"{"halfplanes":[]}"#).unwrap(),
        ];
        let (records, _) = run_fixed_grid(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].total_loss_vs_target, 0.0);
        // The full plane's auxiliary union covers the sampled bounding box
        // plus one unit of slack on each side, which swallows [0,3]^2 here.
        assert_eq!(records[1].total_loss_vs_target, 0.0);
    }

    #[test]
    fn fixed_grid_triangle_accounting_holds() {
        let mut cfg = base_config();
        cfg.trials = 2;
        cfg.m = 30;
        cfg.adversary = vec![
            serde_json::from_str(r#"{"disk": {"c": [0, 0], "r": 1}}"#).unwrap(),
            serde_json::from_str(r#"{"polygon": [[-1,-1],[1,-1],[1,1],[-1,1]]}"#).unwrap(),
        ];
        let (_, summary) = run_fixed_grid(&cfg).unwrap();
        let triples = summary.details["triples"].as_array().unwrap();
        assert_eq!(triples.len(), 4);
        for t in triples {
            let slack = t["triangle_slack"].as_f64().unwrap();
            assert!(slack <= 1e-9, "triangle violated: {slack}");
        }
    }

    #[test]
    fn uc_atom_grid_is_exactly_representative() {
        let mut cfg = base_config();
        cfg.family = Family::BoundedAlternation(2);
        cfg.pool_size = 4;
        cfg.trials = 3;
        cfg.m = 6;
        cfg.eps = 1e-9;
        cfg.target = serde_json::from_str(r#"{"rects":[[0,1,0,1]]}"#).unwrap();
        // Single atoms: every grid and sub-grid point is (0.5, 0.5), which
        // carries all the product mass, so empirical equals total exactly.
        cfg.mu0 = serde_json::from_str(r#"{"atom": 0.5}"#).unwrap();
        cfg.mu1 = serde_json::from_str(r#"{"atom": 0.5}"#).unwrap();
        let (fraction, records, summary) = run_uc_trials(&cfg).unwrap();
        assert_eq!(fraction, 1.0, "records: {records:?}");
        assert_eq!(summary.details["exact_pairs"].as_u64().unwrap(), 10);
        for r in &records {
            assert_eq!(r.max_pair_deviation, 0.0);
        }
    }

    #[test]
    fn bounded_alternation_labeling_respects_bound() {
        let g = Grid::new(
            (0..15).map(|i| i as f64).collect(),
            (0..15).map(|i| (i * 2) as f64).collect(),
        )
        .unwrap();
        for d in 1..=4 {
            for s in 0..20 {
                let lab = random_bounded_alternation_labeling(&g, d, s).unwrap();
                let alt = lab.max_line_alternations();
                assert!(alt.max() <= d, "d={d} seed={s} got {alt:?}");
            }
        }
    }

    #[test]
    fn run_writes_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config();
        cfg.trials = 2;
        cfg.render_first = 1;
        let summary = run(&cfg, dir.path()).unwrap();
        assert!(dir.path().join("results.csv").exists());
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("trial_0.svg").exists());
        assert!(!dir.path().join("trial_1.svg").exists());
        assert_eq!(summary.trials, 2);

        let svg = fs::read_to_string(dir.path().join("trial_0.svg")).unwrap();
        assert!(svg.contains("id=\"grid\""));
        assert!(svg.contains("id=\"target\""));
        assert!(svg.contains("id=\"hypothesis\""));
    }

    #[test]
    fn run_is_byte_reproducible() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let cfg = base_config();
        run(&cfg, d1.path()).unwrap();
        run(&cfg, d2.path()).unwrap();
        let c1 = fs::read(d1.path().join("results.csv")).unwrap();
        let c2 = fs::read(d2.path().join("results.csv")).unwrap();
        assert_eq!(c1, c2);
        assert!(!c1.is_empty());
    }

    #[test]
    fn svg_rect_hypothesis_has_one_rect_element() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.svg");
        let grid = Grid::new(vec![0.0], vec![0.0]).unwrap();
        let target: TargetSpec = serde_json::from_str(r#"{"rects":[[-1,1,-1,1]]}"#).unwrap();
        let target = target.build().unwrap();
        let lab = label_grid(&target, &grid);
        let hyp = auxiliary_union(&lab).unwrap();
        render_svg(&grid, &target, &hyp, &path).unwrap();
        let svg = fs::read_to_string(&path).unwrap();
        let hyp_layer = svg
            .split("id=\"hypothesis\"")
            .nth(1)
            .unwrap()
            .split("</g>")
            .next()
            .unwrap();
        assert_eq!(hyp_layer.matches("<rect").count(), 1);
    }

    #[test]
    fn svg_empty_hypothesis_renders_grid_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.svg");
        let grid = Grid::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let target: TargetSpec = serde_json::from_str(r#"{"rects":[[5,6,5,6]]}"#).unwrap();
        render_svg(&grid, &target.build().unwrap(), &Hypothesis::Empty, &path).unwrap();
        let svg = fs::read_to_string(&path).unwrap();
        assert!(svg.contains("empty hypothesis"));
        assert_eq!(svg.matches("<circle").count(), 4);
    }

    #[test]
    fn config_guards() {
        let mut cfg = base_config();
        cfg.mc_samples = 50;
        assert!(cfg.validate().is_err());
        cfg = base_config();
        cfg.eps = 0.0;
        assert!(cfg.validate().is_err());
        cfg = base_config();
        cfg.experiment = ExperimentKind::FixedGrid;
        cfg.adversary = vec![serde_json::from_str(r#"{"rects":[]}"#).unwrap()];
        assert!(cfg.validate().is_err());
        cfg = base_config();
        cfg.experiment = ExperimentKind::Uc;
        cfg.pool_size = 1;
        assert!(cfg.validate().is_err());
    }
}
