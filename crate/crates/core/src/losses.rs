//! Empirical loss on grids and total loss under product measures.
//!
//! Rectangle-union pairs get an exact overlay on the merged breakpoints;
//! everything else goes through a Monte Carlo estimator with a fixed
//! per-draw seed schedule, so the estimate is independent of how the draws
//! are sharded across threads.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::hypotheses::{Grid, Hypothesis};
use crate::measures::Measure1D;
use crate::sets::{HalfOpenRect, RectUnionIndex, TargetSet};

/// Two-sided 99% normal quantile used for Monte Carlo confidence intervals.
pub const Z_99: f64 = 2.5758293035489004;

/// Anything with a membership test; `as_rects` advertises rectangle
/// structure so losses can take the exact path. `Sync` is required so
/// Monte Carlo estimation can shard draws across threads.
pub trait Region: Sync {
    fn contains_point(&self, p: Point) -> bool;

    fn as_rects(&self) -> Option<&[HalfOpenRect]> {
        None
    }
}

impl Region for TargetSet {
    fn contains_point(&self, p: Point) -> bool {
        self.contains(p)
    }

    fn as_rects(&self) -> Option<&[HalfOpenRect]> {
        match self {
            TargetSet::RectUnion(u) => Some(u.rects()),
            _ => None,
        }
    }
}

impl Region for Hypothesis {
    fn contains_point(&self, p: Point) -> bool {
        self.contains(p)
    }

    fn as_rects(&self) -> Option<&[HalfOpenRect]> {
        match self {
            Hypothesis::RectUnionHyp(u) => Some(u.rects()),
            Hypothesis::Empty => Some(&[]),
            Hypothesis::ConvexHull(_) => None,
        }
    }
}

impl Region for crate::sets::HalfOpenRectUnion {
    fn contains_point(&self, p: Point) -> bool {
        self.contains(p)
    }

    fn as_rects(&self) -> Option<&[HalfOpenRect]> {
        Some(self.rects())
    }
}

impl<T: Region + ?Sized> Region for &T {
    fn contains_point(&self, p: Point) -> bool {
        (**self).contains_point(p)
    }

    fn as_rects(&self) -> Option<&[HalfOpenRect]> {
        (**self).as_rects()
    }
}

/// Exact rational empirical loss: mismatching grid pairs over m^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmpiricalLoss {
    pub mismatches: usize,
    pub pairs: usize,
}

impl EmpiricalLoss {
    pub fn value(&self) -> f64 {
        self.mismatches as f64 / self.pairs as f64
    }
}

enum Membership<'a, R: Region + ?Sized> {
    Indexed(RectUnionIndex),
    Direct(&'a R),
}

impl<'a, R: Region + ?Sized> Membership<'a, R> {
    fn new(r: &'a R) -> Self {
        match r.as_rects() {
            Some(rects) => Membership::Indexed(RectUnionIndex::build(rects)),
            None => Membership::Direct(r),
        }
    }

    fn contains(&self, p: Point) -> bool {
        match self {
            Membership::Indexed(idx) => idx.contains(p),
            Membership::Direct(r) => r.contains_point(p),
        }
    }
}

/// |{(i,j) : (a_i, b_j) in H0 symdiff H1}| / m^2, exact.
pub fn empirical_loss<R0, R1>(h0: &R0, h1: &R1, g: &Grid) -> EmpiricalLoss
where
    R0: Region + ?Sized,
    R1: Region + ?Sized,
{
    let m = g.m();
    let m0 = Membership::new(h0);
    let m1 = Membership::new(h1);
    let mut mismatches = 0;
    for i in 0..m {
        for j in 0..m {
            let p = g.point(i, j);
            if m0.contains(p) != m1.contains(p) {
                mismatches += 1;
            }
        }
    }
    EmpiricalLoss { mismatches, pairs: m * m }
}

/// Product mass of the symmetric difference of two rectangle unions, by
/// summing exact slab masses over the merged breakpoint grid. Exact up to
/// binary64 summation.
pub fn total_loss_exact(
    r0: &[HalfOpenRect],
    r1: &[HalfOpenRect],
    mu0: &Measure1D,
    mu1: &Measure1D,
) -> f64 {
    let mut xs: Vec<f64> = r0
        .iter()
        .chain(r1.iter())
        .flat_map(|r| [r.x_lo + 0.0, r.x_hi + 0.0])
        .collect();
    let mut ys: Vec<f64> = r0
        .iter()
        .chain(r1.iter())
        .flat_map(|r| [r.y_lo + 0.0, r.y_hi + 0.0])
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    if xs.len() < 2 || ys.len() < 2 {
        return 0.0;
    }
    let idx0 = RectUnionIndex::build(r0);
    let idx1 = RectUnionIndex::build(r1);
    let x_masses: Vec<f64> = xs
        .windows(2)
        .map(|w| mu0.interval_mass(w[0], w[1], true, false).expect("sorted breakpoints"))
        .collect();
    let y_masses: Vec<f64> = ys
        .windows(2)
        .map(|w| mu1.interval_mass(w[0], w[1], true, false).expect("sorted breakpoints"))
        .collect();
    let mut total = 0.0;
    for i in 0..xs.len() - 1 {
        if x_masses[i] == 0.0 {
            continue;
        }
        for j in 0..ys.len() - 1 {
            // Membership is constant on each merged cell; probe the corner.
            let corner = Point::new(xs[i], ys[j]);
            if idx0.contains(corner) != idx1.contains(corner) {
                total += x_masses[i] * y_masses[j];
            }
        }
    }
    total
}

/// Derives a per-draw (or per-trial) seed from a base seed and a stream tag.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(stream)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte Carlo estimate of the product mass of H0 symdiff H1 with a 99%
/// normal-approximation half-width. Each draw k uses its own generator
/// seeded by `derive_seed(seed, k)`, so results do not depend on sharding.
pub fn total_loss_mc<R0, R1>(
    h0: &R0,
    h1: &R1,
    mu0: &Measure1D,
    mu1: &Measure1D,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    R0: Region + ?Sized,
    R1: Region + ?Sized,
{
    if n < 100 {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least 100 samples, got {n}"
        )));
    }
    let m0 = Membership::new(h0);
    let m1 = Membership::new(h1);
    let hits: u64 = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k));
            let x = mu0.sample_one(&mut rng);
            let y = mu1.sample_one(&mut rng);
            let p = Point::new(x, y);
            (m0.contains(p) != m1.contains(p)) as u64
        })
        .sum();
    let p_hat = hits as f64 / n as f64;
    let ci = Z_99 * (p_hat * (1.0 - p_hat) / n as f64).sqrt();
    Ok((p_hat, ci))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMethod {
    Exact,
    MonteCarlo { n_samples: usize, seed: u64 },
}

impl LossMethod {
    pub fn label(&self) -> &'static str {
        match self {
            LossMethod::Exact => "exact",
            LossMethod::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

/// Empirical loss plus a total-loss estimate for one pair of regions.
#[derive(Debug, Clone, Serialize)]
pub struct LossReport {
    pub empirical: EmpiricalLoss,
    pub total_estimate: f64,
    pub total_ci_halfwidth: f64,
    pub method: LossMethod,
}

impl LossReport {
    pub fn deviation(&self) -> f64 {
        (self.empirical.value() - self.total_estimate).abs()
    }
}

/// Computes the loss report for one pair: exact overlay when both regions
/// have rectangle structure, Monte Carlo otherwise.
pub fn loss_report<R0, R1>(
    h0: &R0,
    h1: &R1,
    g: &Grid,
    mu0: &Measure1D,
    mu1: &Measure1D,
    mc_samples: usize,
    seed: u64,
) -> Result<LossReport>
where
    R0: Region + ?Sized,
    R1: Region + ?Sized,
{
    let empirical = empirical_loss(h0, h1, g);
    match (h0.as_rects(), h1.as_rects()) {
        (Some(r0), Some(r1)) => Ok(LossReport {
            empirical,
            total_estimate: total_loss_exact(r0, r1, mu0, mu1),
            total_ci_halfwidth: 0.0,
            method: LossMethod::Exact,
        }),
        _ => {
            let (estimate, ci) = total_loss_mc(h0, h1, mu0, mu1, mc_samples, seed)?;
            Ok(LossReport {
                empirical,
                total_estimate: estimate,
                total_ci_halfwidth: ci,
                method: LossMethod::MonteCarlo { n_samples: mc_samples, seed },
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairCheck {
    pub report: LossReport,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct RepresentativeReport {
    pub pair_checks: Vec<PairCheck>,
    /// Conjunction over pairs: `Yes` only if every pair is `Yes`, `No` if any
    /// pair definitely exceeds eps, `Inconclusive` otherwise.
    pub overall: Verdict,
}

/// Checks |empirical - total| <= eps for every pair. With an exact total the
/// verdict is two-valued; with Monte Carlo the confidence half-width is
/// folded into the margin and a deviation inside eps + ci but above eps is
/// reported as inconclusive rather than a failure.
pub fn representative(
    g: &Grid,
    pairs: &[(&dyn Region, &dyn Region)],
    eps: f64,
    mu0: &Measure1D,
    mu1: &Measure1D,
    mc_samples: usize,
    seed: u64,
) -> Result<RepresentativeReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let mut pair_checks = Vec::with_capacity(pairs.len());
    for (k, (h0, h1)) in pairs.iter().enumerate() {
        let report =
            loss_report(*h0, *h1, g, mu0, mu1, mc_samples, derive_seed(seed, k as u64))?;
        let diff = report.deviation();
        let verdict = if diff <= eps {
            Verdict::Yes
        } else if diff <= eps + report.total_ci_halfwidth {
            Verdict::Inconclusive
        } else {
            Verdict::No
        };
        pair_checks.push(PairCheck { report, verdict });
    }
    let overall = if pair_checks.iter().any(|c| c.verdict == Verdict::No) {
        Verdict::No
    } else if pair_checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Yes
    };
    Ok(RepresentativeReport { pair_checks, overall })
}

/// One CSV row per checked pair.
#[derive(Debug, Clone, Serialize)]
pub struct LossCsvRow {
    pub pair_id: usize,
    pub empirical: f64,
    pub total: f64,
    pub ci: f64,
    pub method: &'static str,
    pub verdict: &'static str,
}

pub fn write_loss_csv(path: &Path, rows: &[LossCsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("csv error on {}: {other:?}", path.display())),
    }
}
