//! One-dimensional Borel probability measures: finite mixtures of point
//! atoms and uniform intervals.
//!
//! This closure is expressive enough for both the discrete and the continuous
//! experiments while keeping interval masses exactly computable, which is what
//! the exact product-measure overlay in `losses` relies on.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Kind {
    /// Pairwise distinct points with nonnegative weights summing to 1.
    Atoms(Vec<(f64, f64)>),
    /// Uniform on [lo, hi], lo < hi.
    Uniform(f64, f64),
    /// Nonnegative weights summing to 1 over component measures.
    Mixture(Vec<(f64, Measure1D)>),
}

#[derive(Debug, Clone)]
pub struct Measure1D {
    kind: Kind,
}

/// An i.i.d. sample drawn from a measure; re-sampling with the same seed
/// reproduces the identical sequence bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    pub seed: u64,
    pub source: String,
}

impl Measure1D {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
            return Err(Error::InvalidMeasure(format!(
                "uniform interval needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Measure1D { kind: Kind::Uniform(lo, hi) })
    }

    pub fn atom(x: f64) -> Result<Self> {
        Self::atoms(vec![(x, 1.0)])
    }

    pub fn atoms(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidMeasure("atom list is empty".into()));
        }
        let mut total = 0.0;
        for &(p, w) in &pairs {
            if !p.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom point {p} is not finite")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("atom weight {w} is negative")));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidMeasure(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        let mut sorted: Vec<f64> = pairs.iter().map(|&(p, _)| p).collect();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure("atom points are not pairwise distinct".into()));
        }
        Ok(Measure1D { kind: Kind::Atoms(pairs) })
    }

    pub fn mixture(parts: Vec<(f64, Measure1D)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidMeasure("mixture has no components".into()));
        }
        let mut total = 0.0;
        for &(w, _) in &parts {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("mixture weight {w} is negative")));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidMeasure(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Measure1D { kind: Kind::Mixture(parts) })
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        match spec {
            MeasureSpec::Uniform([lo, hi]) => Self::uniform(*lo, *hi),
            MeasureSpec::Atom(x) => Self::atom(*x),
            MeasureSpec::Atoms(pairs) => {
                Self::atoms(pairs.iter().map(|&[p, w]| (p, w)).collect())
            }
            MeasureSpec::Mixture(entries) => {
                let parts = entries
                    .iter()
                    .map(|e| Ok((e.w, Self::from_spec(&e.spec)?)))
                    .collect::<Result<Vec<_>>>()?;
                Self::mixture(parts)
            }
        }
    }

    /// One draw, consuming entropy from the caller's generator. Continuous
    /// parts use inverse-CDF transforms; atoms a cumulative-weight scan.
    pub fn sample_one(&self, rng: &mut impl Rng) -> f64 {
        match &self.kind {
            Kind::Uniform(lo, hi) => {
                let u: f64 = rng.gen();
                lo + u * (hi - lo)
            }
            Kind::Atoms(pairs) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(p, w) in pairs {
                    acc += w;
                    if u < acc {
                        return p;
                    }
                }
                pairs[pairs.len() - 1].0
            }
            Kind::Mixture(parts) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (w, mu) in parts {
                    acc += w;
                    if u < acc {
                        return mu.sample_one(rng);
                    }
                }
                parts[parts.len() - 1].1.sample_one(rng)
            }
        }
    }

    /// Mass of the interval from `lo` to `hi` with the given endpoint
    /// conventions. Endpoint flags only matter for the atomic part.
    pub fn interval_mass(&self, lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<f64> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "interval endpoints must be finite with lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(self.interval_mass_unchecked(lo, hi, lo_closed, hi_closed))
    }

    fn interval_mass_unchecked(&self, lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> f64 {
        match &self.kind {
            Kind::Uniform(a, b) => {
                let overlap = (hi.min(*b) - lo.max(*a)).max(0.0);
                overlap / (b - a)
            }
            Kind::Atoms(pairs) => pairs
                .iter()
                .filter(|&&(p, _)| {
                    let left = p > lo || (lo_closed && p == lo);
                    let right = p < hi || (hi_closed && p == hi);
                    left && right
                })
                .map(|&(_, w)| w)
                .sum(),
            Kind::Mixture(parts) => parts
                .iter()
                .map(|(w, mu)| w * mu.interval_mass_unchecked(lo, hi, lo_closed, hi_closed))
                .sum(),
        }
    }

    /// Mass of (-inf, x].
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Uniform(a, b) => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Kind::Atoms(pairs) => pairs.iter().filter(|&&(p, _)| p <= x).map(|&(_, w)| w).sum(),
            Kind::Mixture(parts) => parts.iter().map(|(w, mu)| w * mu.cdf(x)).sum(),
        }
    }

    /// Mass of (-inf, x).
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x) - self.atom_weight_at(x)
    }

    pub fn atom_weight_at(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Uniform(_, _) => 0.0,
            Kind::Atoms(pairs) => pairs
                .iter()
                .filter(|&&(p, _)| p == x)
                .map(|&(_, w)| w)
                .sum(),
            Kind::Mixture(parts) => parts.iter().map(|(w, mu)| w * mu.atom_weight_at(x)).sum(),
        }
    }

    /// Smallest closed interval carrying all the mass (zero-weight components
    /// are ignored).
    pub fn support_bounds(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Uniform(a, b) => (*a, *b),
            Kind::Atoms(pairs) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &(p, w) in pairs {
                    if w > 0.0 {
                        lo = lo.min(p);
                        hi = hi.max(p);
                    }
                }
                (lo, hi)
            }
            Kind::Mixture(parts) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (w, mu) in parts {
                    if *w > 0.0 {
                        let (l, h) = mu.support_bounds();
                        lo = lo.min(l);
                        hi = hi.max(h);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn is_purely_atomic(&self) -> bool {
        match &self.kind {
            Kind::Uniform(_, _) => false,
            Kind::Atoms(_) => true,
            Kind::Mixture(parts) => parts
                .iter()
                .all(|(w, mu)| *w == 0.0 || mu.is_purely_atomic()),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Uniform(a, b) => format!("uniform[{a},{b}]"),
            Kind::Atoms(pairs) => format!("atoms({})", pairs.len()),
            Kind::Mixture(parts) => format!("mixture({})", parts.len()),
        }
    }
}

/// Deterministic i.i.d. sampling: the same (measure, m, seed) triple always
/// yields the same values.
pub fn sample(mu: &Measure1D, m: usize, seed: u64) -> Result<Sample> {
    if m == 0 {
        return Err(Error::InvalidArgument("sample size m must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..m).map(|_| mu.sample_one(&mut rng)).collect();
    Ok(Sample { values, seed, source: mu.describe() })
}

/// JSON description of a measure, e.g.
/// `{"mixture":[{"w":0.5,"uniform":[0,1]},{"w":0.5,"atom":0.25}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MeasureSpec {
    #[serde(rename = "uniform")]
    Uniform([f64; 2]),
    #[serde(rename = "atom")]
    Atom(f64),
    #[serde(rename = "atoms")]
    Atoms(Vec<[f64; 2]>),
    #[serde(rename = "mixture")]
    Mixture(Vec<MixtureEntry>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureEntry {
    pub w: f64,
    #[serde(flatten)]
    pub spec: MeasureSpec,
}
