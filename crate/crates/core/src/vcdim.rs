//! Brute-force combinatorics: shattering, VC dimension, the Sauer-Shelah-
//! Perles bound, symmetric-difference families and their entropy constant,
//! slicewise traces, and the uniform-convergence sample-size calculators.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{convex_hull, point_in_hull, Point};
use crate::losses::Region;
use crate::sets::Axis;

pub const UNIVERSE_LIMIT: usize = 25;
pub const SYMDIFF_SET_LIMIT: usize = 1 << 12;
pub const SLICE_WITNESS_LIMIT: usize = 20;

/// A set family over a finite universe, each set a bitmask over universe
/// indices. Duplicate sets are allowed and deduplicated for counting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FamilySpec", into = "FamilySpec")]
pub struct FiniteFamily {
    universe_size: usize,
    sets: Vec<u32>,
}

/// JSON form: `{"universe_size":3,"sets":[[0,1],[2],[]]}` (sets as index
/// lists).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub universe_size: usize,
    pub sets: Vec<Vec<u8>>,
}

impl TryFrom<FamilySpec> for FiniteFamily {
    type Error = Error;
    fn try_from(spec: FamilySpec) -> Result<Self> {
        let masks = spec
            .sets
            .iter()
            .map(|idxs| {
                let mut mask = 0u32;
                for &i in idxs {
                    if (i as usize) >= spec.universe_size {
                        return Err(Error::InvalidArgument(format!(
                            "set element {i} outside universe of size {}",
                            spec.universe_size
                        )));
                    }
                    mask |= 1 << i;
                }
                Ok(mask)
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteFamily::from_masks(spec.universe_size, masks)
    }
}

impl From<FiniteFamily> for FamilySpec {
    fn from(f: FiniteFamily) -> Self {
        FamilySpec {
            universe_size: f.universe_size,
            sets: f
                .sets
                .iter()
                .map(|&m| (0..32).filter(|&i| m & (1 << i) != 0).map(|i| i as u8).collect())
                .collect(),
        }
    }
}

impl FiniteFamily {
    pub fn from_masks(universe_size: usize, sets: Vec<u32>) -> Result<Self> {
        if universe_size > 32 {
            return Err(Error::SizeGuard {
                what: "universe",
                actual: universe_size,
                limit: 32,
            });
        }
        let width_mask = mask_of(universe_size);
        if let Some(&bad) = sets.iter().find(|&&s| s & !width_mask != 0) {
            return Err(Error::InvalidArgument(format!(
                "set {bad:#x} has bits outside the {universe_size}-point universe"
            )));
        }
        Ok(FiniteFamily { universe_size, sets })
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn sets(&self) -> &[u32] {
        &self.sets
    }

    pub fn distinct_sets(&self) -> Vec<u32> {
        let mut sorted = self.sets.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted
    }

    /// True iff the family realizes all 2^|subset| patterns on the subset.
    pub fn shatters(&self, subset: u32) -> Result<bool> {
        if subset & !mask_of(self.universe_size) != 0 {
            return Err(Error::InvalidArgument(
                "subset has bits outside the universe".into(),
            ));
        }
        let k = subset.count_ones() as usize;
        if k > UNIVERSE_LIMIT {
            return Err(Error::SizeGuard { what: "shattering subset", actual: k, limit: UNIVERSE_LIMIT });
        }
        let need = 1usize << k;
        if self.sets.len() < need {
            return Ok(false);
        }
        let mut patterns: HashSet<u32> = HashSet::with_capacity(need);
        for &s in &self.sets {
            patterns.insert(s & subset);
            if patterns.len() == need {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Largest size of a shattered subset, by ascending exhaustive search
    /// with early exit: candidates at size k extend shattered (k-1)-subsets
    /// by a larger index, and the search stops at the first empty level.
    pub fn vc_dimension(&self) -> Result<usize> {
        if self.universe_size > UNIVERSE_LIMIT {
            return Err(Error::SizeGuard {
                what: "universe",
                actual: self.universe_size,
                limit: UNIVERSE_LIMIT,
            });
        }
        let sets = self.distinct_sets();
        if sets.len() <= 1 {
            return Ok(0);
        }
        let mut checker = ShatterChecker::new(self.universe_size, &sets);
        let mut frontier: Vec<u32> = vec![0];
        let mut d = 0;
        loop {
            let mut next = Vec::new();
            for &mask in &frontier {
                let start = if mask == 0 { 0 } else { 32 - mask.leading_zeros() as usize };
                for t in start..self.universe_size {
                    let cand = mask | (1 << t);
                    if checker.shatters(cand) {
                        next.push(cand);
                    }
                }
            }
            if next.is_empty() {
                return Ok(d);
            }
            d += 1;
            if d == self.universe_size {
                return Ok(d);
            }
            frontier = next;
        }
    }

    /// Checks |distinct traces| <= sum_{i <= d} C(n, i) with d the family's
    /// VC dimension and n the universe size. Always true; a false return
    /// would indicate an implementation bug.
    pub fn sauer_bound_check(&self) -> Result<bool> {
        let d = self.vc_dimension()?;
        let distinct = self.distinct_sets().len() as u64;
        let bound: u64 = (0..=d).map(|i| binomial(self.universe_size, i)).sum();
        Ok(distinct <= bound)
    }

    /// The family {H1 symdiff H2 : H1, H2 in sets}, deduplicated and sorted.
    pub fn symdiff_family(&self) -> Result<FiniteFamily> {
        if self.sets.len() > SYMDIFF_SET_LIMIT {
            return Err(Error::SizeGuard {
                what: "symmetric-difference input family",
                actual: self.sets.len(),
                limit: SYMDIFF_SET_LIMIT,
            });
        }
        let distinct = self.distinct_sets();
        let mut out: HashSet<u32> = HashSet::new();
        for (i, &a) in distinct.iter().enumerate() {
            for &b in &distinct[i..] {
                out.insert(a ^ b);
            }
        }
        let mut sets: Vec<u32> = out.into_iter().collect();
        sets.sort_unstable();
        Ok(FiniteFamily { universe_size: self.universe_size, sets })
    }
}

fn mask_of(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Pattern counting with a stamped lookup table when the universe is small
/// enough, a hash set otherwise.
struct ShatterChecker<'a> {
    sets: &'a [u32],
    table: Option<Vec<u32>>,
    stamp: u32,
}

impl<'a> ShatterChecker<'a> {
    fn new(universe_size: usize, sets: &'a [u32]) -> Self {
        let table = (universe_size <= 16).then(|| vec![0u32; 1 << universe_size]);
        ShatterChecker { sets, table, stamp: 0 }
    }

    fn shatters(&mut self, subset: u32) -> bool {
        let k = subset.count_ones() as usize;
        let need = 1usize << k;
        if self.sets.len() < need {
            return false;
        }
        match &mut self.table {
            Some(table) => {
                self.stamp += 1;
                let mut found = 0usize;
                for &s in self.sets {
                    let slot = &mut table[(s & subset) as usize];
                    if *slot != self.stamp {
                        *slot = self.stamp;
                        found += 1;
                        if found == need {
                            return true;
                        }
                    }
                }
                false
            }
            None => {
                let mut patterns: HashSet<u32> = HashSet::with_capacity(need);
                for &s in self.sets {
                    patterns.insert(s & subset);
                    if patterns.len() == need {
                        return true;
                    }
                }
                false
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Traces of all real intervals on the given points (indices refer to the
/// input order; duplicate values trace together).
pub fn interval_traces(points: &[f64]) -> Result<FiniteFamily> {
    if points.len() > UNIVERSE_LIMIT {
        return Err(Error::SizeGuard {
            what: "interval trace universe",
            actual: points.len(),
            limit: UNIVERSE_LIMIT,
        });
    }
    let mut values: Vec<f64> = points.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| a == b);
    let mut out: HashSet<u32> = HashSet::new();
    out.insert(0);
    for i in 0..values.len() {
        for j in i..values.len() {
            let (lo, hi) = (values[i], values[j]);
            let mut mask = 0u32;
            for (t, &p) in points.iter().enumerate() {
                if lo <= p && p <= hi {
                    mask |= 1 << t;
                }
            }
            out.insert(mask);
        }
    }
    let mut sets: Vec<u32> = out.into_iter().collect();
    sets.sort_unstable();
    FiniteFamily::from_masks(points.len(), sets)
}

/// Traces of convex sets on the given points: the distinct hull-closures of
/// all subsets.
pub fn convex_traces(points: &[Point]) -> Result<FiniteFamily> {
    let n = points.len();
    if n > 16 {
        return Err(Error::SizeGuard { what: "convex trace universe", actual: n, limit: 16 });
    }
    let mut out: HashSet<u32> = HashSet::new();
    for mask in 0u32..(1 << n) {
        let subset: Vec<Point> = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| points[i])
            .collect();
        let hull = convex_hull(&subset);
        let mut closure = 0u32;
        for (i, &p) in points.iter().enumerate() {
            if point_in_hull(&hull, p) {
                closure |= 1 << i;
            }
        }
        out.insert(closure);
    }
    let mut sets: Vec<u32> = out.into_iter().collect();
    sets.sort_unstable();
    FiniteFamily::from_masks(n, sets)
}

/// VC dimension of the trace family obtained by slicing the pool along one
/// axis-parallel line: a certified lower bound on the slicewise VC dimension
/// of the class the pool was drawn from.
pub fn svc_lower_bound<R: Region + ?Sized>(
    pool: &[&R],
    witness: f64,
    z: &[f64],
    axis: Axis,
) -> Result<usize> {
    if z.len() > SLICE_WITNESS_LIMIT {
        return Err(Error::SizeGuard {
            what: "slice witness list",
            actual: z.len(),
            limit: SLICE_WITNESS_LIMIT,
        });
    }
    let sets: Vec<u32> = pool
        .iter()
        .map(|h| {
            let mut mask = 0u32;
            for (i, &t) in z.iter().enumerate() {
                if h.contains_point(axis.line_point(witness, t)) {
                    mask |= 1 << i;
                }
            }
            mask
        })
        .collect();
    FiniteFamily::from_masks(z.len(), sets)?.vc_dimension()
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// The root of h2(1/c) = 1/2 on c >= 2, by bisection to 1e-12. This is the
/// constant scaling the VC dimension of a symmetric-difference family.
pub fn entropy_constant() -> f64 {
    let mut lo = 2.0f64;
    let mut hi = 16.0f64;
    // h2(1/c) decreases in c on [2, inf).
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(1.0 / mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub const TWO_WAY_K: f64 = 6873.0;
pub const TWO_WAY_K_PRIME: f64 = 8109.0;
pub const ONE_WAY_K: f64 = 378.0;
pub const ONE_WAY_K_PRIME: f64 = 446.0;

/// Inputs to the sample-size bound m(eps, delta, d) = ceil((K d / (delta^2
/// eps^2)) ln(K' d / (delta^2 eps^2))).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UCBoundParams {
    pub d: u64,
    pub eps: f64,
    pub delta: f64,
    pub k: f64,
    pub k_prime: f64,
}

impl UCBoundParams {
    /// Constants for two-way representativeness (both marginals resampled).
    pub fn two_way(d: u64, eps: f64, delta: f64) -> Self {
        UCBoundParams { d, eps, delta, k: TWO_WAY_K, k_prime: TWO_WAY_K_PRIME }
    }

    /// Constants for the classical one-way bound.
    pub fn one_way(d: u64, eps: f64, delta: f64) -> Self {
        UCBoundParams { d, eps, delta, k: ONE_WAY_K, k_prime: ONE_WAY_K_PRIME }
    }
}

/// Sufficient sample size for eps-representativeness with probability at
/// least 1 - delta, given a slicewise VC bound d. The logarithm's argument
/// is clamped below at e, keeping the bound monotone and at least
/// K d / (delta^2 eps^2). Returns 1 when d = 0 (the class then has at most
/// one element).
pub fn m_uc(params: &UCBoundParams) -> Result<u64> {
    if !(params.eps > 0.0) || !params.eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {}", params.eps)));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {}",
            params.delta
        )));
    }
    if params.d == 0 {
        return Ok(1);
    }
    let scale = 1.0 / (params.delta * params.delta * params.eps * params.eps);
    let lead = params.k * params.d as f64 * scale;
    let ln_arg = (params.k_prime * params.d as f64 * scale).max(std::f64::consts::E);
    Ok((lead * ln_arg.ln()).ceil() as u64)
}
