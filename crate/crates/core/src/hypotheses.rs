//! Grids, labelings, and the two hypothesis constructors: the convex hull of
//! the 1-labeled points and the auxiliary-grid union of half-open rectangles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{convex_hull, point_in_hull, Point};
use crate::sets::{Axis, HalfOpenRect, HalfOpenRectUnion, RectUnionIndex, TargetSet};

/// The m x m point grid {(a_i, b_j)}; coordinate repetitions are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Grid {
    pub fn new(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "grid needs equal-length nonempty coordinate sequences, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid coordinates must be finite".into()));
        }
        // Fold -0.0 into +0.0 so bitwise dedup agrees with numeric equality.
        for v in a.iter_mut().chain(b.iter_mut()) {
            *v += 0.0;
        }
        Ok(Grid { a, b })
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.a[i], self.b[j])
    }
}

/// A {0,1} labeling of a grid, stored row-major: entry (i, j) labels the
/// point (a_i, b_j). Repeated coordinates must carry consistent labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    grid: Grid,
    labels: Vec<bool>,
}

impl Labeling {
    pub fn new(grid: Grid, labels: Vec<bool>) -> Result<Self> {
        let m = grid.m();
        if labels.len() != m * m {
            return Err(Error::InconsistentLabeling(format!(
                "expected {} labels for an {m}x{m} grid, got {}",
                m * m,
                labels.len()
            )));
        }
        let rep_a = first_occurrence(&grid.a);
        let rep_b = first_occurrence(&grid.b);
        for i in 0..m {
            for j in 0..m {
                if labels[i * m + j] != labels[rep_a[i] * m + rep_b[j]] {
                    return Err(Error::InconsistentLabeling(format!(
                        "grid point ({}, {}) appears with two different labels",
                        grid.a[i], grid.b[j]
                    )));
                }
            }
        }
        Ok(Labeling { grid, labels })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn label(&self, i: usize, j: usize) -> bool {
        self.labels[i * self.grid.m() + j]
    }

    pub fn ones(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Deduplicated view: sorted distinct coordinates plus the label matrix
    /// on distinct points.
    pub fn dedup(&self) -> DedupLabeling {
        let ca = sorted_distinct(&self.grid.a);
        let cb = sorted_distinct(&self.grid.b);
        let m = self.grid.m();
        let mut labels = vec![false; ca.len() * cb.len()];
        for i in 0..m {
            let ia = ca.binary_search_by(|v| v.total_cmp(&self.grid.a[i])).expect("present");
            for j in 0..m {
                if self.labels[i * m + j] {
                    let jb =
                        cb.binary_search_by(|v| v.total_cmp(&self.grid.b[j])).expect("present");
                    labels[ia * cb.len() + jb] = true;
                }
            }
        }
        DedupLabeling { ca, cb, labels }
    }

    /// Maximum alternation count of the label pattern along grid rows and
    /// columns, read over sorted distinct coordinates with the zero labels
    /// implicit beyond the grid included.
    pub fn max_line_alternations(&self) -> LineAlternations {
        self.dedup().max_line_alternations()
    }
}

/// Labels on the deduplicated grid: `ca` x `cb` distinct sorted coordinates.
#[derive(Debug, Clone)]
pub struct DedupLabeling {
    pub ca: Vec<f64>,
    pub cb: Vec<f64>,
    labels: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineAlternations {
    /// Along horizontal lines: fix b, vary a.
    pub horizontal: usize,
    /// Along vertical lines: fix a, vary b.
    pub vertical: usize,
}

impl LineAlternations {
    pub fn max(&self) -> usize {
        self.horizontal.max(self.vertical)
    }
}

impl DedupLabeling {
    pub fn label(&self, ia: usize, jb: usize) -> bool {
        self.labels[ia * self.cb.len() + jb]
    }

    /// Counts include the zero labels implicit outside the grid, so a row
    /// reading 1 1 0 alternates twice. This makes the count of a labeling
    /// equal to the alternation count of its auxiliary union along the
    /// corresponding lines.
    pub fn max_line_alternations(&self) -> LineAlternations {
        let (r, s) = (self.ca.len(), self.cb.len());
        let line = |labels: &mut dyn Iterator<Item = bool>| {
            let mut count = 0;
            let mut prev = false;
            for l in labels.chain([false]) {
                if l != prev {
                    count += 1;
                }
                prev = l;
            }
            count
        };
        let mut horizontal = 0;
        for jb in 0..s {
            horizontal = horizontal.max(line(&mut (0..r).map(|ia| self.label(ia, jb))));
        }
        let mut vertical = 0;
        for ia in 0..r {
            vertical = vertical.max(line(&mut (0..s).map(|jb| self.label(ia, jb))));
        }
        LineAlternations { horizontal, vertical }
    }
}

fn first_occurrence(vals: &[f64]) -> Vec<usize> {
    let mut seen: HashMap<u64, usize> = HashMap::with_capacity(vals.len());
    vals.iter()
        .enumerate()
        .map(|(i, v)| *seen.entry(v.to_bits()).or_insert(i))
        .collect()
}

fn sorted_distinct(vals: &[f64]) -> Vec<f64> {
    let mut c = vals.to_vec();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// The labeling of the grid induced by a target set.
pub fn label_grid(c: &TargetSet, g: &Grid) -> Labeling {
    let m = g.m();
    let fast = match c {
        TargetSet::RectUnion(u) => Some(RectUnionIndex::build(u.rects())),
        _ => None,
    };
    let mut labels = vec![false; m * m];
    for i in 0..m {
        for j in 0..m {
            let p = g.point(i, j);
            labels[i * m + j] = match &fast {
                Some(idx) => idx.contains(p),
                None => c.contains(p),
            };
        }
    }
    // Induced labels are consistent by construction.
    Labeling { grid: g.clone(), labels }
}

/// Strictly increasing u interleaving the sorted distinct source values c:
/// u_0 < c_0 < u_1 < ... < c_{r-1} < u_r.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliarySequence {
    pub u: Vec<f64>,
    pub c: Vec<f64>,
}

/// Builds the auxiliary sequence: endpoints one unit outside the range,
/// midpoints between consecutive distinct values. Fails with a
/// degenerate-grid error when rounding breaks strict interleaving.
pub fn auxiliary_sequence(a: &[f64]) -> Result<AuxiliarySequence> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("auxiliary sequence needs a nonempty source".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("auxiliary sequence source must be finite".into()));
    }
    let c = sorted_distinct(a);
    let r = c.len();
    let mut u = Vec::with_capacity(r + 1);
    u.push(c[0] - 1.0);
    for i in 1..r {
        u.push((c[i - 1] + c[i]) / 2.0);
    }
    u.push(c[r - 1] + 1.0);
    for i in 0..r {
        if !(u[i] < c[i] && c[i] < u[i + 1]) {
            return Err(Error::DegenerateGrid(format!(
                "auxiliary sequence fails strict interleaving near value {}",
                c[i]
            )));
        }
    }
    Ok(AuxiliarySequence { u, c })
}

/// A constructed approximant.
#[derive(Debug, Clone)]
pub enum Hypothesis {
    ConvexHull(Vec<Point>),
    RectUnionHyp(HalfOpenRectUnion),
    Empty,
}

impl Hypothesis {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Hypothesis::ConvexHull(v) => point_in_hull(v, p),
            Hypothesis::RectUnionHyp(u) => u.contains(p),
            Hypothesis::Empty => false,
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Hypothesis::ConvexHull(v) => format!("hull({})", v.len()),
            Hypothesis::RectUnionHyp(u) => format!("rects({})", u.rects().len()),
            Hypothesis::Empty => "empty".into(),
        }
    }
}

/// One auxiliary cell per 1-labeled distinct grid point; `Empty` when there
/// are no 1-labels.
pub fn auxiliary_union(lab: &Labeling) -> Result<Hypothesis> {
    let d = lab.dedup();
    if d.labels.iter().all(|&l| !l) {
        return Ok(Hypothesis::Empty);
    }
    let ua = auxiliary_sequence(&d.ca)?;
    let vb = auxiliary_sequence(&d.cb)?;
    let mut cells = Vec::new();
    for ia in 0..d.ca.len() {
        for jb in 0..d.cb.len() {
            if d.label(ia, jb) {
                cells.push(HalfOpenRect::new(
                    ua.u[ia],
                    ua.u[ia + 1],
                    vb.u[jb],
                    vb.u[jb + 1],
                ));
            }
        }
    }
    Ok(Hypothesis::RectUnionHyp(HalfOpenRectUnion::from_disjoint_cells(cells)))
}

/// Convex hull of the 1-labeled grid points; degenerate hulls (one point or
/// a segment) are legal hypotheses.
pub fn convex_hull_hypothesis(lab: &Labeling) -> Hypothesis {
    let d = lab.dedup();
    let mut pts = Vec::new();
    for ia in 0..d.ca.len() {
        for jb in 0..d.cb.len() {
            if d.label(ia, jb) {
                pts.push(Point::new(d.ca[ia], d.cb[jb]));
            }
        }
    }
    if pts.is_empty() {
        return Hypothesis::Empty;
    }
    Hypothesis::ConvexHull(convex_hull(&pts))
}

/// Number of grid points where the hypothesis and the target disagree;
/// zero for hypotheses built from the target's own labeling.
pub fn realizability_check(c: &TargetSet, g: &Grid, h: &Hypothesis) -> usize {
    let m = g.m();
    let target_idx = match c {
        TargetSet::RectUnion(u) => Some(RectUnionIndex::build(u.rects())),
        _ => None,
    };
    let hyp_idx = match h {
        Hypothesis::RectUnionHyp(u) => Some(RectUnionIndex::build(u.rects())),
        _ => None,
    };
    let mut mismatches = 0;
    for i in 0..m {
        for j in 0..m {
            let p = g.point(i, j);
            let in_c = match &target_idx {
                Some(idx) => idx.contains(p),
                None => c.contains(p),
            };
            let in_h = match &hyp_idx {
                Some(idx) => idx.contains(p),
                None => h.contains(p),
            };
            if in_c != in_h {
                mismatches += 1;
            }
        }
    }
    mismatches
}

/// JSON form of a labeling: `{"a":[...],"b":[...],"labels":[[...]]}` with
/// labels in row-major order (labels[i][j] belongs to (a_i, b_j)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelingSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub labels: Vec<Vec<u8>>,
}

impl LabelingSpec {
    pub fn build(&self) -> Result<Labeling> {
        let grid = Grid::new(self.a.clone(), self.b.clone())?;
        let m = grid.m();
        if self.labels.len() != m || self.labels.iter().any(|row| row.len() != m) {
            return Err(Error::InconsistentLabeling(format!(
                "label matrix must be {m}x{m}"
            )));
        }
        let mut flat = Vec::with_capacity(m * m);
        for row in &self.labels {
            for &v in row {
                match v {
                    0 => flat.push(false),
                    1 => flat.push(true),
                    other => {
                        return Err(Error::InconsistentLabeling(format!(
                            "labels must be 0 or 1, got {other}"
                        )))
                    }
                }
            }
        }
        Labeling::new(grid, flat)
    }

    pub fn from_labeling(lab: &Labeling) -> Self {
        let m = lab.grid().m();
        LabelingSpec {
            a: lab.grid().a().to_vec(),
            b: lab.grid().b().to_vec(),
            labels: (0..m)
                .map(|i| (0..m).map(|j| lab.label(i, j) as u8).collect())
                .collect(),
        }
    }
}

/// Convenience wrapper used by tests and experiments: label, then build both
/// kinds of hypothesis.
pub fn hypotheses_for(c: &TargetSet, g: &Grid) -> Result<(Labeling, Hypothesis, Hypothesis)> {
    let lab = label_grid(c, g);
    let hull = convex_hull_hypothesis(&lab);
    let union = auxiliary_union(&lab)?;
    Ok((lab, hull, union))
}

/// Exact alternation count of a hypothesis along an axis-parallel line, when
/// the hypothesis has rectangle structure.
pub fn hypothesis_alternations_exact(h: &Hypothesis, axis: Axis, coordinate: f64) -> Option<usize> {
    match h {
        Hypothesis::RectUnionHyp(u) => Some(u.alternations_exact(axis, coordinate)),
        Hypothesis::Empty => Some(0),
        Hypothesis::ConvexHull(_) => None,
    }
}
