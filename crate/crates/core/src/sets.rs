//! Target sets, half-open rectangle unions, alternation counting, and
//! Hausdorff distances on finite point clouds.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    disk_cmp, dist, halfplane_cmp, is_strictly_convex_ccw, orient2d, Orientation, Point,
};

/// An axis-parallel line: `Horizontal` fixes y (probes vary in x),
/// `Vertical` fixes x (probes vary in y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl Axis {
    pub fn line_point(&self, coordinate: f64, probe: f64) -> Point {
        match self {
            Axis::Horizontal => Point::new(probe, coordinate),
            Axis::Vertical => Point::new(coordinate, probe),
        }
    }
}

/// The rectangle [x_lo, x_hi) x [y_lo, y_hi): bottom and left edges included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct HalfOpenRect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl From<[f64; 4]> for HalfOpenRect {
    fn from(v: [f64; 4]) -> Self {
        HalfOpenRect { x_lo: v[0], x_hi: v[1], y_lo: v[2], y_hi: v[3] }
    }
}

impl From<HalfOpenRect> for [f64; 4] {
    fn from(r: HalfOpenRect) -> Self {
        [r.x_lo, r.x_hi, r.y_lo, r.y_hi]
    }
}

impl HalfOpenRect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        HalfOpenRect { x_lo, x_hi, y_lo, y_hi }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.x_lo <= p.x && p.x < self.x_hi && self.y_lo <= p.y && p.y < self.y_hi
    }

    fn validate(&self) -> Result<()> {
        let ok = self.x_lo.is_finite()
            && self.x_hi.is_finite()
            && self.y_lo.is_finite()
            && self.y_hi.is_finite()
            && self.x_lo < self.x_hi
            && self.y_lo < self.y_hi;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSet(format!(
                "rectangle [{}, {}) x [{}, {}) is empty or not finite",
                self.x_lo, self.x_hi, self.y_lo, self.y_hi
            )))
        }
    }

}

/// Monotone bit pattern for ordering finite floats inside BTreeMap keys.
fn sort_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// A finite union of pairwise disjoint half-open rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<HalfOpenRect>", into = "Vec<HalfOpenRect>")]
pub struct HalfOpenRectUnion {
    rects: Vec<HalfOpenRect>,
}

impl TryFrom<Vec<HalfOpenRect>> for HalfOpenRectUnion {
    type Error = Error;
    fn try_from(rects: Vec<HalfOpenRect>) -> Result<Self> {
        HalfOpenRectUnion::new(rects)
    }
}

impl From<HalfOpenRectUnion> for Vec<HalfOpenRect> {
    fn from(u: HalfOpenRectUnion) -> Self {
        u.rects
    }
}

impl HalfOpenRectUnion {
    /// Validates every rectangle and checks pairwise disjointness with a
    /// left-to-right sweep (O(n log n)); the empty union is legal and denotes
    /// the empty set.
    pub fn new(rects: Vec<HalfOpenRect>) -> Result<Self> {
        for r in &rects {
            r.validate()?;
        }
        Self::check_disjoint(&rects)?;
        Ok(HalfOpenRectUnion { rects })
    }

    /// Construction path for rectangles that are distinct cells of one grid
    /// partition, where disjointness holds structurally.
    pub(crate) fn from_disjoint_cells(rects: Vec<HalfOpenRect>) -> Self {
        debug_assert!(Self::check_disjoint(&rects).is_ok());
        HalfOpenRectUnion { rects }
    }

    fn check_disjoint(rects: &[HalfOpenRect]) -> Result<()> {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
        enum Ev {
            Close,
            Open,
        }
        let mut events: Vec<(u64, Ev, usize)> = Vec::with_capacity(2 * rects.len());
        for (i, r) in rects.iter().enumerate() {
            events.push((sort_key(r.x_lo), Ev::Open, i));
            events.push((sort_key(r.x_hi), Ev::Close, i));
        }
        events.sort();
        // Active rectangles have pairwise disjoint y-intervals, so a new
        // interval can only collide with its two BTreeMap neighbors.
        let mut active: BTreeMap<(u64, usize), f64> = BTreeMap::new();
        for (_, ev, i) in events {
            let r = &rects[i];
            let key = (sort_key(r.y_lo), i);
            match ev {
                Ev::Close => {
                    active.remove(&key);
                }
                Ev::Open => {
                    if let Some((_, &prev_hi)) = active.range(..key).next_back() {
                        if prev_hi > r.y_lo {
                            return Err(Error::InvalidSet(
                                "rectangles in a union must be pairwise disjoint".into(),
                            ));
                        }
                    }
                    if let Some(((succ_lo_key, j), _)) = active.range(key..).next() {
                        let succ_lo = rects[*j].y_lo;
                        debug_assert_eq!(*succ_lo_key, sort_key(succ_lo));
                        if r.y_hi > succ_lo {
                            return Err(Error::InvalidSet(
                                "rectangles in a union must be pairwise disjoint".into(),
                            ));
                        }
                    }
                    active.insert(key, r.y_hi);
                }
            }
        }
        Ok(())
    }

    pub fn rects(&self) -> &[HalfOpenRect] {
        &self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.rects.iter().any(|r| r.contains(p))
    }

    /// Exact alternation count of the indicator along the given axis-parallel
    /// line. The rectangles met by the line have pairwise disjoint spans, so
    /// the count is twice the number of maximal runs after merging spans that
    /// share an endpoint.
    pub fn alternations_exact(&self, axis: Axis, coordinate: f64) -> usize {
        let mut spans: Vec<(f64, f64)> = self
            .rects
            .iter()
            .filter_map(|r| match axis {
                Axis::Horizontal => (r.y_lo <= coordinate && coordinate < r.y_hi)
                    .then_some((r.x_lo, r.x_hi)),
                Axis::Vertical => (r.x_lo <= coordinate && coordinate < r.x_hi)
                    .then_some((r.y_lo, r.y_hi)),
            })
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut runs = 0usize;
        let mut cur_hi = f64::NEG_INFINITY;
        for (lo, hi) in spans {
            if runs == 0 || lo > cur_hi {
                runs += 1;
                cur_hi = hi;
            } else {
                // lo == cur_hi: contiguous cells merge into one run.
                cur_hi = hi;
            }
        }
        2 * runs
    }

    /// Maximum exact alternation count over all lines parallel to the given
    /// axis. The count only changes at rectangle edge coordinates, and the
    /// indicator is right-continuous across them, so probing each breakpoint
    /// covers every line.
    pub fn max_alternations(&self, axis: Axis) -> usize {
        let mut breakpoints: Vec<f64> = self
            .rects
            .iter()
            .flat_map(|r| match axis {
                Axis::Horizontal => [r.y_lo, r.y_hi],
                Axis::Vertical => [r.x_lo, r.x_hi],
            })
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        breakpoints
            .iter()
            .map(|&c| self.alternations_exact(axis, c))
            .max()
            .unwrap_or(0)
    }
}

/// Slab decomposition of a rectangle union for O(log n) membership queries.
#[derive(Debug, Clone)]
pub struct RectUnionIndex {
    xs: Vec<f64>,
    ys: Vec<f64>,
    covered: Vec<u64>,
}

impl RectUnionIndex {
    pub fn build(rects: &[HalfOpenRect]) -> Self {
        // +0.0 folds -0.0 into +0.0 so total_cmp searches see one value.
        let canon = |v: f64| v + 0.0;
        let mut xs: Vec<f64> = rects.iter().flat_map(|r| [canon(r.x_lo), canon(r.x_hi)]).collect();
        let mut ys: Vec<f64> = rects.iter().flat_map(|r| [canon(r.y_lo), canon(r.y_hi)]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let nx = xs.len().saturating_sub(1);
        let ny = ys.len().saturating_sub(1);
        let mut covered = vec![0u64; (nx * ny + 63) / 64];
        for r in rects {
            let i0 = xs.binary_search_by(|v| v.total_cmp(&canon(r.x_lo))).expect("own endpoint");
            let i1 = xs.binary_search_by(|v| v.total_cmp(&canon(r.x_hi))).expect("own endpoint");
            let j0 = ys.binary_search_by(|v| v.total_cmp(&canon(r.y_lo))).expect("own endpoint");
            let j1 = ys.binary_search_by(|v| v.total_cmp(&canon(r.y_hi))).expect("own endpoint");
            for i in i0..i1 {
                for j in j0..j1 {
                    let bit = i * ny + j;
                    covered[bit / 64] |= 1 << (bit % 64);
                }
            }
        }
        RectUnionIndex { xs, ys, covered }
    }

    /// Index of the slab [xs[i], xs[i+1]) containing x, if any.
    pub fn x_slab(&self, x: f64) -> Option<usize> {
        let idx = self.xs.partition_point(|&v| v <= x);
        if idx == 0 || idx == self.xs.len() {
            return None;
        }
        Some(idx - 1)
    }

    pub fn y_slab(&self, y: f64) -> Option<usize> {
        let idx = self.ys.partition_point(|&v| v <= y);
        if idx == 0 || idx == self.ys.len() {
            return None;
        }
        Some(idx - 1)
    }

    pub fn cell_covered(&self, i: usize, j: usize) -> bool {
        let ny = self.ys.len() - 1;
        let bit = i * ny + j;
        self.covered[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn contains(&self, p: Point) -> bool {
        match (self.x_slab(p.x), self.y_slab(p.y)) {
            (Some(i), Some(j)) => self.cell_covered(i, j),
            _ => false,
        }
    }
}

/// A finite nonempty point set, the test proxy for nonempty compact sets in
/// the metric lemmas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCloud", into = "RawCloud")]
pub struct PointCloud {
    points: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct RawCloud {
    points: Vec<[f64; 2]>,
}

impl TryFrom<RawCloud> for PointCloud {
    type Error = Error;
    fn try_from(raw: RawCloud) -> Result<Self> {
        PointCloud::new(raw.points.into_iter().map(Point::from).collect())
    }
}

impl From<PointCloud> for RawCloud {
    fn from(c: PointCloud) -> Self {
        RawCloud { points: c.points.into_iter().map(<[f64; 2]>::from).collect() }
    }
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point cloud must be nonempty".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "point cloud contains non-finite point ({}, {})",
                p.x, p.y
            )));
        }
        Ok(PointCloud { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

/// Minimum Euclidean distance from `p` to the cloud.
pub fn point_set_distance(p: Point, a: &PointCloud) -> f64 {
    a.points
        .iter()
        .map(|&q| dist(p, q))
        .fold(f64::INFINITY, f64::min)
}

fn directed_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    a.points
        .iter()
        .map(|&p| point_set_distance(p, b))
        .fold(0.0, f64::max)
}

/// max(sup_{a in A} d(a, B), sup_{b in B} d(b, A)) over finite clouds.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Membership oracle with a declared alternation bound; the closure must be a
/// pure function of the point.
#[derive(Clone)]
pub struct OracleSet {
    pub membership: Arc<dyn Fn(Point) -> bool + Send + Sync>,
    pub alternation_bound: usize,
}

impl fmt::Debug for OracleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleSet")
            .field("alternation_bound", &self.alternation_bound)
            .finish_non_exhaustive()
    }
}

/// A half-plane {p : normal . p <= offset}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

/// A target set with an exact membership oracle. Polygon, disk, and
/// half-plane variants are closed sets; the rectangle union is half-open.
///
/// Invariants are established by the constructors: polygon vertices strictly
/// convex counterclockwise, disk radius positive, half-plane normals nonzero.
/// An empty half-plane list is the full plane; an empty rectangle union is
/// the empty set.
#[derive(Debug, Clone)]
pub enum TargetSet {
    ConvexPolygon(Vec<Point>),
    Disk { center: Point, radius: f64 },
    HalfPlaneIntersection(Vec<HalfPlane>),
    RectUnion(HalfOpenRectUnion),
    OracleSet(OracleSet),
}

impl TargetSet {
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        if !is_strictly_convex_ccw(&vertices) {
            return Err(Error::InvalidSet(
                "polygon vertices must be in strictly convex counterclockwise position".into(),
            ));
        }
        Ok(TargetSet::ConvexPolygon(vertices))
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !center.is_finite() || !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidSet(format!("disk radius must be positive, got {radius}")));
        }
        Ok(TargetSet::Disk { center, radius })
    }

    pub fn half_planes(planes: Vec<HalfPlane>) -> Result<Self> {
        for h in &planes {
            if !h.normal.is_finite() || !h.offset.is_finite() {
                return Err(Error::InvalidSet("half-plane data must be finite".into()));
            }
            if h.normal.x == 0.0 && h.normal.y == 0.0 {
                return Err(Error::InvalidSet("half-plane normal must be nonzero".into()));
            }
        }
        Ok(TargetSet::HalfPlaneIntersection(planes))
    }

    pub fn rect_union(u: HalfOpenRectUnion) -> Self {
        TargetSet::RectUnion(u)
    }

    pub fn oracle(
        membership: Arc<dyn Fn(Point) -> bool + Send + Sync>,
        alternation_bound: usize,
    ) -> Self {
        TargetSet::OracleSet(OracleSet { membership, alternation_bound })
    }

    pub fn contains(&self, p: Point) -> bool {
        match self {
            TargetSet::ConvexPolygon(v) => {
                let n = v.len();
                (0..n).all(|i| orient2d(v[i], v[(i + 1) % n], p) != Orientation::Clockwise)
            }
            TargetSet::Disk { center, radius } => {
                disk_cmp(p, *center, *radius) != Ordering::Greater
            }
            TargetSet::HalfPlaneIntersection(planes) => planes
                .iter()
                .all(|h| halfplane_cmp(p, h.normal, h.offset) != Ordering::Greater),
            TargetSet::RectUnion(u) => u.contains(p),
            TargetSet::OracleSet(o) => (o.membership)(p),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TargetSet::ConvexPolygon(v) => format!("polygon({})", v.len()),
            TargetSet::Disk { center, radius } => {
                format!("disk(({}, {}), {})", center.x, center.y, radius)
            }
            TargetSet::HalfPlaneIntersection(p) => format!("halfplanes({})", p.len()),
            TargetSet::RectUnion(u) => format!("rects({})", u.rects().len()),
            TargetSet::OracleSet(o) => format!("oracle(D={})", o.alternation_bound),
        }
    }
}

/// Sign changes of the membership indicator along the probe sequence; a lower
/// bound on the true alternation count of the set along the line.
pub fn alternations_on_line(
    s: &TargetSet,
    axis: Axis,
    coordinate: f64,
    probes: &[f64],
) -> Result<usize> {
    if probes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two probe points".into()));
    }
    if probes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("probes must be strictly increasing".into()));
    }
    let mut count = 0;
    let mut prev = s.contains(axis.line_point(coordinate, probes[0]));
    for &t in &probes[1..] {
        let cur = s.contains(axis.line_point(coordinate, t));
        if cur != prev {
            count += 1;
        }
        prev = cur;
    }
    Ok(count)
}

/// JSON description of a target set, e.g. `{"disk":{"c":[0,0],"r":1}}`,
/// `{"polygon":[[0,0],[2,0],[0,2]]}`, `{"rects":[[0,1,0,1]]}`,
/// `{"halfplanes":[[[1,0],2]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TargetSpec {
    #[serde(rename = "disk")]
    Disk { c: [f64; 2], r: f64 },
    #[serde(rename = "polygon")]
    Polygon(Vec<[f64; 2]>),
    #[serde(rename = "rects")]
    Rects(Vec<[f64; 4]>),
    #[serde(rename = "halfplanes")]
    HalfPlanes(Vec<([f64; 2], f64)>),
}

impl TargetSpec {
    pub fn build(&self) -> Result<TargetSet> {
        match self {
            TargetSpec::Disk { c, r } => TargetSet::disk(Point::from(*c), *r),
            TargetSpec::Polygon(v) => {
                TargetSet::polygon(v.iter().map(|&p| Point::from(p)).collect())
            }
            TargetSpec::Rects(v) => Ok(TargetSet::rect_union(HalfOpenRectUnion::new(
                v.iter().map(|&r| HalfOpenRect::from(r)).collect(),
            )?)),
            TargetSpec::HalfPlanes(v) => TargetSet::half_planes(
                v.iter()
                    .map(|&(n, o)| HalfPlane { normal: Point::from(n), offset: o })
                    .collect(),
            ),
        }
    }
}
