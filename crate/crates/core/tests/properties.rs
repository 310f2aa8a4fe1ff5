//! Cross-module invariants: measure arithmetic, sampling determinism,
//! Hausdorff metric facts, auxiliary-grid structure, loss pseudometrics,
//! and VC combinatorics.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gridapprox::geom::{convex_hull, dist};
use gridapprox::hypotheses::{
    auxiliary_sequence, auxiliary_union, hypotheses_for, label_grid, realizability_check, Grid,
    Hypothesis, Labeling,
};
use gridapprox::losses::{empirical_loss, total_loss_exact};
use gridapprox::measures::{sample, Measure1D};
use gridapprox::sets::{
    alternations_on_line, hausdorff, point_set_distance, Axis, HalfOpenRect, HalfOpenRectUnion,
    PointCloud, TargetSet,
};
use gridapprox::vcdim::{entropy_constant, m_uc, FiniteFamily, UCBoundParams};
use gridapprox::Point;

fn arb_measure() -> BoxedStrategy<Measure1D> {
    let uniform = (-5.0f64..5.0, 0.1f64..4.0)
        .prop_map(|(lo, w)| Measure1D::uniform(lo, lo + w).unwrap());
    let atoms = proptest::collection::btree_set(-40i32..40, 1..5).prop_map(|set| {
        let w = 1.0 / set.len() as f64;
        Measure1D::atoms(set.iter().map(|&i| (i as f64 / 7.0, w)).collect()).unwrap()
    });
    prop_oneof![
        uniform.clone(),
        atoms.clone(),
        (uniform, atoms)
            .prop_map(|(u, a)| Measure1D::mixture(vec![(0.5, u), (0.5, a)]).unwrap()),
    ]
    .boxed()
}

fn arb_cloud(max_len: usize) -> BoxedStrategy<PointCloud> {
    proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..=max_len)
        .prop_map(|pts| {
            PointCloud::new(pts.into_iter().map(|(x, y)| Point::new(x, y)).collect()).unwrap()
        })
        .boxed()
}

/// Rectangle union built from a subset of the cells of one shared partition,
/// so disjointness holds by construction.
fn union_from_cells(xs: &[f64], ys: &[f64], mask: u32) -> HalfOpenRectUnion {
    let mut rects = Vec::new();
    let cols = xs.len() - 1;
    for i in 0..cols {
        for j in 0..ys.len() - 1 {
            if mask >> (i * (ys.len() - 1) + j) & 1 == 1 {
                rects.push(HalfOpenRect::new(xs[i], xs[i + 1], ys[j], ys[j + 1]));
            }
        }
    }
    HalfOpenRectUnion::new(rects).unwrap()
}

fn arb_cuts() -> BoxedStrategy<Vec<f64>> {
    proptest::collection::btree_set(-30i32..30, 4).prop_map(|s| {
        s.iter().map(|&i| i as f64 / 3.0).collect()
    })
    .boxed()
}

proptest! {
    #[test]
    fn partition_masses_sum_to_whole(
        mu in arb_measure(),
        cuts in proptest::collection::btree_set(-90i32..90, 0..12),
    ) {
        let mut edges = vec![-10.0];
        edges.extend(cuts.iter().map(|&c| c as f64 / 9.0));
        edges.push(10.0);
        let whole = mu.interval_mass(-10.0, 10.0, true, false).unwrap();
        let pieces: f64 = edges
            .windows(2)
            .map(|w| mu.interval_mass(w[0], w[1], true, false).unwrap())
            .sum();
        prop_assert!((whole - pieces).abs() <= 1e-12, "whole {whole} != sum {pieces}");
    }

    #[test]
    fn sampling_is_reproducible(mu in arb_measure(), m in 1usize..200, seed in any::<u64>()) {
        let s1 = sample(&mu, m, seed).unwrap();
        let s2 = sample(&mu, m, seed).unwrap();
        prop_assert_eq!(s1.values, s2.values);
        prop_assert_eq!(s1.seed, seed);
    }

    #[test]
    fn hausdorff_is_a_metric(
        a in arb_cloud(12),
        b in arb_cloud(12),
        c in arb_cloud(12),
    ) {
        prop_assert_eq!(hausdorff(&a, &a), 0.0);
        let ab = hausdorff(&a, &b);
        prop_assert_eq!(ab, hausdorff(&b, &a));
        prop_assert!(ab >= 0.0);
        prop_assert!(hausdorff(&a, &c) <= ab + hausdorff(&b, &c) + 1e-9);
    }

    #[test]
    fn hausdorff_zero_means_equal_point_sets(a in arb_cloud(8), b in arb_cloud(8)) {
        if hausdorff(&a, &b) == 0.0 {
            for &p in a.points() {
                prop_assert!(b.points().contains(&p));
            }
            for &p in b.points() {
                prop_assert!(a.points().contains(&p));
            }
        }
    }

    #[test]
    fn point_distance_is_lipschitz(
        x in (-5.0f64..5.0, -5.0f64..5.0),
        y in (-5.0f64..5.0, -5.0f64..5.0),
        a in arb_cloud(20),
        b in arb_cloud(20),
    ) {
        let x = Point::new(x.0, x.1);
        let y = Point::new(y.0, y.1);
        let lhs = (point_set_distance(x, &a) - point_set_distance(y, &b)).abs();
        prop_assert!(lhs <= dist(x, y) + hausdorff(&a, &b) + 1e-9);
    }

    #[test]
    fn auxiliary_sequence_interleaves(
        a in proptest::collection::vec(-1e3f64..1e3, 1..25),
    ) {
        // Degenerate spacing is rejected by contract; the invariant is only
        // claimed for accepted inputs.
        if let Ok(s) = auxiliary_sequence(&a) {
            prop_assert_eq!(s.u.len(), s.c.len() + 1);
            for i in 0..s.c.len() {
                prop_assert!(s.u[i] < s.c[i] && s.c[i] < s.u[i + 1]);
            }
        }
    }

    #[test]
    fn distinct_points_and_cells_are_in_bijection(
        a in proptest::collection::vec(-50.0f64..50.0, 1..12),
        b in proptest::collection::vec(-50.0f64..50.0, 1..12),
    ) {
        let m = a.len().min(b.len());
        let grid = Grid::new(a[..m].to_vec(), b[..m].to_vec()).unwrap();
        let lab = Labeling::new(grid.clone(), vec![true; m * m]).unwrap();
        let hyp = match auxiliary_union(&lab) {
            Ok(h) => h,
            Err(_) => return Ok(()), // degenerate spacing, rejected by contract
        };
        let Hypothesis::RectUnionHyp(u) = &hyp else { panic!("all-ones gives cells") };

        let mut ca = grid.a().to_vec();
        ca.sort_by(f64::total_cmp);
        ca.dedup();
        let mut cb = grid.b().to_vec();
        cb.sort_by(f64::total_cmp);
        cb.dedup();
        prop_assert_eq!(u.rects().len(), ca.len() * cb.len());
        for &x in &ca {
            for &y in &cb {
                let interior = u
                    .rects()
                    .iter()
                    .filter(|r| r.x_lo < x && x < r.x_hi && r.y_lo < y && y < r.y_hi)
                    .count();
                prop_assert_eq!(interior, 1);
            }
        }
    }

    #[test]
    fn rect_union_probe_counts_are_exact(
        cuts_x in arb_cuts(),
        cuts_y in arb_cuts(),
        mask in any::<u32>(),
        along in -10.0f64..10.0,
    ) {
        let u = union_from_cells(&cuts_x, &cuts_y, mask & 0x1ff);
        let target = TargetSet::rect_union(u.clone());
        for axis in [Axis::Horizontal, Axis::Vertical] {
            let mut bps: Vec<f64> = u
                .rects()
                .iter()
                .flat_map(|r| match axis {
                    Axis::Horizontal => [r.x_lo, r.x_hi],
                    Axis::Vertical => [r.y_lo, r.y_hi],
                })
                .collect();
            bps.sort_by(f64::total_cmp);
            bps.dedup();
            if bps.is_empty() {
                continue;
            }
            let mut probes = vec![bps[0] - 1.0];
            probes.extend(&bps);
            // On every constant piece of the indicator the probe set has a
            // point, so the sign-change count is the exact alternation count.
            for coord in bps.iter().copied().chain([along]) {
                let exact = u.alternations_exact(axis, coord);
                let probed = alternations_on_line(&target, axis, coord, &probes).unwrap();
                prop_assert_eq!(probed, exact);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructors_realize_their_labeling(
        cx in -2.0f64..2.0,
        cy in -2.0f64..2.0,
        r in 0.3f64..2.5,
        coords in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..10),
    ) {
        let disk = TargetSet::disk(Point::new(cx, cy), r).unwrap();
        let (a, b): (Vec<f64>, Vec<f64>) = coords.into_iter().unzip();
        let grid = Grid::new(a, b).unwrap();
        let Ok((_, hull, union)) = hypotheses_for(&disk, &grid) else { return Ok(()) };
        prop_assert_eq!(realizability_check(&disk, &grid, &hull), 0);
        prop_assert_eq!(realizability_check(&disk, &grid, &union), 0);
    }

    #[test]
    fn exact_total_loss_is_a_pseudometric(
        cuts_x in arb_cuts(),
        cuts_y in arb_cuts(),
        ma in any::<u32>(),
        mb in any::<u32>(),
        mc in any::<u32>(),
        mu0 in arb_measure(),
        mu1 in arb_measure(),
    ) {
        let a = union_from_cells(&cuts_x, &cuts_y, ma & 0x1ff);
        let b = union_from_cells(&cuts_x, &cuts_y, mb & 0x1ff);
        let c = union_from_cells(&cuts_x, &cuts_y, mc & 0x1ff);
        let l = |p: &HalfOpenRectUnion, q: &HalfOpenRectUnion| {
            total_loss_exact(p.rects(), q.rects(), &mu0, &mu1)
        };
        prop_assert_eq!(l(&a, &a), 0.0);
        prop_assert_eq!(l(&a, &b), l(&b, &a));
        prop_assert!(l(&a, &c) <= l(&a, &b) + l(&b, &c) + 1e-9);
    }

    #[test]
    fn empirical_loss_triangle_is_exact_on_counts(
        cuts_x in arb_cuts(),
        cuts_y in arb_cuts(),
        ma in any::<u32>(),
        mb in any::<u32>(),
        mc in any::<u32>(),
        coords in proptest::collection::vec((-12.0f64..12.0, -12.0f64..12.0), 1..10),
    ) {
        let a = union_from_cells(&cuts_x, &cuts_y, ma & 0x1ff);
        let b = union_from_cells(&cuts_x, &cuts_y, mb & 0x1ff);
        let c = union_from_cells(&cuts_x, &cuts_y, mc & 0x1ff);
        let (ga, gb): (Vec<f64>, Vec<f64>) = coords.into_iter().unzip();
        let grid = Grid::new(ga, gb).unwrap();
        let eab = empirical_loss(&a, &b, &grid).mismatches;
        let ebc = empirical_loss(&b, &c, &grid).mismatches;
        let eac = empirical_loss(&a, &c, &grid).mismatches;
        prop_assert!(eac <= eab + ebc);
    }

    #[test]
    fn empirical_loss_ignores_coordinate_order(
        cuts_x in arb_cuts(),
        cuts_y in arb_cuts(),
        mask in any::<u32>(),
        coords in proptest::collection::vec((-12.0f64..12.0, -12.0f64..12.0), 2..12),
        shuffle_seed in any::<u64>(),
    ) {
        let u = union_from_cells(&cuts_x, &cuts_y, mask & 0x1ff);
        let disk = TargetSet::disk(Point::new(0.0, 0.0), 5.0).unwrap();
        let (mut a, mut b): (Vec<f64>, Vec<f64>) = coords.into_iter().unzip();
        let grid = Grid::new(a.clone(), b.clone()).unwrap();
        let before = empirical_loss(&disk, &u, &grid);
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        let after = empirical_loss(&disk, &u, &Grid::new(a, b).unwrap());
        prop_assert_eq!(before, after);
    }

    #[test]
    fn sauer_and_symdiff_bounds_hold(
        universe in 1usize..=10,
        raw_sets in proptest::collection::vec(any::<u32>(), 1..60),
    ) {
        let mask = if universe == 32 { u32::MAX } else { (1u32 << universe) - 1 };
        let sets: Vec<u32> = raw_sets.into_iter().map(|s| s & mask).collect();
        let fam = FiniteFamily::from_masks(universe, sets).unwrap();
        prop_assert!(fam.sauer_bound_check().unwrap());
        let d = fam.vc_dimension().unwrap();
        let sym = fam.symdiff_family().unwrap();
        let bound = (entropy_constant() * d as f64).ceil() as usize;
        prop_assert!(sym.vc_dimension().unwrap() <= bound.max(0));
    }

    #[test]
    fn shattering_is_monotone_under_subsets(
        universe in 1usize..=10,
        raw_sets in proptest::collection::vec(any::<u32>(), 1..40),
        subset in any::<u32>(),
    ) {
        let mask = (1u32 << universe) - 1;
        let sets: Vec<u32> = raw_sets.into_iter().map(|s| s & mask).collect();
        let fam = FiniteFamily::from_masks(universe, sets).unwrap();
        let subset = subset & mask;
        if fam.shatters(subset).unwrap() {
            for t in 0..universe {
                if subset >> t & 1 == 1 {
                    prop_assert!(fam.shatters(subset & !(1 << t)).unwrap());
                }
            }
        }
    }

    #[test]
    fn two_way_bound_dominates_one_way(
        d in 0u64..10,
        eps in 0.01f64..2.0,
        delta in 0.01f64..0.99,
    ) {
        let two = m_uc(&UCBoundParams::two_way(d, eps, delta)).unwrap();
        let one = m_uc(&UCBoundParams::one_way(d, eps, delta)).unwrap();
        prop_assert!(two >= one);
    }
}

/// Dvoretzky-Kiefer-Wolfowitz: the empirical CDF of a 1e5-draw sample stays
/// inside the band of half-width sqrt(ln(2/alpha) / 2n) with probability
/// 1 - alpha = 0.999; the fixed seed makes this a deterministic check of one
/// draw that the sampler would fail only under gross bias.
#[test]
fn ecdf_within_dkw_band() {
    let mu = Measure1D::mixture(vec![
        (0.5, Measure1D::uniform(0.0, 1.0).unwrap()),
        (0.5, Measure1D::atoms(vec![(0.25, 0.5), (0.75, 0.5)]).unwrap()),
    ])
    .unwrap();
    let n = 100_000usize;
    let mut values = sample(&mu, n, 20_240_817).unwrap().values;
    values.sort_by(f64::total_cmp);
    // Signed one-sided deviations; inside a run of duplicates only the run's
    // last (resp. first) index realizes the ecdf, and the other indices give
    // smaller signed values, so the max over all k is the exact statistic.
    let mut ks: f64 = 0.0;
    for (k, &v) in values.iter().enumerate() {
        ks = ks.max((k + 1) as f64 / n as f64 - mu.cdf(v));
        ks = ks.max(mu.cdf_left(v) - k as f64 / n as f64);
    }
    let band = (f64::ln(2.0 / 0.001) / (2.0 * n as f64)).sqrt();
    assert!(ks <= band, "KS statistic {ks} exceeds DKW band {band}");
}

/// Finite proxy for Hausdorff limits of convex sets: refining a convex
/// polygon's vertex sample toward the full sample can only shrink the
/// Hausdorff distance to it.
#[test]
fn nested_vertex_refinements_converge_monotonically() {
    let n = 256usize;
    let limit: Vec<Point> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point::new(t.cos(), t.sin())
        })
        .collect();
    let limit_cloud = PointCloud::new(limit.clone()).unwrap();
    let mut prev = f64::INFINITY;
    for step in [64usize, 32, 16, 8, 4, 2, 1] {
        let coarse: Vec<Point> = limit.iter().copied().step_by(step).collect();
        let d = hausdorff(&PointCloud::new(coarse).unwrap(), &limit_cloud);
        assert!(d <= prev + 1e-12, "refinement increased distance: {d} > {prev}");
        prev = d;
    }
    assert_eq!(prev, 0.0);
}

/// Distinct labelings of one grid give closures that differ at a
/// representable point (the grid point whose label differs), exhaustively on
/// a 2x2 grid.
#[test]
fn closure_is_injective_on_small_grids() {
    let grid = Grid::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    let mut hyps: Vec<(u32, Hypothesis)> = Vec::new();
    for bits in 0u32..16 {
        let labels: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
        let lab = Labeling::new(grid.clone(), labels).unwrap();
        hyps.push((bits, auxiliary_union(&lab).unwrap()));
    }
    for (i, (bits_i, hi)) in hyps.iter().enumerate() {
        for (bits_j, hj) in &hyps[i + 1..] {
            let witness = (0..4).find(|&k| {
                let p = grid.point(k / 2, k % 2);
                hi.contains(p) != hj.contains(p)
            });
            assert!(
                witness.is_some(),
                "labelings {bits_i:04b} and {bits_j:04b} give indistinguishable closures"
            );
        }
    }
}

/// The hull constructor never grows past the target for convex targets: hull
/// vertices are 1-labeled grid points, and those lie in the target.
#[test]
fn hull_vertices_are_one_labeled_grid_points() {
    let disk = TargetSet::disk(Point::new(0.2, -0.1), 1.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let coords: Vec<f64> = (0..14).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
        let (a, b) = coords.split_at(7);
        let grid = Grid::new(a.to_vec(), b.to_vec()).unwrap();
        let lab = label_grid(&disk, &grid);
        let ones: Vec<Point> = (0..7)
            .flat_map(|i| (0..7).map(move |j| (i, j)))
            .filter(|&(i, j)| lab.label(i, j))
            .map(|(i, j)| grid.point(i, j))
            .collect();
        let hull = convex_hull(&ones);
        for v in hull {
            assert!(ones.contains(&v));
            assert!(disk.contains(v));
        }
    }
}
