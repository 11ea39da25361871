use std::collections::BTreeMap;

use hexblur::hexgrid::SQRT_3;
use hexblur::{
    apply_blur, apply_blur_with_threads, axial_to_cartesian, build_stencil, gaussian_weight,
    AxialCoord, BinGrid, BlurParams, HexLayout, KernelStencil, NormalizationMode,
};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

/// O(B²·S) reference: for every candidate target and every source bin, look
/// for a stencil entry matching their difference.
fn naive_blur(grid: &BinGrid, stencil: &KernelStencil) -> BTreeMap<AxialCoord, f64> {
    let mut targets = BTreeMap::new();
    for (src, _) in grid.iter() {
        for e in stencil.entries() {
            targets.insert(*src + e.offset, 0.0);
        }
    }
    for (t, acc) in targets.iter_mut() {
        for (src, agg) in grid.iter() {
            for e in stencil.entries() {
                if *src + e.offset == *t {
                    *acc += agg.total_weight * e.weight;
                }
            }
        }
    }
    targets.retain(|_, v| *v != 0.0);
    targets
}

fn random_grid(rng: &mut StdRng, bins: usize, spread: i64) -> BinGrid {
    let weights: Vec<_> = (0..bins)
        .map(|_| {
            (
                AxialCoord::new(rng.random_range(-spread..=spread), rng.random_range(-spread..=spread)),
                rng.random_range(0.01..100.0),
            )
        })
        .collect();
    let mut merged: BTreeMap<AxialCoord, f64> = BTreeMap::new();
    for (a, w) in weights {
        *merged.entry(a).or_default() += w;
    }
    BinGrid::from_weights(HexLayout::default(), merged)
}

fn cr(sx: f64, sy: f64, eps: f64) -> BlurParams {
    BlurParams::with_options(sx, sy, eps, NormalizationMode::CenterRelative).unwrap()
}

#[test]
fn mass_preserving_matches_naive_reference() {
    let mut rng = StdRng::seed_from_u64(42);
    let grid = random_grid(&mut rng, 200, 15);
    let stencil = build_stencil(BlurParams::new(1.3, 0.8).unwrap()).unwrap();
    let fast = apply_blur(&grid, &stencil).unwrap();
    let slow = naive_blur(&grid, &stencil);
    assert_eq!(fast.len(), slow.len());
    for (a, v) in &slow {
        assert!((fast.value(*a) - v).abs() <= 1e-12 * v.abs().max(1.0), "{a}");
    }
    let (tin, tout) = (grid.total_weight(), fast.total_weight());
    assert!((tin - tout).abs() <= 1e-9 * tin);
}

#[test]
fn looser_epsilon_is_a_superset() {
    let tight = build_stencil(cr(2.0, 1.0, 1e-3)).unwrap();
    let loose = build_stencil(cr(2.0, 1.0, 1e-6)).unwrap();
    assert!(loose.len() > tight.len());
    for e in tight.entries() {
        assert_eq!(loose.weight(e.offset), Some(e.weight));
    }
    // Every retained weight clears the threshold and every dropped one does not.
    for e in loose.entries() {
        assert_eq!(tight.weight(e.offset).is_some(), e.weight >= 1e-3);
    }
}

#[test]
fn stencil_is_reflection_symmetric() {
    for &(sx, sy) in &[(2.0, 1.0), (4.0, 2.0), (0.7, 3.1)] {
        let s = build_stencil(cr(sx, sy, 1e-4)).unwrap();
        let by_pos: Vec<(f64, f64, f64)> =
            s.entries().iter().map(|e| (e.dx, e.dy, e.weight)).collect();
        for &(dx, dy, w) in &by_pos {
            for (mx, my) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                let mirrored = by_pos
                    .iter()
                    .find(|(x, y, _)| (x - mx * dx).abs() < 1e-9 && (y - my * dy).abs() < 1e-9)
                    .expect("mirror image present");
                assert!((mirrored.2 - w).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn every_entry_clears_epsilon_and_nothing_is_missed() {
    let p = cr(2.5, 1.5, 1e-3);
    let s = build_stencil(p).unwrap();
    assert_eq!(s.weight(AxialCoord::ORIGIN), Some(1.0));
    // exhaustive scan of a generous patch
    let mut expected = 0;
    for q in -30..=30 {
        for r in -30..=30 {
            let c = axial_to_cartesian(AxialCoord::new(q, r));
            if gaussian_weight(c.x, c.y, &p) >= p.epsilon {
                expected += 1;
            }
        }
    }
    assert_eq!(s.len(), expected);
}

#[test]
fn thread_count_does_not_change_bits() {
    let mut rng = StdRng::seed_from_u64(3);
    let grid = random_grid(&mut rng, 400, 25);
    let stencil = build_stencil(BlurParams::new(2.0, 1.0).unwrap()).unwrap();
    let one = apply_blur_with_threads(&grid, &stencil, 1).unwrap();
    let four = apply_blur_with_threads(&grid, &stencil, 4).unwrap();
    let again = apply_blur_with_threads(&grid, &stencil, 4).unwrap();
    assert_eq!(one, four);
    assert_eq!(four, again);
}

#[test]
fn wider_sigma_spreads_more_along_its_axis() {
    let p = cr(2.0, 1.0, 1e-3);
    for d in [0.5, 1.0, SQRT_3, 3.0] {
        assert!(gaussian_weight(d, 0.0, &p) >= gaussian_weight(0.0, d, &p));
    }
}

fn grid_strategy() -> impl Strategy<Value = BTreeMap<AxialCoord, f64>> {
    prop::collection::btree_map((-8i64..8, -8i64..8).prop_map(|(q, r)| AxialCoord::new(q, r)), 0.1f64..10.0, 0..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn blur_is_linear(a in grid_strategy(), b in grid_strategy()) {
        let stencil = build_stencil(BlurParams::new(1.5, 0.9).unwrap()).unwrap();
        let mut sum = a.clone();
        for (k, v) in &b {
            *sum.entry(*k).or_default() += v;
        }
        let l = HexLayout::default();
        let ga = apply_blur(&BinGrid::from_weights(l, a), &stencil).unwrap();
        let gb = apply_blur(&BinGrid::from_weights(l, b), &stencil).unwrap();
        let gs = apply_blur(&BinGrid::from_weights(l, sum), &stencil).unwrap();
        for (k, agg) in gs.iter() {
            let parts = ga.value(*k) + gb.value(*k);
            prop_assert!((agg.total_weight - parts).abs() <= 1e-12 * parts.max(1.0));
        }
    }

    #[test]
    fn blur_commutes_with_lattice_shift(g in grid_strategy(), tq in -20i64..20, tr in -20i64..20) {
        let stencil = build_stencil(cr(1.1, 2.2, 1e-3)).unwrap();
        let t = AxialCoord::new(tq, tr);
        let l = HexLayout::default();
        let shifted: BTreeMap<_, _> = g.iter().map(|(k, v)| (*k + t, *v)).collect();
        let a = apply_blur(&BinGrid::from_weights(l, shifted), &stencil).unwrap();
        let b = apply_blur(&BinGrid::from_weights(l, g), &stencil).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (k, agg) in b.iter() {
            prop_assert!((a.value(*k + t) - agg.total_weight).abs() <= 1e-12 * agg.total_weight.max(1.0));
        }
    }

    #[test]
    fn mass_is_conserved(g in grid_strategy(), sx in 0.2f64..4.0, sy in 0.2f64..4.0) {
        let stencil = build_stencil(BlurParams::new(sx, sy).unwrap()).unwrap();
        let grid = BinGrid::from_weights(HexLayout::default(), g);
        let out = apply_blur(&grid, &stencil).unwrap();
        let (tin, tout) = (grid.total_weight(), out.total_weight());
        prop_assert!((tin - tout).abs() <= 1e-9 * tin.max(1e-300));
    }

    #[test]
    fn weight_is_separable(dx in -20f64..20.0, dy in -20f64..20.0, sx in 0.1f64..10.0, sy in 0.1f64..10.0) {
        let p = cr(sx, sy, 1e-3);
        prop_assert_eq!(gaussian_weight(dx, dy, &p), gaussian_weight(dx, 0.0, &p) * gaussian_weight(0.0, dy, &p));
    }
}
