//! Property tests for the region algebra and the evaluation metrics.

use dpls_sad::evaluate::err_metric;
use dpls_sad::lattice::{
    intrinsic_diameter, region_distance, symmetric_difference, GridSpec, Point, Region,
};
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::square(9)
}

fn arb_region(max_pts: usize) -> impl Strategy<Value = Region> {
    prop::collection::vec((1..=9i32, 1..=9i32), 1..=max_pts).prop_map(|coords| {
        Region::new(
            grid(),
            coords.iter().map(|&(x, y)| Point::new(&[x, y])).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn symmetric_difference_is_a_metric(a in arb_region(10), b in arb_region(10), c in arb_region(10)) {
        let dab = symmetric_difference(&a, &b).unwrap();
        let dba = symmetric_difference(&b, &a).unwrap();
        prop_assert_eq!(dab, dba);
        prop_assert_eq!(symmetric_difference(&a, &a).unwrap(), 0);
        prop_assert_eq!(dab == 0, a == b);
        let dac = symmetric_difference(&a, &c).unwrap();
        let dcb = symmetric_difference(&c, &b).unwrap();
        prop_assert!(dab <= dac + dcb, "triangle inequality: {} > {} + {}", dab, dac, dcb);
    }

    #[test]
    fn distances_match_exhaustive_pairs(a in arb_region(12), b in arb_region(12)) {
        let fast = region_distance(&a, &b).unwrap();
        let mut slow = f64::INFINITY;
        for p in a.points() {
            for q in b.points() {
                let d: f64 = p
                    .coords()
                    .iter()
                    .zip(q.coords())
                    .map(|(&x, &y)| ((x - y) as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
                slow = slow.min(d);
            }
        }
        prop_assert!((fast - slow).abs() < 1e-12);

        let diam = intrinsic_diameter(&a).unwrap();
        let mut slow_diam = 0f64;
        for p in a.points() {
            for q in a.points() {
                let d: f64 = p
                    .coords()
                    .iter()
                    .zip(q.coords())
                    .map(|(&x, &y)| ((x - y) as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
                slow_diam = slow_diam.max(d);
            }
        }
        prop_assert!((diam - slow_diam).abs() < 1e-12);
    }

    #[test]
    fn err_metric_properties(
        truth in prop::collection::vec(arb_region(6), 1..4),
        est in prop::collection::vec(arb_region(6), 0..4),
        perm_seed in 0u64..1000,
    ) {
        // Identity and empty-estimate conventions.
        prop_assert_eq!(err_metric(&truth, &truth).unwrap(), 0.0);
        prop_assert_eq!(err_metric(&truth, &[]).unwrap(), 1.0);

        // Permutation invariance of both lists.
        let base = err_metric(&truth, &est).unwrap();
        let mut t2 = truth.clone();
        let mut e2 = est.clone();
        let k = truth.len();
        t2.rotate_left((perm_seed as usize) % k);
        if !e2.is_empty() {
            let ke = e2.len();
            e2.rotate_left((perm_seed as usize) % ke);
            e2.reverse();
        }
        prop_assert_eq!(err_metric(&t2, &e2).unwrap(), base);
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn err_zero_iff_equal_region_sets(truth in prop::collection::vec(arb_region(6), 1..4)) {
        // Shuffled copy of the truth scores exactly zero.
        let mut est = truth.clone();
        est.reverse();
        prop_assert_eq!(err_metric(&truth, &est).unwrap(), 0.0);

        // Perturbing one region makes it strictly positive unless the
        // perturbed region coincides with another truth region.
        let mut bumped = truth.clone();
        let extra = Region::new(grid(), vec![Point::new(&[9, 9]), Point::new(&[1, 1])]).unwrap();
        let target = bumped[0].union(&extra).unwrap();
        if !truth.iter().any(|t| t == &target) && target != bumped[0] {
            bumped[0] = target;
            prop_assert!(err_metric(&truth, &bumped).unwrap() > 0.0);
        }
    }

    #[test]
    fn union_minus_intersection_identity(a in arb_region(10), b in arb_region(10)) {
        // |A u B| - |A n B| == D(A, B)
        let u = a.union(&b).unwrap().len();
        let i = a.intersection(&b).unwrap().len();
        prop_assert_eq!(u - i, symmetric_difference(&a, &b).unwrap());
    }
}
