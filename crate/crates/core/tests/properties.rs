mod common;

use common::*;
use proptest::prelude::*;
use ultrajet::jets::{CompactSet, Germ};
use ultrajet::pou::UniformSumCdf;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadratics_are_reproduced(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, x in -1.9f64..1.9) {
        let f = poly_field(&[c0, c1, c2], 12);
        prop_assume!(f.pou.covered(&[x]));
        let exact = c0 + c1 * x + c2 * x * x;
        prop_assert!((f.value(&[x]).unwrap() - exact).abs() < 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn cdf_is_monotone_between_zero_and_one(radii in proptest::collection::vec(0.01f64..1.0, 1..8), s in -10.0f64..10.0, ds in 0.0f64..0.5) {
        let f = UniformSumCdf::new(&radii).unwrap();
        let (a, b) = (f.eval(s, 0), f.eval(s + ds, 0));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-12);
        let (lo, hi) = f.support();
        prop_assert!((lo + radii.iter().sum::<f64>()).abs() < 1e-12 && (hi - radii.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn germ_product_commutes(a in proptest::collection::vec(-2.0f64..2.0, 10), b in proptest::collection::vec(-2.0f64..2.0, 10)) {
        let g = Germ::from_derivatives(2, 3, &a);
        let h = Germ::from_derivatives(2, 3, &b);
        let (p, q) = (g.mul(&h).derivatives(), h.mul(&g).derivatives());
        for (u, v) in p.iter().zip(&q) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn nearest_point_is_a_minimiser(xs in proptest::collection::vec(-5.0f64..5.0, 2..6), q in -6.0f64..6.0) {
        let mut pts: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        pts.dedup();
        let set = CompactSet::new(pts.clone()).unwrap();
        let i = set.nearest_index(&[q]);
        prop_assert!(pts.iter().all(|p| (p[0] - q).abs() >= (pts[i][0] - q).abs()));
    }
}
