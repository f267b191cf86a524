mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn d_squared_vanishes(a in one_form(), g in expression()) {
        dd_zero(&a, &g)?;
    }

    #[test]
    fn interior_product_is_an_antiderivation(x in field(), a in one_form(), a2 in one_form(), b in one_form(), two in any::<bool>()) {
        antiderivation(&x, &a, &a2, &b, two)?;
    }

    #[test]
    fn lie_bracket_satisfies_jacobi(x in field(), y in field(), z in field()) {
        jacobi(&x, &y, &z)?;
    }

    #[test]
    fn fixture_coframes_are_dual(k in 0usize..5, offsets in prop::collection::vec(-0.2f64..0.2, 4)) {
        let f = &structures()[k];
        duality_at(f, &near_start(f, &offsets))?;
    }

    #[test]
    fn linearized_and_multivector_tests_agree(a in prop::collection::vec(-3i64..=3, 5), b in prop_oneof![Just(0i64), -2i64..=2]) {
        linearized_matches_multivector(&a, b)?;
    }

    #[test]
    fn display_parses_back(e in expression()) {
        round_trip(&e)?;
    }
}
