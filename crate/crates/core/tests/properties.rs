//! Property tests for the structural invariants: parsers never panic,
//! series diagnostics are monotone, pressure transforms covariantly, and
//! the KMS endpoint rescales like an inverse temperature should.

use std::f64::consts::LN_2;

use proptest::prelude::*;

use shiftthermo::conformal::{construct_fixed, diverging_sequence, verify};
use shiftthermo::dissipativity::dissipativity_test;
use shiftthermo::formats::{parse_graph, parse_potential};
use shiftthermo::graph::GraphModel;
use shiftthermo::kms::{kms_region, Region};
use shiftthermo::oracle::moran_solve;
use shiftthermo::potential::Potential;
use shiftthermo::pressure::{canonical_anchor, gurevich, pressure_of_beta};
use shiftthermo::symbolic::{BasePoint, CylinderFunction, FinitePath};
use shiftthermo::transfer::StopRule;

fn json_value() -> impl Strategy<Value = serde_json::Value> {
    let leaf = prop_oneof![
        Just(serde_json::Value::Null),
        any::<bool>().prop_map(serde_json::Value::from),
        any::<i64>().prop_map(serde_json::Value::from),
        (-1e9f64..1e9).prop_map(serde_json::Value::from),
        "[a-z_]{0,12}".prop_map(serde_json::Value::from),
    ];
    leaf.prop_recursive(3, 24, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(serde_json::Value::from),
            prop::collection::btree_map("[a-z_]{1,10}", inner, 0..6)
                .prop_map(|m| serde_json::Value::Object(m.into_iter().collect())),
        ]
    })
}

proptest! {
    // malformed input must come back as Err, never as a panic or a
    // measure-producing success
    #[test]
    fn graph_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_graph(&text);
    }

    #[test]
    fn graph_parser_survives_arbitrary_json(v in json_value()) {
        let _ = parse_graph(&v.to_string());
    }

    #[test]
    fn potential_parser_survives_arbitrary_json(v in json_value()) {
        let g = GraphModel::ladder();
        let _ = parse_potential(&v.to_string(), &g);
    }

    #[test]
    fn moran_roots_solve_their_equation(
        ts in prop::collection::vec(0.3f64..3.0, 2..5)
    ) {
        let b = moran_solve(&ts).unwrap();
        let total: f64 = ts.iter().map(|t| (-b * t).exp()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10, "sum = {total} at beta = {b}");
    }

    #[test]
    fn path_shift_drops_exactly_one_edge(len in 1usize..6, start in 0i64..3) {
        let g = GraphModel::ladder();
        let mut p = FinitePath::vertex(&g, start).unwrap();
        for _ in 0..len {
            p = p.extensions(&g, 1).into_iter().next().unwrap();
        }
        let s = p.shifted(&g).unwrap();
        prop_assert_eq!(s.len() + 1, p.len());
        prop_assert_eq!(s.edges(), &p.edges()[1..]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // partial sums of a nonnegative series can only go up
    #[test]
    fn series_partial_sums_are_nondecreasing(
        beta in 0.4f64..3.0,
        tu in 0.2f64..1.5,
        td in 0.2f64..1.5,
    ) {
        let g = GraphModel::ladder();
        let phi = Potential::ladder_up_down(tu, td);
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = BasePoint::deterministic(&g, 0).unwrap();
        let report = dissipativity_test(&phi, beta, &g, &f, &[x], 24).unwrap();
        for p in &report.points {
            for w in p.log_partial_sums.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12, "partial sums dipped: {w:?}");
            }
        }
    }

    // P(-beta(phi + c)) = P(-beta phi) - beta c
    #[test]
    fn pressure_is_affine_in_constant_shifts(
        beta in 0.25f64..2.5,
        c in -0.8f64..0.8,
    ) {
        let g = GraphModel::ladder();
        let phi = Potential::constant(LN_2);
        let anchor = canonical_anchor(&g).unwrap();
        let base = gurevich(&phi.scale(-beta), &g, &anchor, 40).unwrap();
        let shifted = gurevich(&phi.affine(1.0, c).scale(-beta), &g, &anchor, 40).unwrap();
        let expected = base.refined - beta * c;
        let slack = (base.hi() - base.lo()) + (shifted.hi() - shifted.lo()) + 1e-9;
        prop_assert!(
            (shifted.refined - expected).abs() <= slack,
            "shifted {} vs expected {expected}", shifted.refined
        );
    }

    // a positive potential makes the pressure curve strictly decreasing
    #[test]
    fn pressure_curve_decreases_for_positive_potentials(
        tu in 0.3f64..1.5,
        td in 0.3f64..1.5,
    ) {
        let g = GraphModel::ladder();
        let phi = Potential::ladder_up_down(tu, td);
        let grid = [0.25, 0.75, 1.25, 1.75];
        let rows = pressure_of_beta(&phi, &g, &grid, 40).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].1.refined < w[0].1.refined);
        }
    }

    // conformal residuals are invariant under rescaling the measure
    #[test]
    fn residuals_ignore_the_measure_normalization(log_c in -3.0f64..3.0) {
        let g = GraphModel::ladder();
        let phi = Potential::constant(LN_2);
        let h = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let seq = diverging_sequence(&g, &h, 8).unwrap();
        let fixed =
            construct_fixed(&phi.scale(-2.0), &g, &h, &seq, &StopRule::default(), 2).unwrap();
        let clean = verify(&fixed.measure, &phi, 2.0, &g, 1).unwrap();
        let mut scaled = fixed.measure.clone();
        scaled.rescale_log(log_c);
        let moved = verify(&scaled, &phi, 2.0, &g, 1).unwrap();
        prop_assert!((clean.max_rel - moved.max_rel).abs() <= 1e-12);
        prop_assert_eq!(clean.checked, moved.checked);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // the KMS endpoint transforms like an inverse temperature:
    // beta0(c*phi) = beta0(phi)/c
    #[test]
    fn kms_endpoint_rescales_with_the_potential(
        c in 0.5f64..3.0,
        tu in 0.4f64..1.2,
    ) {
        let g = GraphModel::ladder();
        let phi = Potential::ladder_up_down(tu, 2.0 * tu);
        let base = kms_region(&phi, &g, 1e-4, 48).unwrap();
        let scaled = kms_region(&phi.scale(c), &g, 1e-4, 48).unwrap();
        let (Region::HalfLine { beta0: b, err: e }, Region::HalfLine { beta0: bc, err: ec }) =
            (&base.region, &scaled.region)
        else {
            return Err(TestCaseError::fail("expected half-lines on the ladder"));
        };
        prop_assert!(
            (bc - b / c).abs() <= e / c + ec + 1e-9,
            "beta0({c}*phi) = {bc} vs {b}/{c}"
        );
    }
}
