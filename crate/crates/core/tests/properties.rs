use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use tdho::classical::ClassicalBasis;
use tdho::models::{OscillatorModel, Units};
use tdho::states::{hermite, StateSpec, WavefunctionField};
use tdho::transforms::{hnew_coefficients, unit_mass_gauge, GridSpec, PrimitiveTransform};
use tdho::verify::{covering_grid, norm, relative_l2};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hermite_parity(n in 0usize..30, x in -6.0f64..6.0) {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let (a, b) = (hermite(n, x), sign * hermite(n, -x));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn sho_states_stay_normalised(c in 0.5f64..3.0, n in 0usize..7, t in -1.0f64..10.0) {
        let f = WavefunctionField::sho(1.0, c, n, Units::default()).unwrap();
        let grid = covering_grid(&[&f], t, 4096).unwrap();
        let g = f.sample(grid, t).unwrap();
        prop_assert!((norm(&g).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sho_density_repeats_every_half_period(c in 0.5f64..3.0, n in 0usize..6, t in 0.0f64..6.0, x in -4.0f64..4.0) {
        let f = WavefunctionField::sho(1.0, c, n, Units::default()).unwrap();
        let a = f.eval(x, t).unwrap().norm_sqr();
        let b = f.eval(x, t + std::f64::consts::PI).unwrap().norm_sqr();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ck_closed_form_matches_general(
        gamma in 0.05f64..1.5,
        c in 0.5f64..2.5,
        n in 0usize..6,
        t in 0.0f64..8.0,
        x in -3.0f64..3.0,
    ) {
        let model = OscillatorModel::caldirola_kanai(1.0, gamma, 1.0, 0.0, 10.0).unwrap();
        let basis = ClassicalBasis::analytic_ck(1.0, gamma, 1.0, c, 1.0).unwrap();
        let spec = StateSpec::new(n, Units::default(), basis, None, model).unwrap();
        let general = WavefunctionField::General(spec);
        let closed = WavefunctionField::ck(1.0, gamma, 1.0, c, n, 1.0).unwrap();
        // Same branch at t = 0, so no global phase to remove.
        let d = closed.eval(x, t).unwrap() - general.eval(x, t).unwrap();
        prop_assert!(d.norm() < 1e-9);
    }

    #[test]
    fn primitive_inverse_round_trip(
        a in -0.7f64..0.7,
        alpha in -1.0f64..1.0,
        k in -3.0f64..3.0,
        d in -1.5f64..1.5,
        which in 0usize..4,
    ) {
        let op = [
            PrimitiveTransform::Dilation { a },
            PrimitiveTransform::QuadraticPhase { alpha },
            PrimitiveTransform::LinearPhase { k },
            PrimitiveTransform::Translation { d },
        ][which];
        let f = WavefunctionField::sho(1.0, 1.3, 2, Units::default()).unwrap();
        let grid = GridSpec::covering(-30.0, 30.0, 4096).unwrap();
        let g = f.sample(grid, 0.4).unwrap();
        let back = op.inverse().apply(&op.apply(&g).unwrap()).unwrap();
        prop_assert!(relative_l2(&back, &g).unwrap() < 1e-12);
    }

    #[test]
    fn unit_mass_gauge_removes_cross_term(gamma in 0.0f64..1.0, w1 in 0.5f64..2.0, t in 0.0f64..5.0) {
        let model = OscillatorModel::caldirola_kanai(1.0, gamma, w1, 0.0, 10.0).unwrap();
        let (alpha, dalpha, beta, dbeta) = unit_mass_gauge(&model, t, 1.0).unwrap();
        let h = hnew_coefficients(&model, t, alpha, beta, dalpha, dbeta).unwrap();
        assert_abs_diff_eq!(h.kinetic, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.cross, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.potential, w1 * w1 - gamma * gamma / 4.0, epsilon = 1e-10);
    }
}
