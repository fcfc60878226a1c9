use num_complex::Complex64;
use proptest::prelude::*;
use tubespec::charbasis::{basis_eval, characteristic_roots, quartic_coeffs};
use tubespec::model::*;

fn lambda_strategy() -> impl Strategy<Value = Complex64> {
    (-1e4f64..1e4, -1e4f64..1e4).prop_map(|(re, im)| Complex64::new(re, im))
}

fn physical_strategy() -> impl Strategy<Value = PhysicalParams> {
    (0.01f64..2.0, 0.0f64..0.99, 0.0f64..10.0, 0.0f64..5.0).prop_map(|(a, b, e, d)| PhysicalParams::new(a, b, e, d))
}

#[test]
fn omegas_are_the_fourth_roots_of_minus_one() {
    for m in 1..=4 {
        let w = omega(m);
        assert!((w.powu(4) + 1.0).norm() < 1e-15);
    }
    let sum: Complex64 = (1..=4).map(omega).sum();
    assert!(sum.norm() < 1e-15);
}

#[test]
fn negative_axis_maps_to_the_diagonal() {
    let rho = canonical_rho(Complex64::new(-16.0, 0.0), 1.0);
    assert!((rho - Complex64::from_polar(2.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-14);
}

#[test]
fn excluded_point_is_rejected() {
    assert!(map_lambda_rho(Complex64::new(-10.0, 0.0), 0.1).is_err());
    assert!(map_lambda_rho(Complex64::new(-10.0, 1e-3), 0.1).is_ok());
    let spec = ProblemSpec::new(PhysicalParams::new(0.1, 0.4, 4.0, 0.1), EndCondition::Clamped, EndCondition::Clamped);
    assert!(spec.is_excluded(Complex64::new(-10.0, 0.0)));
}

#[test]
fn validation_reports_every_violation() {
    let spec = ProblemSpec::new(PhysicalParams::new(-1.0, 1.5, -2.0, 0.0), EndCondition::generalized(1.0, -1.0, 1.0, 1.0), EndCondition::Free);
    match spec.validate() {
        Err(tubespec::Error::Invalid(errors)) => assert_eq!(errors.len(), 4),
        other => panic!("{other:?}"),
    }
    let ok = ProblemSpec::new(PhysicalParams::new(0.1, 0.0, 0.0, 0.0), EndCondition::generalized(0.0, 0.0, 0.0, 0.0), EndCondition::Hinged);
    assert!(ok.validate().is_ok());
}

#[test]
fn phase_offsets_add_modulo_one() {
    let p = PhysicalParams::new(0.1, 0.4, 4.0, 0.1);
    assert_eq!(ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped).phase_offset(), 0.5);
    let g0 = EndCondition::generalized(1.0, 1.0, 1.0, 0.0);
    assert_eq!(ProblemSpec::new(p, g0, g0).phase_offset(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_rho_round_trips(l in lambda_strategy(), alpha in 0.01f64..2.0) {
        let rho = canonical_rho(l, alpha);
        prop_assert!((rho_to_lambda(rho, alpha) - l).norm() <= 1e-12 * (1.0 + l.norm()));
        let arg = rho.arg();
        prop_assert!(arg.abs() <= std::f64::consts::FRAC_PI_4 + 1e-15);
        prop_assert!(arg * l.im >= 0.0);
    }

    #[test]
    fn canonical_rho_commutes_with_conjugation(l in lambda_strategy(), alpha in 0.01f64..2.0) {
        prop_assume!(l.im != 0.0);
        prop_assert!((canonical_rho(l.conj(), alpha) - canonical_rho(l, alpha).conj()).norm() <= 1e-13 * (1.0 + l.norm()));
    }

    #[test]
    fn zeta_coordinates_agree(rho in (-30f64..30.0, -30f64..30.0), alpha in 0.01f64..2.0) {
        let rho = Complex64::new(rho.0, rho.1);
        let zeta = rho_to_zeta(rho);
        prop_assert!((zeta_to_rho(zeta) - rho).norm() <= 1e-13 * (1.0 + rho.norm()));
        let a = zeta_to_lambda(zeta, alpha);
        prop_assert!((a - rho_to_lambda(rho, alpha)).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn exponents_solve_the_quartic(l in lambda_strategy(), p in physical_strategy()) {
        prop_assume!(!ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped).is_excluded(l));
        let q = quartic_coeffs(l, &p).unwrap();
        let b = characteristic_roots(&q).unwrap();
        let sum: Complex64 = b.mu.iter().sum();
        prop_assert!(sum.norm() <= 1e-9 * (1.0 + b.magnitude()));
        for mu in b.mu {
            prop_assert!(q.eval(mu).norm() <= 1e-10 * q.term_scale(mu));
        }
    }

    #[test]
    fn conjugate_lambda_gives_conjugate_exponents(l in lambda_strategy(), p in physical_strategy()) {
        prop_assume!(!ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped).is_excluded(l));
        let a = characteristic_roots(&quartic_coeffs(l, &p).unwrap()).unwrap();
        let b = characteristic_roots(&quartic_coeffs(l.conj(), &p).unwrap()).unwrap();
        for mu in a.mu {
            let best = b.mu.iter().map(|m| (m.conj() - mu).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best <= 1e-9 * (1.0 + a.magnitude()));
        }
    }

    #[test]
    fn basis_columns_are_derivative_chains(l in lambda_strategy(), p in physical_strategy(), s in 0.0f64..1.0) {
        prop_assume!(!ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped).is_excluded(l));
        let b = characteristic_roots(&quartic_coeffs(l, &p).unwrap()).unwrap();
        prop_assume!(!b.confluent);
        let e = basis_eval(&b, s).unwrap();
        for m in 0..4 {
            for j in 1..4 {
                let want = e.values[(j - 1, m)] * b.mu[m];
                prop_assert!((e.values[(j, m)] - want).norm() <= 1e-12 * (1.0 + want.norm()));
            }
        }
    }
}
