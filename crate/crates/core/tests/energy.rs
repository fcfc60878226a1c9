use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubespec::detfun::eigenfunction;
use tubespec::energy::*;
use tubespec::model::{EndCondition, PhysicalParams, ProblemSpec};
use tubespec::roots::{find_spectrum, SearchTarget};

fn random_space(rng: &mut ChaCha8Rng) -> EnergySpace {
    let p = PhysicalParams::new(rng.gen_range(0.05..1.0), rng.gen_range(0.0..0.9), rng.gen_range(0.0..5.0), rng.gen_range(0.0..1.0));
    let mut k = || rng.gen_range(0.1..5.0);
    let e0 = EndCondition::generalized(k(), k(), k(), k());
    let e1 = EndCondition::generalized(k(), k(), k(), k());
    EnergySpace::new(&ProblemSpec::new(p, e0, e1)).unwrap()
}

fn draw(rng: &mut ChaCha8Rng) -> impl FnMut() -> f64 + '_ {
    move || rng.gen_range(-1.0..1.0)
}

#[test]
fn dissipativity_on_random_domain_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = std::time::Instant::now();
    for _ in 0..200 {
        let space = random_space(&mut rng);
        let degree = rng.gen_range(0..=8);
        let x = sample_domain_state(&mut draw(&mut rng), degree).unwrap();
        let d = space.dissipation_identity(&x).unwrap();
        assert!(d.lhs <= 1e-10 * d.scale, "{d:?}");
        assert!((d.lhs - d.rhs).abs() <= 1e-8 * (1.0 + d.rhs.abs()), "{d:?}");
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn dissipation_scales_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let space = random_space(&mut rng);
    let x = sample_domain_state(&mut draw(&mut rng), 6).unwrap();
    let d1 = space.dissipation_identity(&x).unwrap();
    let d2 = space.dissipation_identity(&x.scale(Complex64::from(2.0))).unwrap();
    assert!((d2.lhs - 4.0 * d1.lhs).abs() <= 1e-10 * d1.lhs.abs().max(1.0));
    assert!((d2.rhs - 4.0 * d1.rhs).abs() <= 1e-10 * d1.rhs.abs().max(1.0));
}

#[test]
fn a0_inverse_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let space = random_space(&mut rng);
        let degree = rng.gen_range(0..=8);
        let xt = sample_state(&mut draw(&mut rng), degree).unwrap();
        let x = space.a0_inverse(&xt).unwrap();
        assert!(x.domain_mismatch() < 1e-12);
        let back = space.apply_a0(&x).unwrap();
        let err = space.norm(&back.axpy(Complex64::from(-1.0), &xt), InnerKind::X).unwrap();
        let size = space.norm(&xt, InnerKind::X).unwrap();
        assert!(err <= 1e-8 * size, "{err} {size}");
    }
}

/// Determinant by cofactor expansion along the first row.
fn laplace(m: &[Vec<f64>]) -> f64 {
    if m.len() == 1 {
        return m[0][0];
    }
    (0..m.len())
        .map(|j| {
            let minor: Vec<Vec<f64>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect()).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][j] * laplace(&minor)
        })
        .sum()
}

#[test]
fn inverse_system_is_regular_for_unit_stiffness() {
    let space = EnergySpace::uniform(PhysicalParams::new(0.1, 0.4, 4.0, 0.1), 1.0).unwrap();
    let k = 1.0;
    let rows = vec![
        vec![0.0, -k, 1.0, 0.0],
        vec![k, 0.0, 0.0, 1.0],
        vec![0.0, k, 1.0 + k, 1.0 + k / 2.0],
        vec![-k, -k, -k / 2.0, 1.0 - k / 6.0],
    ];
    let det = laplace(&rows);
    assert!(det.abs() > 1.0);
    assert!((space.inverse_system_matrix().determinant() - det).abs() < 1e-12);
}

#[test]
fn primed_norm_is_equivalent_to_the_plain_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let space = EnergySpace::uniform(PhysicalParams::new(0.3, 0.4, 4.0, 0.1), 1.0).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let x = sample_state(&mut draw(&mut rng), 8).unwrap();
        let q = space.norm(&x, InnerKind::XPrime).unwrap() / space.norm(&x, InnerKind::X).unwrap();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    assert!(lo > 0.0 && hi.is_finite() && lo <= hi);
}

#[test]
fn eigenvectors_satisfy_the_operator_equation() {
    let p = PhysicalParams::new(0.1, 0.4, 4.0, 0.1);
    let end = EndCondition::generalized(1.0, 1.0, 1.0, 1.0);
    let spec = ProblemSpec::new(p, end, end);
    let space = EnergySpace::new(&spec).unwrap();
    let spectrum = find_spectrum(&spec, &SearchTarget::FirstPairs(4)).unwrap();
    assert!(!spectrum.records.is_empty());
    for r in &spectrum.records {
        let mode = eigenfunction(r.lambda, &spec, 33).unwrap();
        let x = space.eigenstate(r.lambda, mode.shape.clone());
        let res = space.eigen_residual(r.lambda, &x).unwrap();
        assert!(res <= 1e-6, "{} {res}", r.lambda);
        let off = r.lambda * 1.01;
        let wrong = space.eigen_residual(off, &space.eigenstate(off, mode.shape.clone())).unwrap();
        assert!(wrong > 1e-4, "{} {wrong}", r.lambda);
    }
}

fn poly_state(c: &[f64]) -> State {
    let (wc, vc) = c.split_at(c.len() / 2);
    State::domain(StateFunction::real_chebyshev(wc).unwrap(), StateFunction::real_chebyshev(vc).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn a0_is_linear(
        c1 in prop::collection::vec(-1.0f64..1.0, 18),
        c2 in prop::collection::vec(-1.0f64..1.0, 18),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let space = EnergySpace::uniform(PhysicalParams::new(0.2, 0.3, 2.0, 0.5), 0.7).unwrap();
        let (x, y) = (poly_state(&c1), poly_state(&c2));
        let combo = x.scale(Complex64::from(a)).axpy(Complex64::from(b), &y);
        let lhs = space.apply_a0(&combo).unwrap();
        let rhs = space.apply_a0(&x).unwrap().scale(Complex64::from(a)).axpy(Complex64::from(b), &space.apply_a0(&y).unwrap());
        let diff = space.norm(&lhs.axpy(Complex64::from(-1.0), &rhs), InnerKind::X).unwrap();
        let size = space.norm(&lhs, InnerKind::X).unwrap().max(space.norm(&rhs, InnerKind::X).unwrap());
        prop_assert!(diff <= 1e-10 * size.max(1e-300));
    }

    #[test]
    fn identity_holds_on_equal_components(c in prop::collection::vec(-1.0f64..1.0, 9)) {
        let space = EnergySpace::uniform(PhysicalParams::new(0.2, 0.3, 2.0, 0.5), 1.3).unwrap();
        let w = StateFunction::real_chebyshev(&c).unwrap();
        let d = space.dissipation_identity(&State::domain(w.clone(), w)).unwrap();
        prop_assert!(d.lhs.abs() <= 1e-10 * d.scale.max(1.0));
        prop_assert!(d.rhs.abs() <= 1e-12);
    }
}
