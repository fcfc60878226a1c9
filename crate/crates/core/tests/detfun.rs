use std::f64::consts::PI;

use num_complex::Complex64;
use tubespec::detfun::{char_det, char_det_derivative, eigenfunction};
use tubespec::model::{rel_dist, EndCondition, PhysicalParams, ProblemSpec};
use tubespec::roots::{find_spectrum, SearchTarget};

fn spec(end0: EndCondition, end1: EndCondition) -> ProblemSpec {
    ProblemSpec::new(PhysicalParams::new(0.1, 0.4, 4.0, 0.1), end0, end1)
}

fn upper(spec: &ProblemSpec, n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> =
        find_spectrum(spec, &SearchTarget::FirstPairs(n)).unwrap().records.iter().map(|r| r.lambda).filter(|l| l.im >= 0.0).collect();
    v.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    v.truncate(n);
    v
}

#[test]
fn clamped_modes_vanish_with_their_slope() {
    let s = spec(EndCondition::Clamped, EndCondition::Clamped);
    for l in upper(&s, 4) {
        let mode = eigenfunction(l, &s, 65).unwrap();
        for end in [0.0, 1.0] {
            let d = mode.shape.derivs(end);
            assert!(d[0].norm() <= 1e-6 && d[1].norm() <= 1e-6, "{l} {d:?}");
        }
        assert!(mode.w_values.iter().map(|w| w.norm()).fold(0.0, f64::max) > 0.999);
    }
}

#[test]
fn hinged_beam_modes_are_sines() {
    let s = ProblemSpec::new(PhysicalParams::new(1e-5, 0.0, 0.0, 0.0), EndCondition::Hinged, EndCondition::Hinged);
    for (k, l) in upper(&s, 3).into_iter().enumerate() {
        let mode = eigenfunction(l, &s, 101).unwrap();
        let sine: Vec<f64> = mode.grid.iter().map(|x| ((k + 1) as f64 * PI * x).sin()).collect();
        let dot: Complex64 = mode.w_values.iter().zip(&sine).map(|(w, s)| w * s).sum();
        let nw = mode.w_values.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        let ns = sine.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!(dot.norm() / (nw * ns) >= 0.999, "mode {k}: {l}");
    }
}

#[test]
fn conjugate_eigenvalue_gives_conjugate_mode() {
    let s = spec(EndCondition::generalized(1.0, 2.0, 0.5, 1.0), EndCondition::Free);
    for l in upper(&s, 3) {
        let a = eigenfunction(l, &s, 33).unwrap();
        let b = eigenfunction(l.conj(), &s, 33).unwrap();
        // Both are normalised to a unit largest sample, so only a unimodular factor remains.
        let k = a.w_values.iter().zip(&b.w_values).max_by(|x, y| x.0.norm().total_cmp(&y.0.norm())).map(|(x, y)| y.conj() / x).unwrap();
        for (x, y) in a.w_values.iter().zip(&b.w_values) {
            assert!((y.conj() - k * x).norm() <= 1e-6, "{l}");
        }
    }
}

#[test]
fn determinant_satisfies_cauchy_riemann() {
    let s = spec(EndCondition::generalized(1.0, 1.0, 1.0, 1.0), EndCondition::Clamped);
    for z in [Complex64::new(3.0, 2.0), Complex64::new(-40.0, 15.0), Complex64::new(-700.0, 90.0), Complex64::new(50.0, -20.0)] {
        let h = 1e-4 * (1.0 + z.norm());
        let reference = char_det(z, &s).unwrap();
        let f = |w: Complex64| char_det(w, &s).unwrap().in_scale_of(&reference);
        let fx = (f(z + h) - f(z - h)) / (2.0 * h);
        let fy = (f(z + Complex64::new(0.0, h)) - f(z - Complex64::new(0.0, h))) / (2.0 * h);
        let res = (fy - Complex64::i() * fx).norm() / (fx.norm() + fy.norm());
        assert!(res <= 1e-6, "{z} {res}");
        let d = char_det_derivative(z, &s).unwrap();
        assert!(d.is_finite());
    }
}

#[test]
fn determinant_is_conjugate_symmetric() {
    let s = spec(EndCondition::Hinged, EndCondition::generalized(2.0, 1.0, 3.0, 0.5));
    for z in [Complex64::new(2.0, 5.0), Complex64::new(-120.0, 40.0)] {
        let a = char_det(z, &s).unwrap();
        let b = char_det(z.conj(), &s).unwrap();
        assert!((a.log_abs() - b.log_abs()).abs() <= 1e-9 * (1.0 + a.log_abs().abs()));
    }
}

#[test]
fn stiff_rotation_and_deflection_springs_recover_clamped_roots() {
    let stiff = EndCondition::generalized(1.0, 1e8, 1.0, 1e8);
    let a = upper(&spec(stiff, stiff), 10);
    let b = upper(&spec(EndCondition::Clamped, EndCondition::Clamped), 10);
    assert_eq!(a.len(), 10);
    for (x, y) in a.iter().zip(&b) {
        assert!(rel_dist(*x, *y) <= 1e-3, "{x} {y}");
    }
}
