//! Problem definition: physical parameters, end conditions, the sector
//! constants and the mapping between the eigenvalue parameter `lambda` and
//! its sector representative `rho` (`lambda = alpha * rho^4`).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};

/// The physical quadruple of the tube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Kelvin-Voigt (viscoelastic) damping coefficient.
    pub alpha: f64,
    /// Density ratio parameter.
    pub beta: f64,
    /// Square of the fluid-velocity scale.
    pub eta: f64,
    /// Viscous (air-friction) damping.
    pub delta: f64,
}

impl PhysicalParams {
    pub fn new(alpha: f64, beta: f64, eta: f64, delta: f64) -> Self {
        Self { alpha, beta, eta, delta }
    }

    /// `2 beta sqrt(eta)`, the Coriolis coefficient.
    pub fn coriolis(&self) -> f64 {
        2.0 * self.beta * self.eta.sqrt()
    }
}

/// Condition imposed at one end of the tube.
///
/// For the end at `s = 0` the generalised parameters are `(k01, k02, k03, k04)`,
/// for `s = 1` they are `(k11, k12, k13, k14)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum EndCondition {
    Generalized { ka: f64, kb: f64, kc: f64, kd: f64 },
    Clamped,
    Free,
    Hinged,
    Guided,
}

/// Asymptotic behaviour of an end for large `|lambda|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndClass {
    /// `w = 0, w' = 0`
    ClampedLike,
    /// `w = 0, w'' = 0`
    HingedLike,
    /// `w' = 0, w''' = 0`
    GuidedLike,
    /// `w'' = 0, w''' = 0`
    FreeLike,
}

impl EndClass {
    /// Offset (in units of pi) this end contributes to the large-index
    /// wavenumbers `(n + offset) * pi`.
    pub fn phase_offset(self) -> f64 {
        match self {
            EndClass::ClampedLike | EndClass::FreeLike => 0.25,
            EndClass::HingedLike => 0.0,
            EndClass::GuidedLike => 0.5,
        }
    }
}

impl EndCondition {
    pub fn generalized(ka: f64, kb: f64, kc: f64, kd: f64) -> Self {
        EndCondition::Generalized { ka, kb, kc, kd }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EndCondition::Generalized { .. } => "generalized",
            EndCondition::Clamped => "clamped",
            EndCondition::Free => "free",
            EndCondition::Hinged => "hinged",
            EndCondition::Guided => "guided",
        }
    }

    pub fn class(&self) -> EndClass {
        match *self {
            EndCondition::Clamped => EndClass::ClampedLike,
            EndCondition::Free => EndClass::FreeLike,
            EndCondition::Hinged => EndClass::HingedLike,
            EndCondition::Guided => EndClass::GuidedLike,
            EndCondition::Generalized { kb, kd, .. } => match (kb > 0.0, kd > 0.0) {
                (true, true) => EndClass::ClampedLike,
                (false, true) => EndClass::HingedLike,
                (true, false) => EndClass::GuidedLike,
                (false, false) => EndClass::FreeLike,
            },
        }
    }

    /// `(ka, kb, kc, kd)` for generalised ends.
    pub fn params(&self) -> Option<[f64; 4]> {
        match *self {
            EndCondition::Generalized { ka, kb, kc, kd } => Some([ka, kb, kc, kd]),
            _ => None,
        }
    }
}

/// A complete problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub physical: PhysicalParams,
    pub end0: EndCondition,
    pub end1: EndCondition,
}

impl ProblemSpec {
    pub fn new(physical: PhysicalParams, end0: EndCondition, end1: EndCondition) -> Self {
        Self { physical, end0, end1 }
    }

    /// Checks every parameter range and reports all violations at once.
    pub fn validate(self) -> Result<ProblemSpec> {
        let mut errors = Vec::new();
        let p = &self.physical;
        if !(p.alpha.is_finite() && p.alpha > 0.0) {
            errors.push(ValidationError::NonPositiveAlpha(p.alpha));
        }
        if !(p.beta.is_finite() && (0.0..1.0).contains(&p.beta)) {
            errors.push(ValidationError::BetaOutOfRange(p.beta));
        }
        for (field, value) in [("eta", p.eta), ("delta", p.delta)] {
            if !(value.is_finite() && value >= 0.0) {
                errors.push(ValidationError::NegativeParameter { field: field.into(), value });
            }
        }
        for (end, cond) in [(0, &self.end0), (1, &self.end1)] {
            if let Some(k) = cond.params() {
                for (j, value) in k.iter().enumerate() {
                    if !(value.is_finite() && *value >= 0.0) {
                        errors.push(ValidationError::NegativeParameter {
                            field: format!("k{end}{}", j + 1),
                            value: *value,
                        });
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(errors))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.physical.alpha
    }

    /// Radius of the disk around `-1/alpha` that is never evaluated.
    pub fn exclusion_radius(&self) -> f64 {
        exclusion_radius(self.physical.alpha)
    }

    pub fn is_excluded(&self, lambda: Complex64) -> bool {
        (lambda + 1.0 / self.physical.alpha).norm() < self.exclusion_radius()
    }

    /// Sum of the end phase offsets, reduced modulo one.
    pub fn phase_offset(&self) -> f64 {
        (self.end0.class().phase_offset() + self.end1.class().phase_offset()).fract()
    }
}

pub fn exclusion_radius(alpha: f64) -> f64 {
    1e-6 * (1.0 + 1.0 / alpha)
}

/// The four fourth roots of `-1`, ordered so that `Re(rho w_1) <= ... <= Re(rho w_4)`
/// for `pi/8 <= arg rho <= pi/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorConstants {
    pub omega: [Complex64; 4],
    pub sector_arg_range: (f64, f64),
}

impl SectorConstants {
    pub fn new() -> Self {
        let h = FRAC_1_SQRT_2;
        Self {
            omega: [
                Complex64::new(-h, h),
                Complex64::new(-h, -h),
                Complex64::new(h, h),
                Complex64::new(h, -h),
            ],
            sector_arg_range: (FRAC_PI_8, FRAC_PI_4),
        }
    }

    pub fn contains(&self, rho: Complex64) -> bool {
        let arg = rho.arg();
        arg >= self.sector_arg_range.0 && arg <= self.sector_arg_range.1
    }
}

impl Default for SectorConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// `omega_m` for `m` in `1..=4`.
pub fn omega(m: usize) -> Complex64 {
    SectorConstants::new().omega[m - 1]
}

/// An eigenvalue parameter together with its canonical sector representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    pub rho: Complex64,
}

/// Canonical `rho` with `alpha rho^4 = lambda`: principal fourth root in the
/// closed upper half-plane, conjugate of the upper representative below it.
pub fn canonical_rho(lambda: Complex64, alpha: f64) -> Complex64 {
    let q = lambda / alpha;
    if lambda.im >= 0.0 {
        principal_fourth_root(q)
    } else {
        principal_fourth_root(q.conj()).conj()
    }
}

fn principal_fourth_root(q: Complex64) -> Complex64 {
    if q == Complex64::new(0.0, 0.0) {
        return q;
    }
    Complex64::from_polar(q.norm().powf(0.25), q.arg() / 4.0)
}

pub fn map_lambda_rho(lambda: Complex64, alpha: f64) -> Result<SpectralPoint> {
    if (lambda + 1.0 / alpha).norm() < exclusion_radius(alpha) {
        return Err(Error::ExcludedPoint { lambda });
    }
    Ok(SpectralPoint { lambda, rho: canonical_rho(lambda, alpha) })
}

pub fn rho_to_lambda(rho: Complex64, alpha: f64) -> Complex64 {
    let r2 = rho * rho;
    alpha * r2 * r2
}

/// Coordinates rotated onto the ray `arg rho = pi/4`: `zeta = rho e^{-i pi/4}`,
/// so that `lambda = -alpha zeta^4` and the negative real `lambda` axis is the
/// positive real `zeta` axis.
pub fn zeta_to_lambda(zeta: Complex64, alpha: f64) -> Complex64 {
    let z2 = zeta * zeta;
    -alpha * z2 * z2
}

pub fn rho_to_zeta(rho: Complex64) -> Complex64 {
    rho * Complex64::from_polar(1.0, -FRAC_PI_4)
}

pub fn zeta_to_rho(zeta: Complex64) -> Complex64 {
    zeta * Complex64::from_polar(1.0, FRAC_PI_4)
}

/// Relative distance used throughout for comparing eigenvalues.
pub fn rel_dist(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: num_complex::Complex64, b: num_complex::Complex64, tol: f64) -> bool {
            (a - b).norm() <= tol * (1.0 + b.norm())
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(alpha: f64, beta: f64) -> ProblemSpec {
        let k = EndCondition::generalized(1.0, 1.0, 1.0, 1.0);
        ProblemSpec::new(PhysicalParams::new(alpha, beta, 4.0, 0.1), k, k)
    }

    #[test]
    fn validation_accepts_admissible_spec() {
        assert!(spec(1.0, 0.5).validate().is_ok());
        assert!(spec(1.0, 0.0).validate().is_ok());
    }

    #[test]
    fn validation_reports_each_violation() {
        match spec(0.0, 0.5).validate() {
            Err(Error::Invalid(e)) => assert_eq!(e, vec![ValidationError::NonPositiveAlpha(0.0)]),
            other => panic!("unexpected {other:?}"),
        }
        match spec(1.0, 1.5).validate() {
            Err(Error::Invalid(e)) => assert_eq!(e, vec![ValidationError::BetaOutOfRange(1.5)]),
            other => panic!("unexpected {other:?}"),
        }
        let mut bad = spec(-1.0, 1.0);
        bad.physical.delta = -0.5;
        bad.end1 = EndCondition::generalized(1.0, -2.0, 1.0, 1.0);
        match bad.validate() {
            Err(Error::Invalid(e)) => {
                assert_eq!(e.len(), 4);
                assert!(e.contains(&ValidationError::NegativeParameter { field: "k12".into(), value: -2.0 }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lambda_rho_examples() {
        let p = map_lambda_rho(c(-4.0, 0.0), 1.0).unwrap();
        assert!(close(p.rho, c(1.0, 1.0), 1e-14));
        let p = map_lambda_rho(c(0.0, 4.0), 1.0).unwrap();
        assert!(close(p.rho, c(1.3065629648763766, 0.541196100146197), 1e-14));
        let up = map_lambda_rho(c(-4.0, 1e-300), 1.0).unwrap();
        let down = map_lambda_rho(c(-4.0, -1e-300), 1.0).unwrap();
        assert_eq!(down.rho, up.rho.conj());
    }

    #[test]
    fn excluded_point_is_rejected() {
        let alpha = 0.5;
        assert!(matches!(map_lambda_rho(c(-2.0, 0.0), alpha), Err(Error::ExcludedPoint { .. })));
        assert!(map_lambda_rho(c(-2.0 + 1e-4, 0.0), alpha).is_ok());
    }

    #[test]
    fn omega_identities() {
        let sc = SectorConstants::new();
        for w in sc.omega {
            assert!((w.powu(4) + 1.0).norm() < 1e-15);
        }
        let (w1, w2) = (omega(1), omega(2));
        assert!(close(w1 - w2, c(0.0, 2f64.sqrt()), 1e-15));
        assert!(close(w1 + w2, c(-(2f64.sqrt()), 0.0), 1e-15));
        assert!(close(w1 * w2, c(1.0, 0.0), 1e-15));
        assert!(close(w2 * w2, c(0.0, 1.0), 1e-15));
    }

    #[test]
    fn zeta_frame_maps_positive_axis_to_negative_lambda() {
        let lam = zeta_to_lambda(c(2.0, 0.0), 0.5);
        assert!(close(lam, c(-8.0, 0.0), 1e-14));
        let rho = zeta_to_rho(c(2.0, 0.0));
        assert!(close(rho_to_lambda(rho, 0.5), lam, 1e-14));
        assert!(close(rho_to_zeta(rho), c(2.0, 0.0), 1e-15));
    }

    #[test]
    fn phase_offsets_match_classical_beams() {
        let phys = PhysicalParams::new(1.0, 0.0, 0.0, 0.0);
        let off = |a, b| ProblemSpec::new(phys, a, b).phase_offset();
        use EndCondition::*;
        assert_eq!(off(Clamped, Clamped), 0.5);
        assert_eq!(off(Hinged, Hinged), 0.0);
        assert_eq!(off(Clamped, Free), 0.5);
        assert_eq!(off(Clamped, Guided), 0.75);
        assert_eq!(off(Hinged, Free), 0.25);
        assert_eq!(off(Guided, Guided), 0.0);
        let zero_d = EndCondition::generalized(1.0, 2.0, 1.0, 0.0);
        assert_eq!(off(zero_d, zero_d), 0.0);
    }
}
