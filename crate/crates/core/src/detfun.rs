//! Boundary forms, the characteristic determinant and mode shapes.
//!
//! The determinant is that of the boundary forms applied to the fundamental
//! system normalised at `s = 0` (`y_k^{(j)}(0) = delta_jk`). This function is
//! analytic in `lambda` away from `-1/alpha` and independent of how the
//! characteristic exponents are labelled. Two evaluation routes are used:
//!
//! * exponential: boundary forms applied to anchored exponentials
//!   `mu^j e^{mu (s - sigma)}`, divided by the Vandermonde determinant of the
//!   exponents. Overflow-free for any `|lambda|`.
//! * transfer: boundary forms at `s = 1` composed with the matrix exponential
//!   of the companion system. Used when the exponents are small or nearly
//!   coincide, where the Vandermonde division loses accuracy.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charbasis::{characteristic_roots, quartic_coeffs, FundamentalBasis, QuarticCoeffs};
use crate::error::{Error, Result};
use crate::model::{EndCondition, ProblemSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(coeffs0 + lambda coeffs1) . (w, w', w'', w''')` evaluated at `endpoint`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryForm {
    pub endpoint: usize,
    pub coeffs0: [Complex64; 4],
    pub coeffs1: [Complex64; 4],
}

impl BoundaryForm {
    fn real(endpoint: usize, c0: [f64; 4], c1: [f64; 4]) -> Self {
        Self { endpoint, coeffs0: c0.map(Complex64::from), coeffs1: c1.map(Complex64::from) }
    }

    pub fn at(&self, lambda: Complex64) -> [Complex64; 4] {
        [0, 1, 2, 3].map(|j| self.coeffs0[j] + lambda * self.coeffs1[j])
    }

    pub fn apply(&self, lambda: Complex64, derivs: &[Complex64; 4]) -> Complex64 {
        self.at(lambda).iter().zip(derivs).map(|(c, d)| c * d).sum()
    }
}

fn end_forms(end: &EndCondition, endpoint: usize) -> [BoundaryForm; 2] {
    let z = [0.0; 4];
    // The sign pattern flips between the ends: at s = 0 the forms read
    // w'' - (k1 + lambda k2) w' and w''' + (k3 + lambda k4) w, at s = 1 they read
    // w'' + (k1 + lambda k2) w' and w''' - (k3 + lambda k4) w.
    let sign = if endpoint == 0 { 1.0 } else { -1.0 };
    match *end {
        EndCondition::Generalized { ka, kb, kc, kd } => [
            BoundaryForm::real(endpoint, [0.0, -sign * ka, 1.0, 0.0], [0.0, -sign * kb, 0.0, 0.0]),
            BoundaryForm::real(endpoint, [sign * kc, 0.0, 0.0, 1.0], [sign * kd, 0.0, 0.0, 0.0]),
        ],
        EndCondition::Clamped => [
            BoundaryForm::real(endpoint, [1.0, 0.0, 0.0, 0.0], z),
            BoundaryForm::real(endpoint, [0.0, 1.0, 0.0, 0.0], z),
        ],
        EndCondition::Free => [
            BoundaryForm::real(endpoint, [0.0, 0.0, 1.0, 0.0], z),
            BoundaryForm::real(endpoint, [0.0, 0.0, 0.0, 1.0], z),
        ],
        EndCondition::Hinged => [
            BoundaryForm::real(endpoint, [1.0, 0.0, 0.0, 0.0], z),
            BoundaryForm::real(endpoint, [0.0, 0.0, 1.0, 0.0], z),
        ],
        EndCondition::Guided => [
            BoundaryForm::real(endpoint, [0.0, 1.0, 0.0, 0.0], z),
            BoundaryForm::real(endpoint, [0.0, 0.0, 0.0, 1.0], z),
        ],
    }
}

/// The four boundary forms, two per end. They are affine in `lambda`, so the
/// argument only documents the evaluation point.
pub fn boundary_rows(_lambda: Complex64, spec: &ProblemSpec) -> [BoundaryForm; 4] {
    let [a, b] = end_forms(&spec.end0, 0);
    let [c, d] = end_forms(&spec.end1, 1);
    [a, b, c, d]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetRoute {
    Exponential,
    Transfer,
}

/// Scaled characteristic determinant: the true value is
/// `value * exp(logscale + i phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharDetValue {
    pub value: Complex64,
    pub logscale: f64,
    pub phase: f64,
    /// Product of the row norms of the scaled matrix (Hadamard bound on `|value|`).
    pub scale: f64,
    pub route: DetRoute,
    /// Set when the exponents were confluent and the value comes from a
    /// slightly shifted `lambda`.
    pub perturbed: bool,
}

impl CharDetValue {
    /// `|value| / scale`, in `[0, 1]`.
    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.norm() / self.scale
        } else {
            0.0
        }
    }

    /// Argument of the true determinant (not reduced).
    pub fn arg(&self) -> f64 {
        self.value.arg() + self.phase
    }

    pub fn log_abs(&self) -> f64 {
        self.value.norm().ln() + self.logscale
    }

    /// Value expressed in the scale of `reference`, i.e. `Delta / exp(L_ref)`.
    pub fn in_scale_of(&self, reference: &CharDetValue) -> Complex64 {
        let shift = Complex64::new(self.logscale - reference.logscale, self.phase - reference.phase);
        self.value * shift.exp()
    }
}

/// Exponents at most this large are always handled by the transfer route.
const TRANSFER_SMALL: f64 = 3.0;
/// Near-confluent exponents use the transfer route while `max |Re mu|` stays below this.
const TRANSFER_GROWTH_CAP: f64 = 8.0;
const PERTURB_RETRIES: usize = 3;

fn near_confluent(b: &FundamentalBasis) -> bool {
    b.separation() < 1e-2 * (1.0 + b.magnitude())
}

fn max_growth(b: &FundamentalBasis) -> f64 {
    b.mu.iter().map(|m| m.re.abs()).fold(0.0, f64::max)
}

fn choose_route(b: &FundamentalBasis) -> Option<DetRoute> {
    if b.magnitude() <= TRANSFER_SMALL || (near_confluent(b) && max_growth(b) <= TRANSFER_GROWTH_CAP) {
        Some(DetRoute::Transfer)
    } else if b.confluent {
        None
    } else {
        Some(DetRoute::Exponential)
    }
}

/// Companion matrix of `w'''' = -a2 w'' - a1 w' - a0 w` acting on `(w, w', w'', w''')`.
pub fn companion(q: &QuarticCoeffs) -> Matrix4<Complex64> {
    #[rustfmt::skip]
    let m = Matrix4::new(
        ZERO, ONE, ZERO, ZERO,
        ZERO, ZERO, ONE, ZERO,
        ZERO, ZERO, ZERO, ONE,
        -q.a0, -q.a1, -q.a2, ZERO,
    );
    m
}

/// Raw boundary matrix for one route, before row normalisation, plus the
/// complex log of the factor that turns its determinant into the canonical one.
struct Assembled {
    matrix: Matrix4<Complex64>,
    log_factor: Complex64,
    route: DetRoute,
    basis: FundamentalBasis,
}

fn assemble(lambda: Complex64, spec: &ProblemSpec, route: DetRoute, q: &QuarticCoeffs, basis: FundamentalBasis) -> Assembled {
    let forms = boundary_rows(lambda, spec);
    let mut matrix = Matrix4::zeros();
    match route {
        DetRoute::Exponential => {
            let mu = basis.mu;
            for (i, form) in forms.iter().enumerate() {
                let f = form.at(lambda);
                let s = form.endpoint as f64;
                for m in 0..4 {
                    let e = (mu[m] * (s - basis.anchor[m])).exp();
                    let poly = ((f[3] * mu[m] + f[2]) * mu[m] + f[1]) * mu[m] + f[0];
                    matrix[(i, m)] = poly * e;
                }
            }
            let mut log_factor: Complex64 = (0..4).map(|m| mu[m] * basis.anchor[m]).sum();
            for i in 0..4 {
                for j in i + 1..4 {
                    log_factor -= (mu[j] - mu[i]).ln();
                }
            }
            Assembled { matrix, log_factor, route, basis }
        }
        DetRoute::Transfer => {
            let prop = companion(q).exp();
            for (i, form) in forms.iter().enumerate() {
                let f = Vector4::from(form.at(lambda));
                let row = if form.endpoint == 0 { f.transpose() } else { f.transpose() * prop };
                matrix.set_row(i, &row);
            }
            Assembled { matrix, log_factor: ZERO, route, basis }
        }
    }
}

fn normalise_rows(m: &mut Matrix4<Complex64>) -> f64 {
    let mut log_r = 0.0;
    for i in 0..4 {
        let r = m.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if r > 0.0 && r.is_finite() {
            m.row_mut(i).unscale_mut(r);
            log_r += r.ln();
        }
    }
    log_r
}

fn hadamard(m: &Matrix4<Complex64>) -> f64 {
    (0..4).map(|i| m.row(i).norm()).product()
}

struct Prepared {
    lambda: Complex64,
    q: QuarticCoeffs,
    basis: FundamentalBasis,
    route: DetRoute,
    perturbed: bool,
}

fn prepare(lambda: Complex64, spec: &ProblemSpec) -> Result<Prepared> {
    let p = &spec.physical;
    let mut at = lambda;
    let direction = Complex64::from_polar(1.0, std::f64::consts::PI / 7.0);
    let mut last_sep = 0.0;
    for attempt in 0..=PERTURB_RETRIES {
        let q = quartic_coeffs(at, p)?;
        let basis = characteristic_roots(&q)?;
        if let Some(route) = choose_route(&basis) {
            return Ok(Prepared { lambda: at, q, basis, route, perturbed: attempt > 0 });
        }
        last_sep = basis.separation();
        at = lambda + direction * (1e-8 * (1.0 + lambda.norm()) * (attempt + 1) as f64);
    }
    Err(Error::ConfluentBasis { separation: last_sep })
}

/// Characteristic determinant at `lambda`.
pub fn char_det(lambda: Complex64, spec: &ProblemSpec) -> Result<CharDetValue> {
    let prep = prepare(lambda, spec)?;
    let mut asm = assemble(prep.lambda, spec, prep.route, &prep.q, prep.basis);
    let log_r = normalise_rows(&mut asm.matrix);
    let value = asm.matrix.lu().determinant();
    let phase = asm.log_factor.im.rem_euclid(std::f64::consts::TAU);
    Ok(CharDetValue {
        value,
        logscale: asm.log_factor.re + log_r,
        phase,
        scale: hadamard(&asm.matrix),
        route: asm.route,
        perturbed: prep.perturbed,
    })
}

/// Central-difference derivative of `lambda' -> Delta(lambda') / exp(L(lambda))`,
/// the determinant expressed in the scale of its value at `lambda`; the
/// Newton step is therefore `char_det(lambda).value / char_det_derivative(lambda)`.
pub fn char_det_derivative(lambda: Complex64, spec: &ProblemSpec) -> Result<Complex64> {
    let h = 1e-6 * (1.0 + lambda.norm());
    derivative_with_step(lambda, spec, h)
}

pub fn derivative_with_step(lambda: Complex64, spec: &ProblemSpec, h: f64) -> Result<Complex64> {
    let centre = char_det(lambda, spec)?;
    let plus = char_det(lambda + h, spec)?;
    let minus = char_det(lambda - h, spec)?;
    Ok((plus.in_scale_of(&centre) - minus.in_scale_of(&centre)) / (2.0 * h))
}

/// Representation of a mode shape `w` able to return `(w, w', w'', w''')` anywhere.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeShape {
    /// `w(s) = sum_m a_m exp(mu_m (s - sigma_m))`.
    Exponential { mu: [Complex64; 4], anchor: [f64; 4], a: [Complex64; 4] },
    /// `(w, w', w'', w''')(s) = exp(C s) a`.
    Transfer { companion: Matrix4<Complex64>, a: [Complex64; 4] },
}

impl ModeShape {
    pub fn derivs(&self, s: f64) -> [Complex64; 4] {
        match self {
            ModeShape::Exponential { mu, anchor, a } => {
                let mut out = [ZERO; 4];
                for m in 0..4 {
                    let mut term = a[m] * (mu[m] * (s - anchor[m])).exp();
                    for slot in out.iter_mut() {
                        *slot += term;
                        term *= mu[m];
                    }
                }
                out
            }
            ModeShape::Transfer { companion, a } => {
                let state = (companion * Complex64::from(s)).exp() * Vector4::from(*a);
                [state[0], state[1], state[2], state[3]]
            }
        }
    }

    pub fn value(&self, s: f64) -> Complex64 {
        self.derivs(s)[0]
    }

    fn scaled(self, factor: Complex64) -> Self {
        match self {
            ModeShape::Exponential { mu, anchor, a } => ModeShape::Exponential { mu, anchor, a: a.map(|x| x * factor) },
            ModeShape::Transfer { companion, a } => ModeShape::Transfer { companion, a: a.map(|x| x * factor) },
        }
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        match self {
            ModeShape::Exponential { a, .. } | ModeShape::Transfer { a, .. } => *a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionSample {
    pub lambda: Complex64,
    pub a: [Complex64; 4],
    pub grid: Vec<f64>,
    pub w_values: Vec<Complex64>,
    /// Smallest over largest singular value of the normalised boundary matrix.
    pub residual: f64,
    /// Boundary forms applied to the normalised mode shape.
    pub bc_residuals: [Complex64; 4],
    pub shape: ModeShape,
}

pub const EIGENFUNCTION_RESIDUAL_MAX: f64 = 1e-6;

/// Null direction of the boundary matrix at `lambda_star`, sampled on a
/// uniform grid and normalised so that the largest sample equals one.
pub fn eigenfunction(lambda_star: Complex64, spec: &ProblemSpec, grid_size: usize) -> Result<EigenfunctionSample> {
    let prep = prepare(lambda_star, spec)?;
    let mut asm = assemble(prep.lambda, spec, prep.route, &prep.q, prep.basis);
    normalise_rows(&mut asm.matrix);
    let svd = asm.matrix.svd(false, true);
    let sv = svd.singular_values;
    let (kmin, smin) = sv.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, s)| (k, *s)).unwrap();
    let smax = sv.max();
    let residual = if smax > 0.0 { smin / smax } else { 0.0 };
    if residual > EIGENFUNCTION_RESIDUAL_MAX {
        return Err(Error::NotAnEigenvalue { lambda: lambda_star, residual });
    }
    let v_t = svd.v_t.expect("right singular vectors requested");
    let null = v_t.row(kmin).adjoint();
    let a = [null[0], null[1], null[2], null[3]];
    let shape = match asm.route {
        DetRoute::Exponential => ModeShape::Exponential { mu: asm.basis.mu, anchor: asm.basis.anchor, a },
        DetRoute::Transfer => ModeShape::Transfer { companion: companion(&prep.q), a },
    };
    let n = grid_size.max(2);
    let grid: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let raw: Vec<Complex64> = grid.iter().map(|&s| shape.value(s)).collect();
    let peak = raw.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap_or(ONE);
    let factor = if peak.norm() > 0.0 { 1.0 / peak } else { ONE };
    let shape = shape.scaled(factor);
    let w_values = raw.iter().map(|w| w * factor).collect();
    let forms = boundary_rows(lambda_star, spec);
    let bc_residuals = forms.map(|f| f.apply(lambda_star, &shape.derivs(f.endpoint as f64)));
    Ok(EigenfunctionSample { lambda: lambda_star, a: shape.coefficients(), grid, w_values, residual, bc_residuals, shape })
}
