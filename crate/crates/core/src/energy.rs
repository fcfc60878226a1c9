//! Energy structure of the state space `W2^2 x L2 x C^4`: the two inner
//! products, the operators `A0` and `A1`, the dissipation identity and the
//! explicit inverse of `A0`.
//!
//! Functions on `[0, 1]` are Chebyshev series in `x = 2s - 1`, optionally
//! plus weighted derivatives of mode shapes from [`crate::detfun`], so that
//! eigenvectors can be fed through the same operators.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detfun::ModeShape;
use crate::error::{Error, Result};
use crate::model::{EndCondition, PhysicalParams, ProblemSpec};

/// Largest Chebyshev degree a [`StateFunction`] may carry.
pub const DEGREE_BUDGET: usize = 64;
/// Tolerance of the domain condition `z = Gamma v`, relative to `max(1, |Gamma v|)`.
pub const DOMAIN_TOL: f64 = 1e-8;
/// Quadrature intervals used once a mode shape is involved.
pub const MODE_QUADRATURE: usize = 512;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `weight * d^shift/ds^shift` of a mode shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTerm {
    pub weight: Complex64,
    pub shift: usize,
    pub shape: ModeShape,
}

impl ModeTerm {
    fn derivative(&self, s: f64, order: usize) -> Complex64 {
        self.weight * shape_derivative(&self.shape, s, order + self.shift)
    }
}

/// Derivative of any order of a mode shape.
pub fn shape_derivative(shape: &ModeShape, s: f64, order: usize) -> Complex64 {
    match shape {
        ModeShape::Exponential { mu, anchor, a } => (0..4).map(|m| a[m] * mu[m].powu(order as u32) * (mu[m] * (s - anchor[m])).exp()).sum(),
        ModeShape::Transfer { companion, a } => {
            let mut state = (companion * Complex64::from(s)).exp() * Vector4::from(*a);
            for _ in 0..order {
                state = companion * state;
            }
            state[0]
        }
    }
}

/// A function on `[0, 1]`: Chebyshev coefficients plus mode terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateFunction {
    pub coeffs: Vec<Complex64>,
    pub modes: Vec<ModeTerm>,
}

impl StateFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn chebyshev(coeffs: Vec<Complex64>) -> Result<Self> {
        let f = Self { coeffs, modes: Vec::new() };
        f.check_budget()?;
        Ok(f)
    }

    pub fn real_chebyshev(coeffs: &[f64]) -> Result<Self> {
        Self::chebyshev(coeffs.iter().map(|c| Complex64::from(*c)).collect())
    }

    /// The monomial expansion `sum_k c_k s^k`, converted to Chebyshev form.
    pub fn monomial(c: &[f64]) -> Result<Self> {
        // s = (1 + x)/2; accumulate by Horner's rule in Chebyshev arithmetic.
        let mut acc: Vec<Complex64> = Vec::new();
        for &ck in c.iter().rev() {
            acc = times_s(&acc);
            if acc.is_empty() {
                acc.push(ZERO);
            }
            acc[0] += ck;
        }
        Self::chebyshev(acc)
    }

    pub fn mode(shape: ModeShape) -> Self {
        Self { coeffs: Vec::new(), modes: vec![ModeTerm { weight: Complex64::new(1.0, 0.0), shift: 0, shape }] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_polynomial(&self) -> bool {
        self.modes.is_empty()
    }

    fn check_budget(&self) -> Result<()> {
        if self.degree() > DEGREE_BUDGET {
            return Err(Error::DegreeOverflow { degree: self.degree(), budget: DEGREE_BUDGET });
        }
        Ok(())
    }

    /// `d^order f / ds^order` at `s`.
    pub fn eval(&self, s: f64, order: usize) -> Complex64 {
        let d = cheb_derivative(&self.coeffs, order);
        clenshaw(&d, 2.0 * s - 1.0) + self.modes.iter().map(|m| m.derivative(s, order)).sum::<Complex64>()
    }

    pub fn derivative(&self, order: usize) -> Self {
        Self {
            coeffs: cheb_derivative(&self.coeffs, order),
            modes: self.modes.iter().map(|m| ModeTerm { shift: m.shift + order, ..m.clone() }).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            modes: self.modes.iter().map(|m| ModeTerm { weight: m.weight * c, ..m.clone() }).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(ZERO) + c * other.coeffs.get(k).copied().unwrap_or(ZERO))
            .collect();
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().map(|m| ModeTerm { weight: m.weight * c, ..m.clone() }));
        Self { coeffs, modes }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `(f'(0), f(0), f'(1), f(1))`.
    pub fn gamma(&self) -> [Complex64; 4] {
        [self.eval(0.0, 1), self.eval(0.0, 0), self.eval(1.0, 1), self.eval(1.0, 0)]
    }
}

/// Value of a Chebyshev series at `x` in `[-1, 1]`.
fn clenshaw(c: &[Complex64], x: f64) -> Complex64 {
    let (mut b1, mut b2) = (ZERO, ZERO);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + b1 * (2.0 * x) - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(ZERO) + b1 * x - b2
}

/// Coefficients of the `order`-th derivative in `s`.
fn cheb_derivative(c: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut cur = c.to_vec();
    for _ in 0..order {
        let n = cur.len();
        if n <= 1 {
            return Vec::new();
        }
        let mut d = vec![ZERO; n - 1];
        for k in (1..n).rev() {
            let next = if k + 1 < n - 1 { d[k + 1] } else { ZERO };
            d[k - 1] = next + cur[k] * (2.0 * k as f64);
        }
        d[0] *= 0.5;
        // d/ds = 2 d/dx
        cur = d.into_iter().map(|x| x * 2.0).collect();
    }
    cur
}

/// Antiderivative in `s` vanishing at `s = 0`.
fn cheb_integral(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    let at = |k: usize| c.get(k).copied().unwrap_or(ZERO);
    let mut b = vec![ZERO; n + 1];
    for k in 1..=n {
        let prev = if k == 1 { at(0) * 2.0 } else { at(k - 1) };
        b[k] = (prev - at(k + 1)) / (2.0 * k as f64) * 0.5;
    }
    b[0] = -b.iter().enumerate().skip(1).map(|(k, bk)| if k % 2 == 0 { *bk } else { -*bk }).sum::<Complex64>();
    b
}

/// Multiplies a Chebyshev series by `s = (1 + x)/2`.
fn times_s(c: &[Complex64]) -> Vec<Complex64> {
    if c.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; c.len() + 1];
    for (k, ck) in c.iter().enumerate() {
        out[k] += ck * 0.5;
        // x T_k = (T_{k+1} + T_{|k-1|}) / 2
        if k == 0 {
            out[1] += ck * 0.5;
        } else {
            out[k + 1] += ck * 0.25;
            out[k - 1] += ck * 0.25;
        }
    }
    out
}

/// Clenshaw-Curtis nodes and weights on `[0, 1]` with `n` intervals (`n` even).
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(2) + n % 2;
    let pi = std::f64::consts::PI;
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let theta = k as f64 * pi / n as f64;
        let mut sum = 0.0;
        for j in 1..=n / 2 {
            let b = if j == n / 2 { 1.0 } else { 2.0 };
            sum += b / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
        }
        let c = if k == 0 || k == n { 1.0 } else { 2.0 };
        nodes.push(0.5 * (1.0 - theta.cos()));
        weights.push(0.5 * c / n as f64 * (1.0 - sum));
    }
    (nodes, weights)
}

/// An element `(w, v, z)` of the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub w: StateFunction,
    pub v: StateFunction,
    pub z: [Complex64; 4],
}

impl State {
    /// The domain element with `z = Gamma v`.
    pub fn domain(w: StateFunction, v: StateFunction) -> Self {
        let z = v.gamma();
        Self { w, v, z }
    }

    pub fn zero() -> Self {
        Self { w: StateFunction::zero(), v: StateFunction::zero(), z: [ZERO; 4] }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { w: self.w.scale(c), v: self.v.scale(c), z: self.z.map(|x| x * c) }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &Self) -> Self {
        let mut z = self.z;
        for (zi, oi) in z.iter_mut().zip(other.z) {
            *zi += c * oi;
        }
        Self { w: self.w.axpy(c, &other.w), v: self.v.axpy(c, &other.v), z }
    }

    /// `max |z - Gamma v|`.
    pub fn domain_mismatch(&self) -> f64 {
        self.v.gamma().iter().zip(self.z).map(|(g, z)| (g - z).norm()).fold(0.0, f64::max)
    }

    fn check_domain(&self) -> Result<()> {
        let mismatch = self.domain_mismatch();
        let scale = self.v.gamma().iter().map(|g| g.norm()).fold(1.0, f64::max);
        if mismatch.is_nan() || mismatch > DOMAIN_TOL * scale {
            return Err(Error::DomainViolation { mismatch });
        }
        Ok(())
    }

    fn polynomial(&self) -> bool {
        self.w.is_polynomial() && self.v.is_polynomial()
    }

    fn max_degree(&self) -> usize {
        self.w.degree().max(self.v.degree())
    }
}

/// A domain state with complex Chebyshev coefficients of degree `degree`
/// for `w` and `v`, each drawn from `next` (expected uniform in `[-1, 1]`).
pub fn sample_domain_state(next: &mut dyn FnMut() -> f64, degree: usize) -> Result<State> {
    let mut draw = || -> Result<StateFunction> {
        StateFunction::chebyshev((0..=degree).map(|_| Complex64::new(next(), next())).collect())
    };
    let w = draw()?;
    let v = draw()?;
    Ok(State::domain(w, v))
}

/// An arbitrary state (`z` unconstrained), drawn like [`sample_domain_state`].
pub fn sample_state(next: &mut dyn FnMut() -> f64, degree: usize) -> Result<State> {
    let mut x = sample_domain_state(next, degree)?;
    x.z = std::array::from_fn(|_| Complex64::new(next(), next()));
    Ok(x)
}

/// `M = diag(k02, k04, k12, k14)`, the remaining boundary stiffnesses and `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub m_diag: [f64; 4],
    /// `(k01, k03, k11, k13)`
    pub boundary_k: [f64; 4],
    pub alpha: f64,
}

impl EnergyWeights {
    /// Weights of a spec whose ends are both generalised with `k02, k04, k12, k14 > 0`.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let spec = spec.validate()?;
        let (Some([k01, k02, k03, k04]), Some([k11, k12, k13, k14])) = (spec.end0.params(), spec.end1.params()) else {
            return Err(Error::DegenerateWeights);
        };
        let m_diag = [k02, k04, k12, k14];
        if m_diag.iter().any(|k| *k <= 0.0) {
            return Err(Error::DegenerateWeights);
        }
        Ok(Self { m_diag, boundary_k: [k01, k03, k11, k13], alpha: spec.physical.alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerKind {
    /// `(w, w~)_2 + (v, v~)_0 + alpha (M z, z~)`
    X,
    /// `alpha^2 (w, w~)_2 + (v - w, v~ - w~)_0 + alpha (M (z - Gamma w), z~ - Gamma w~)`
    XPrime,
    /// `(w, w~)_2`, with its four boundary terms.
    W2Part,
    /// `(v, v~)_0`
    L2Part,
    /// `(M z, z~)`
    ZPart,
}

/// Both sides of the dissipation identity for `2 Re <A0 x, x>'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationCheck {
    /// Computed from `A0 x` and the primed inner product.
    pub lhs: f64,
    /// The closed form in `v - w`.
    pub rhs: f64,
    /// `|x|' |A0 x|'`, bounding `|lhs| / 2`.
    pub scale: f64,
}

/// The state space of one problem: weights plus the physical quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySpace {
    pub weights: EnergyWeights,
    pub physical: PhysicalParams,
}

impl EnergySpace {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        Ok(Self { weights: EnergyWeights::from_spec(spec)?, physical: spec.physical })
    }

    /// Generalised ends with all eight stiffnesses equal to `k`.
    pub fn uniform(physical: PhysicalParams, k: f64) -> Result<Self> {
        let end = EndCondition::generalized(k, k, k, k);
        Self::new(&ProblemSpec::new(physical, end, end))
    }

    fn quadrature(&self, a: &StateFunction, b: &StateFunction) -> (Vec<f64>, Vec<f64>) {
        let n = if a.is_polynomial() && b.is_polynomial() { 2 * a.degree().max(b.degree()) + 4 } else { MODE_QUADRATURE };
        clenshaw_curtis(n)
    }

    fn l2(&self, f: &StateFunction, g: &StateFunction, order: usize) -> Complex64 {
        let (nodes, weights) = self.quadrature(f, g);
        nodes.iter().zip(&weights).map(|(s, q)| f.eval(*s, order) * g.eval(*s, order).conj() * *q).sum()
    }

    /// `(w, w~)_2`
    pub fn w2(&self, f: &StateFunction, g: &StateFunction) -> Complex64 {
        let [k01, k03, k11, k13] = self.weights.boundary_k;
        let mut sum = self.l2(f, g, 2);
        for (s, kv, kd) in [(0.0, k03, k01), (1.0, k13, k11)] {
            sum += kv * f.eval(s, 0) * g.eval(s, 0).conj() + kd * f.eval(s, 1) * g.eval(s, 1).conj();
        }
        sum
    }

    /// `(M z, z~)`
    pub fn zprod(&self, z: &[Complex64; 4], zt: &[Complex64; 4]) -> Complex64 {
        (0..4).map(|i| self.weights.m_diag[i] * z[i] * zt[i].conj()).sum()
    }

    pub fn inner_product(&self, x: &State, xt: &State, kind: InnerKind) -> Result<Complex64> {
        for f in [&x.w, &x.v, &xt.w, &xt.v] {
            f.check_budget()?;
        }
        let alpha = self.weights.alpha;
        Ok(match kind {
            InnerKind::X => self.w2(&x.w, &xt.w) + self.l2(&x.v, &xt.v, 0) + alpha * self.zprod(&x.z, &xt.z),
            InnerKind::XPrime => {
                let (gw, gwt) = (x.w.gamma(), xt.w.gamma());
                let d = std::array::from_fn(|i| x.z[i] - gw[i]);
                let dt = std::array::from_fn(|i| xt.z[i] - gwt[i]);
                alpha * alpha * self.w2(&x.w, &xt.w) + self.l2(&x.v.sub(&x.w), &xt.v.sub(&xt.w), 0) + alpha * self.zprod(&d, &dt)
            }
            InnerKind::W2Part => self.w2(&x.w, &xt.w),
            InnerKind::L2Part => self.l2(&x.v, &xt.v, 0),
            InnerKind::ZPart => self.zprod(&x.z, &xt.z),
        })
    }

    pub fn norm(&self, x: &State, kind: InnerKind) -> Result<f64> {
        Ok(self.inner_product(x, x, kind)?.re.max(0.0).sqrt())
    }

    /// `Lambda v = M^{-1} (v''(0) - k01 v'(0), -v'''(0) - k03 v(0), -v''(1) - k11 v'(1), v'''(1) - k13 v(1))`.
    pub fn lambda_op(&self, v: &StateFunction) -> [Complex64; 4] {
        let [k01, k03, k11, k13] = self.weights.boundary_k;
        let m = self.weights.m_diag;
        [
            (v.eval(0.0, 2) - k01 * v.eval(0.0, 1)) / m[0],
            (-v.eval(0.0, 3) - k03 * v.eval(0.0, 0)) / m[1],
            (-v.eval(1.0, 2) - k11 * v.eval(1.0, 1)) / m[2],
            (v.eval(1.0, 3) - k13 * v.eval(1.0, 0)) / m[3],
        ]
    }

    /// `A0 x = ((v - w)/alpha, -alpha v'''' - ((alpha delta - 1)/alpha)(v - w), Lambda v)`.
    pub fn apply_a0(&self, x: &State) -> Result<State> {
        x.check_domain()?;
        let (alpha, delta) = (self.weights.alpha, self.physical.delta);
        let u = x.v.sub(&x.w);
        let w = u.scale(Complex64::from(1.0 / alpha));
        let v = x.v.derivative(4).scale(Complex64::from(-alpha)).axpy(Complex64::from(-(alpha * delta - 1.0) / alpha), &u);
        Ok(State { w, v, z: self.lambda_op(&x.v) })
    }

    /// `A1 x = (0, -alpha eta w'' - 2 beta sqrt(eta) (v' - w'), 0)`.
    pub fn apply_a1(&self, x: &State) -> State {
        let p = &self.physical;
        let v = x.w.derivative(2).scale(Complex64::from(-p.alpha * p.eta)).axpy(Complex64::from(-p.coriolis()), &x.v.sub(&x.w).derivative(1));
        State { w: StateFunction::zero(), v, z: [ZERO; 4] }
    }

    /// `(A0 + A1) x`.
    pub fn apply_a(&self, x: &State) -> Result<State> {
        Ok(self.apply_a0(x)?.axpy(Complex64::new(1.0, 0.0), &self.apply_a1(x)))
    }

    pub fn dissipation_identity(&self, x: &State) -> Result<DissipationCheck> {
        let ax = self.apply_a0(x)?;
        let lhs = 2.0 * self.inner_product(&ax, x, InnerKind::XPrime)?.re;
        let scale = self.norm(x, InnerKind::XPrime)? * self.norm(&ax, InnerKind::XPrime)?;
        let (alpha, delta) = (self.weights.alpha, self.physical.delta);
        let [k02, k04, k12, k14] = self.weights.m_diag;
        let [k01, k03, k11, k13] = self.weights.boundary_k;
        let u = x.v.sub(&x.w);
        let mut rhs = -2.0 * alpha * self.l2(&u, &u, 2).re - 2.0 * delta * self.l2(&u, &u, 0).re;
        rhs -= 2.0 * (k04 + alpha * k03) * u.eval(0.0, 0).norm_sqr();
        rhs -= 2.0 * (k02 + alpha * k01) * u.eval(0.0, 1).norm_sqr();
        rhs -= 2.0 * (k14 + alpha * k13) * u.eval(1.0, 0).norm_sqr();
        rhs -= 2.0 * (k12 + alpha * k11) * u.eval(1.0, 1).norm_sqr();
        Ok(DissipationCheck { lhs, rhs, scale })
    }

    /// Coefficient matrix of the boundary system for `(v(0), v'(0), v''(0), v'''(0))`.
    pub fn inverse_system_matrix(&self) -> Matrix4<f64> {
        let [k01, k03, k11, k13] = self.weights.boundary_k;
        Matrix4::new(
            0.0, -k01, 1.0, 0.0, //
            k03, 0.0, 0.0, 1.0, //
            0.0, k11, 1.0 + k11, 1.0 + k11 / 2.0, //
            -k13, -k13, -k13 / 2.0, 1.0 - k13 / 6.0,
        )
    }

    /// Solves `A0 x = x~`: `v'''' = f~` with the four boundary equations,
    /// then `w = -alpha w~ + v` and `z = Gamma v`.
    pub fn a0_inverse(&self, xt: &State) -> Result<State> {
        if !xt.polynomial() {
            return Err(Error::NonPolynomialData);
        }
        if xt.max_degree() + 4 > DEGREE_BUDGET {
            return Err(Error::DegreeOverflow { degree: xt.max_degree() + 4, budget: DEGREE_BUDGET });
        }
        let (alpha, delta) = (self.weights.alpha, self.physical.delta);
        let [k02, k04, k12, k14] = self.weights.m_diag;
        let [_, _, k11, k13] = self.weights.boundary_k;
        let f = xt.w.scale(Complex64::from(-(alpha * delta - 1.0) / alpha)).axpy(Complex64::from(-1.0 / alpha), &xt.v);
        // F = fourth antiderivative with F = F' = F'' = F''' = 0 at s = 0, so
        // F'''(1) = int f, F''(1) = int (1-r) f, F'(1) = int (1-r)^2/2 f, F(1) = int (1-r)^3/6 f.
        let mut big_f = f.coeffs.clone();
        for _ in 0..4 {
            big_f = cheb_integral(&big_f);
        }
        let big_f = StateFunction { coeffs: big_f, modes: Vec::new() };
        let (i0, i1, i2, i3) = (big_f.eval(1.0, 3), big_f.eval(1.0, 2), big_f.eval(1.0, 1), big_f.eval(1.0, 0));
        let rhs = Vector4::new(
            k02 * xt.z[0],
            -k04 * xt.z[1],
            -k12 * xt.z[2] - i1 - k11 * i2,
            k14 * xt.z[3] - i0 + k13 * i3,
        );
        let m = self.inverse_system_matrix();
        let det = m.determinant();
        let lu = m.map(Complex64::from).lu();
        let sol = lu.solve(&rhs).filter(|s| s.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        let Some(sol) = sol.filter(|_| det.abs() > 1e-14 * m.norm().powi(4)) else {
            return Err(Error::SingularSystem { det });
        };
        let cubic = [sol[0], sol[1], sol[2] / 2.0, sol[3] / 6.0];
        let mut cubic_cheb = StateFunction::monomial(&[0.0; 0])?;
        for (k, c) in cubic.iter().enumerate() {
            let mut mono = vec![0.0; k + 1];
            mono[k] = 1.0;
            cubic_cheb = cubic_cheb.axpy(*c, &StateFunction::monomial(&mono)?);
        }
        let v = cubic_cheb.axpy(Complex64::new(1.0, 0.0), &big_f);
        v.check_budget()?;
        let w = v.axpy(Complex64::from(-alpha), &xt.w);
        Ok(State::domain(w, v))
    }

    /// `(w, (1 + alpha lambda) w, Gamma v)` for a mode shape `w`.
    pub fn eigenstate(&self, lambda: Complex64, shape: ModeShape) -> State {
        let w = StateFunction::mode(shape);
        let v = w.scale(1.0 + self.weights.alpha * lambda);
        State::domain(w, v)
    }

    /// `|(A0 + A1) x - lambda x|_X / |x|_X`.
    pub fn eigen_residual(&self, lambda: Complex64, x: &State) -> Result<f64> {
        let r = self.apply_a(x)?.axpy(-lambda, x);
        Ok(self.norm(&r, InnerKind::X)? / self.norm(x, InnerKind::X)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::from(re)
    }

    #[test]
    fn chebyshev_calculus_on_monomials() {
        let f = StateFunction::monomial(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        for s in [0.0, 0.3, 1.0] {
            assert!((f.eval(s, 0) - (1.0 - 2.0 * s + 0.5 * s * s + 3.0 * s.powi(3))).norm() < 1e-14);
            assert!((f.eval(s, 1) - (-2.0 + s + 9.0 * s * s)).norm() < 1e-13);
            assert!((f.eval(s, 3) - 18.0).norm() < 1e-12);
        }
        assert!(f.eval(0.4, 4).norm() < 1e-12);
        let g = StateFunction { coeffs: cheb_integral(&f.coeffs), modes: Vec::new() };
        assert!(g.eval(0.0, 0).norm() < 1e-15);
        assert!((g.eval(1.0, 0) - (1.0 - 1.0 + 0.5 / 3.0 + 0.75)).norm() < 1e-14);
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials_exactly() {
        let (nodes, weights) = clenshaw_curtis(10);
        for k in 0..=10 {
            let got: f64 = nodes.iter().zip(&weights).map(|(s, w)| s.powi(k) * w).sum();
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "{k}");
        }
    }

    #[test]
    fn w2_product_of_s_squared() {
        let space = EnergySpace::uniform(PhysicalParams::new(0.5, 0.1, 1.0, 0.2), 1.0).unwrap();
        let w = StateFunction::monomial(&[0.0, 0.0, 1.0]).unwrap();
        assert!((space.w2(&w, &w) - 9.0).norm() < 1e-13);
    }

    #[test]
    fn primed_product_reduces_when_v_equals_w() {
        let space = EnergySpace::uniform(PhysicalParams::new(0.3, 0.1, 1.0, 0.2), 1.0).unwrap();
        let w = StateFunction::monomial(&[0.2, 1.0, -0.4, 0.7]).unwrap();
        let x = State::domain(w.clone(), w.clone());
        let lhs = space.inner_product(&x, &x, InnerKind::XPrime).unwrap();
        assert!((lhs - 0.09 * space.w2(&w, &w)).norm() < 1e-13);
        let a0 = space.apply_a0(&x).unwrap();
        assert!(a0.w.coeffs.iter().all(|c| c.norm() < 1e-15));
        let d = space.dissipation_identity(&x).unwrap();
        assert!(d.lhs.abs() < 1e-12 && d.rhs.abs() < 1e-12);
    }

    #[test]
    fn a0_on_a_cubic_velocity() {
        let (alpha, delta) = (0.25, 0.3);
        let end = EndCondition::generalized(1.0, 2.0, 3.0, 4.0);
        let space = EnergySpace::new(&ProblemSpec::new(PhysicalParams::new(alpha, 0.0, 0.0, delta), end, end)).unwrap();
        let v = StateFunction::monomial(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        let y = space.apply_a0(&State::domain(StateFunction::zero(), v)).unwrap();
        let k = -(alpha * delta - 1.0) / alpha;
        assert!((y.v.eval(0.6, 0) - k * 0.216).norm() < 1e-13);
        // v''(0) = 0, v'''(0) = 6, v''(1) = 6, v'''(1) = 6, v'(1) = 3, v(1) = 1
        let want = [c(0.0), c(-6.0 / 4.0), c((-6.0 - 3.0) / 2.0), c((6.0 - 3.0) / 4.0)];
        for (g, w) in y.z.iter().zip(want) {
            assert!((g - w).norm() < 1e-12, "{g} {w}");
        }
    }

    #[test]
    fn a1_vanishes_without_flow() {
        let space = EnergySpace::uniform(PhysicalParams::new(0.3, 0.4, 0.0, 0.2), 1.0).unwrap();
        let w = StateFunction::monomial(&[0.2, 1.0, -0.4, 0.7]).unwrap();
        let v = StateFunction::monomial(&[1.0, 0.0, 2.0]).unwrap();
        let y = space.apply_a1(&State::domain(w, v));
        assert!(y.v.coeffs.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn domain_violation_is_reported() {
        let space = EnergySpace::uniform(PhysicalParams::new(0.3, 0.4, 1.0, 0.2), 1.0).unwrap();
        let mut x = State::domain(StateFunction::zero(), StateFunction::monomial(&[1.0, 1.0]).unwrap());
        x.z[1] += 1e-3;
        assert!(matches!(space.apply_a0(&x), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn degenerate_weights_are_rejected() {
        let p = PhysicalParams::new(0.3, 0.4, 1.0, 0.2);
        let end = EndCondition::generalized(1.0, 0.0, 1.0, 1.0);
        assert_eq!(EnergySpace::new(&ProblemSpec::new(p, end, end)).unwrap_err(), Error::DegenerateWeights);
        assert_eq!(
            EnergySpace::new(&ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped)).unwrap_err(),
            Error::DegenerateWeights
        );
    }

    #[test]
    fn inverse_of_zero_is_zero() {
        let space = EnergySpace::uniform(PhysicalParams::new(0.3, 0.4, 1.0, 0.2), 1.0).unwrap();
        let x = space.a0_inverse(&State::zero()).unwrap();
        assert!(x.v.coeffs.iter().chain(&x.w.coeffs).all(|c| c.norm() == 0.0));
        assert!(x.z.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(StateFunction::real_chebyshev(&[1.0; DEGREE_BUDGET + 2]), Err(Error::DegreeOverflow { .. })));
    }
}
