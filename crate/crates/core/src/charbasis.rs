//! Characteristic exponents of the constant-coefficient equation
//! `w'''' + a2 w'' + a1 w' + a0 w = 0`, the overflow-safe exponential basis
//! built from them, and the asymptotic (Birkhoff-form) family used to
//! describe them for large `|rho|`.

use nalgebra::{Matrix4, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{exclusion_radius, omega, rho_to_lambda, PhysicalParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients of `mu^4 + a2 mu^2 + a1 mu + a0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub a2: Complex64,
    pub a1: Complex64,
    pub a0: Complex64,
}

impl QuarticCoeffs {
    pub fn eval(&self, mu: Complex64) -> Complex64 {
        let m2 = mu * mu;
        (m2 + self.a2) * m2 + self.a1 * mu + self.a0
    }

    fn eval_derivative(&self, mu: Complex64) -> Complex64 {
        (4.0 * mu * mu + 2.0 * self.a2) * mu + self.a1
    }

    /// Magnitude of the largest term of the quartic at `mu`, floored at one.
    pub fn term_scale(&self, mu: Complex64) -> f64 {
        let r = mu.norm();
        let r2 = r * r;
        1f64.max(r2 * r2)
            .max(self.a2.norm() * r2)
            .max(self.a1.norm() * r)
            .max(self.a0.norm())
    }

    pub fn conj(&self) -> Self {
        Self { a2: self.a2.conj(), a1: self.a1.conj(), a0: self.a0.conj() }
    }
}

pub fn quartic_coeffs(lambda: Complex64, p: &PhysicalParams) -> Result<QuarticCoeffs> {
    if (lambda + 1.0 / p.alpha).norm() < exclusion_radius(p.alpha) {
        return Err(Error::ExcludedPoint { lambda });
    }
    let d = 1.0 + p.alpha * lambda;
    Ok(QuarticCoeffs {
        a2: Complex64::from(p.eta) / d,
        a1: lambda * p.coriolis() / d,
        a0: lambda * (lambda + p.delta) / d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalBasis {
    pub mu: [Complex64; 4],
    pub confluent: bool,
    pub anchor: [f64; 4],
}

impl FundamentalBasis {
    /// Smallest pairwise distance between exponents.
    pub fn separation(&self) -> f64 {
        let mut sep = f64::INFINITY;
        for i in 0..4 {
            for j in i + 1..4 {
                sep = sep.min((self.mu[i] - self.mu[j]).norm());
            }
        }
        sep
    }

    pub fn magnitude(&self) -> f64 {
        self.mu.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }
}

fn confluence_threshold(mu: &[Complex64; 4]) -> f64 {
    1e-6 * mu.iter().map(|m| 1.0 + m.norm()).fold(0.0, f64::max)
}

const POLISH_ITERATIONS: usize = 50;

/// Roots of the quartic from the eigenvalues of its (rescaled) companion
/// matrix, each polished by Newton's method.
pub fn characteristic_roots(c: &QuarticCoeffs) -> Result<FundamentalBasis> {
    if ![c.a2, c.a1, c.a0].iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        return Err(Error::NoConvergence { what: "quartic root polishing", iterations: 0 });
    }
    // Substituting mu = t nu brings all roots to unit size.
    let t = c.a0.norm().powf(0.25).max(c.a1.norm().cbrt()).max(c.a2.norm().sqrt());
    let mut mu = [ZERO; 4];
    if t > 0.0 {
        let b = [c.a0 / (t * t * t * t), c.a1 / (t * t * t), c.a2 / (t * t), ZERO];
        let nu = companion_roots(b)
            .ok_or(Error::NoConvergence { what: "companion Schur decomposition", iterations: 500 })?;
        for (slot, root) in mu.iter_mut().zip(nu) {
            *slot = polish(c, root * t)?;
        }
    }
    let anchor = mu.map(|m| if m.re > 0.0 { 1.0 } else { 0.0 });
    let mut basis = FundamentalBasis { mu, confluent: false, anchor };
    basis.confluent = basis.separation() < confluence_threshold(&mu);
    Ok(basis)
}

/// Eigenvalues of the companion matrix of the monic quartic with low-order
/// coefficients `b`. QR can stall on highly symmetric root sets such as the
/// fourth roots of -1, so on failure the variable is shifted and retried.
fn companion_roots(b: [Complex64; 4]) -> Option<[Complex64; 4]> {
    let one = Complex64::from(1.0);
    for shift in [ZERO, Complex64::new(0.31, 0.17), Complex64::new(-0.23, 0.41)] {
        // Taylor shift: coefficients of p(x + shift).
        let mut q = [b[0], b[1], b[2], b[3], one];
        for k in 0..4 {
            for j in (k..4).rev() {
                q[j] += shift * q[j + 1];
            }
        }
        #[rustfmt::skip]
        let companion = Matrix4::new(
            ZERO, ZERO, ZERO, -q[0],
            one, ZERO, ZERO, -q[1],
            ZERO, one, ZERO, -q[2],
            ZERO, ZERO, one, -q[3],
        );
        if let Some(schur) = Schur::try_new(companion, 1e-15, 500) {
            let (_, tri) = schur.unpack();
            return Some([0, 1, 2, 3].map(|m| tri[(m, m)] + shift));
        }
    }
    None
}

fn polish(c: &QuarticCoeffs, mut mu: Complex64) -> Result<Complex64> {
    for _ in 0..POLISH_ITERATIONS {
        let f = c.eval(mu);
        let scale = c.term_scale(mu);
        let df = c.eval_derivative(mu);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        // Stop once the step no longer changes the root meaningfully.
        if step.norm() <= 1e-15 * (1.0 + mu.norm()) || f.norm() == 0.0 {
            mu -= step;
            break;
        }
        let next = mu - step;
        if c.eval(next).norm() >= f.norm() && f.norm() <= 1e-13 * scale {
            break;
        }
        mu = next;
    }
    if c.eval(mu).norm() <= 1e-10 * c.term_scale(mu) {
        Ok(mu)
    } else {
        Err(Error::NoConvergence { what: "quartic root polishing", iterations: POLISH_ITERATIONS })
    }
}

/// Anchored exponential basis at one point. True entry `(j, m)` equals
/// `values[(j, m)] * exp(mu_m * sigma_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEval {
    pub values: Matrix4<Complex64>,
    pub logscale: [f64; 4],
}

pub fn basis_eval(b: &FundamentalBasis, s: f64) -> Result<BasisEval> {
    if b.confluent {
        return Err(Error::ConfluentBasis { separation: b.separation() });
    }
    let mut values = Matrix4::zeros();
    let mut logscale = [0.0; 4];
    for m in 0..4 {
        let mu = b.mu[m];
        let mut e = (mu * (s - b.anchor[m])).exp();
        for j in 0..4 {
            values[(j, m)] = e;
            e *= mu;
        }
        logscale[m] = mu.re * b.anchor[m];
    }
    Ok(BasisEval { values, logscale })
}

/// Asymptotic brackets `1 + W_m(s)/rho` of the Birkhoff-form solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirkhoffBasis {
    pub rho: Complex64,
    pub s: f64,
    pub brackets: [Complex64; 4],
}

/// `W_m(s) = (1/4) sqrt(1/alpha) (delta - 1/alpha) omega_m s`.
pub fn birkhoff_w(m: usize, s: f64, p: &PhysicalParams) -> Complex64 {
    let inv = 1.0 / p.alpha;
    omega(m) * (0.25 * inv.sqrt() * (p.delta - inv) * s)
}

pub fn birkhoff_basis(rho: Complex64, s: f64, p: &PhysicalParams) -> BirkhoffBasis {
    let brackets = [1, 2, 3, 4].map(|m| 1.0 + birkhoff_w(m, s, p) / rho);
    BirkhoffBasis { rho, s, brackets }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaRow {
    pub abs_rho: f64,
    pub m: usize,
    pub gap: f64,
    pub fitted_exponent: f64,
}

/// Comparison of exact exponents with `rho omega_m` along a log-spaced sweep
/// of `|rho|` at fixed `arg rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaDiagnostic {
    pub rows: Vec<LemmaRow>,
    /// Per `m`: fitted decay exponent `p` and magnitude `c` in `gap ~ c |rho|^-p`.
    pub fits: [(f64, f64); 4],
    /// `beta sqrt(eta) / (2 alpha)`, the magnitude of the `|rho|^-2` term of
    /// the exact expansion.
    pub second_order_coefficient: f64,
    /// `|delta/alpha - 1/alpha^2| / 4`, the magnitude of the `|rho|^-3` term.
    pub third_order_coefficient: f64,
    /// Coefficient of `1/rho` in the stated Birkhoff bracket, per `m`, evaluated at `s = 1`.
    pub stated_first_order: [Complex64; 4],
}

/// Exponents for `lambda = alpha rho^4`, each matched to the nearest `rho omega_m`.
pub fn matched_exponents(rho: Complex64, p: &PhysicalParams) -> Result<[Complex64; 4]> {
    let lambda = rho_to_lambda(rho, p.alpha);
    let basis = characteristic_roots(&quartic_coeffs(lambda, p)?)?;
    let mut used = [false; 4];
    let mut out = [ZERO; 4];
    for m in 1..=4 {
        let target = rho * omega(m);
        let (k, _) = basis
            .mu
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, mu)| (k, (mu - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("four exponents");
        used[k] = true;
        out[m - 1] = basis.mu[k];
    }
    Ok(out)
}

pub const LEMMA_SWEEP_POINTS: usize = 7;

/// Sweep `|rho|` from `|rho|` to `100 |rho|` (seven log-spaced points) along
/// `arg rho` and fit `log gap` against `log |rho|`.
pub fn lemma_diagnostic(rho: Complex64, p: &PhysicalParams) -> Result<LemmaDiagnostic> {
    let theta = rho.arg();
    let r0 = rho.norm();
    let mut gaps = vec![[0.0; 4]; LEMMA_SWEEP_POINTS];
    let mut radii = vec![0.0; LEMMA_SWEEP_POINTS];
    for (k, (g, r)) in gaps.iter_mut().zip(radii.iter_mut()).enumerate() {
        *r = r0 * 10f64.powf(k as f64 / 3.0);
        let rk = Complex64::from_polar(*r, theta);
        let mu = matched_exponents(rk, p)?;
        for m in 0..4 {
            g[m] = (mu[m] - rk * omega(m + 1)).norm();
        }
    }
    let mut fits = [(0.0, 0.0); 4];
    for (m, fit) in fits.iter_mut().enumerate() {
        let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = gaps.iter().map(|g| g[m].max(f64::MIN_POSITIVE).ln()).collect();
        let (slope, intercept) = least_squares(&xs, &ys);
        *fit = (-slope, intercept.exp());
    }
    let mut rows = Vec::with_capacity(4 * LEMMA_SWEEP_POINTS);
    for (g, r) in gaps.iter().zip(&radii) {
        for m in 0..4 {
            rows.push(LemmaRow { abs_rho: *r, m: m + 1, gap: g[m], fitted_exponent: fits[m].0 });
        }
    }
    Ok(LemmaDiagnostic {
        rows,
        fits,
        second_order_coefficient: p.beta * p.eta.sqrt() / (2.0 * p.alpha),
        third_order_coefficient: (p.delta / p.alpha - 1.0 / (p.alpha * p.alpha)).abs() / 4.0,
        stated_first_order: [1, 2, 3, 4].map(|m| birkhoff_w(m, 1.0, p)),
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

pub fn roots_at(lambda: Complex64, p: &PhysicalParams) -> Result<FundamentalBasis> {
    characteristic_roots(&quartic_coeffs(lambda, p)?)
}
