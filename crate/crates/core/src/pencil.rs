//! Chebyshev collocation of the quadratic pencil
//! `lambda^2 w + lambda (alpha w'''' + 2 beta sqrt(eta) w' + delta w) + (w'''' + eta w'') = 0`
//! with lambda-affine boundary rows. Serves as an oracle for the determinant
//! method and shares no code with it beyond the problem types.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detfun::{char_det, char_det_derivative};
use crate::error::{Error, Result};
use crate::model::{canonical_rho, rel_dist, EndCondition, ProblemSpec};
use crate::roots::{in_hole, EigenvalueRecord, Method};

pub const MIN_DEGREE: usize = 16;
pub const DEFAULT_DEGREE: usize = 64;
/// Second resolution is `n + RESOLUTION_STEP`.
pub const RESOLUTION_STEP: usize = 16;
pub const STABLE_MOVEMENT: f64 = 1e-6;
/// Largest Newton correction `|Delta / Delta'|` (relative) for a determinant-confirmed value.
pub const DET_CONFIRM: f64 = 1e-6;

/// Chebyshev extreme points mapped to `[0, 1]` (`s_0 = 0`, `s_n = 1`).
#[derive(Debug, Clone)]
pub struct ChebGrid {
    pub n: usize,
    pub nodes: Vec<f64>,
    /// `diff[k]` differentiates `k` times; `diff[0]` is the identity.
    pub diff: [DMatrix<f64>; 5],
}

impl ChebGrid {
    /// Differentiation matrices by the recursion of Weideman and Reddy, with
    /// node differences from the sine identity and the flipping trick.
    pub fn new(n: usize) -> Self {
        let pi = std::f64::consts::PI;
        let m = n + 1;
        let x: Vec<f64> = (0..m).map(|j| (j as f64 * pi / n as f64).cos()).collect();
        let nodes: Vec<f64> = (0..m).map(|j| (j as f64 * pi / (2.0 * n as f64)).sin().powi(2)).collect();
        let mut dx = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                dx[(i, j)] = 2.0 * ((i + j) as f64 * pi / (2.0 * n as f64)).sin() * ((j as f64 - i as f64) * pi / (2.0 * n as f64)).sin();
            }
        }
        for i in m / 2..m {
            for j in 0..m {
                dx[(i, j)] = -dx[(n - i, n - j)];
            }
        }
        debug_assert!((dx[(0, 1)] - (x[0] - x[1])).abs() < 1e-14);
        let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
        let mut z = DMatrix::<f64>::zeros(m, m);
        let mut cc = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    z[(i, j)] = 1.0 / dx[(i, j)];
                }
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                cc[(i, j)] = sign * c(i) / c(j);
            }
        }
        let mut d = DMatrix::<f64>::identity(m, m);
        let mut diff: [DMatrix<f64>; 5] = std::array::from_fn(|_| DMatrix::identity(m, m));
        for ell in 1..=4 {
            let mut next = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        next[(i, j)] = ell as f64 * z[(i, j)] * (cc[(i, j)] * d[(i, i)] - d[(i, j)]);
                    }
                }
                let row: f64 = (0..m).filter(|&j| j != i).map(|j| next[(i, j)]).sum();
                next[(i, i)] = -row;
            }
            d = next;
            // s = (1 - x) / 2, so d/ds = -2 d/dx
            diff[ell] = &d * (-2f64).powi(ell as i32);
        }
        Self { n, nodes, diff }
    }
}

impl ChebGrid {
    /// `ops[m]` maps node values of a degree-`n` polynomial to node values of
    /// its `m`-fold antiderivative vanishing to order `m` at `s = 0`. Exact in
    /// polynomial arithmetic (degree grows to `n + 4`).
    pub fn antiderivatives(&self) -> [DMatrix<f64>; 5] {
        let n = self.n;
        let m = n + 1;
        let pi = std::f64::consts::PI;
        let cbar = |k: usize| if k == 0 || k == n { 2.0 } else { 1.0 };
        let mut ops: [DMatrix<f64>; 5] = std::array::from_fn(|_| DMatrix::zeros(m, m));
        ops[0] = DMatrix::identity(m, m);
        // T_k at x_i = cos(i pi / n), s_i = (1 - x_i) / 2, for k up to n + 4.
        let t = |k: usize, i: usize| ((k * i) as f64 * pi / n as f64).cos();
        for j in 0..m {
            // Chebyshev coefficients (in x) of the cardinal function at node j.
            let mut a: Vec<f64> =
                (0..m).map(|k| 2.0 / (n as f64 * cbar(k) * cbar(j)) * t(k, j)).collect();
            for level in 1..=4 {
                let mut b = vec![0.0; a.len() + 1];
                let at = |k: usize| a.get(k).copied().unwrap_or(0.0);
                b[1] = at(0) - 0.5 * at(2);
                for (k, bk) in b.iter_mut().enumerate().skip(2) {
                    *bk = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
                }
                // ds = -dx / 2; fix the constant so the antiderivative vanishes at x = 1.
                for bk in b.iter_mut() {
                    *bk *= -0.5;
                }
                b[0] -= b.iter().sum::<f64>();
                for i in 0..m {
                    ops[level][(i, j)] = b.iter().enumerate().map(|(k, bk)| bk * t(k, i)).sum();
                }
                a = b;
            }
        }
        ops
    }
}

/// `T(lambda) = K + lambda C + lambda^2 M2`.
#[derive(Debug, Clone)]
pub struct QuadraticPencil {
    pub k: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    /// Replaced rows: `(row, node, constant part, lambda part)` with the
    /// coefficient vectors acting on `(w, w', w'', w''')`.
    pub bc_rows: Vec<(usize, usize, [f64; 4], [f64; 4])>,
    pub grid: ChebGrid,
}

impl QuadraticPencil {
    pub fn apply(&self, lambda: Complex64, w: &DVector<Complex64>) -> DVector<Complex64> {
        let cast = |m: &DMatrix<f64>| m.map(Complex64::from);
        cast(&self.k) * w + cast(&self.c) * w * lambda + cast(&self.m2) * w * (lambda * lambda)
    }
}

/// Boundary conditions at one end as `(constant, lambda part)` coefficient pairs.
fn end_rows(end: &EndCondition, at_zero: bool) -> [([f64; 4], [f64; 4]); 2] {
    let sg = if at_zero { 1.0 } else { -1.0 };
    let z = [0.0; 4];
    match *end {
        // s = 0: w'' - (k1 + lambda k2) w' and w''' + (k3 + lambda k4) w; signs flip at s = 1.
        EndCondition::Generalized { ka, kb, kc, kd } => {
            [([0.0, -sg * ka, 1.0, 0.0], [0.0, -sg * kb, 0.0, 0.0]), ([sg * kc, 0.0, 0.0, 1.0], [sg * kd, 0.0, 0.0, 0.0])]
        }
        EndCondition::Clamped => [([1.0, 0.0, 0.0, 0.0], z), ([0.0, 1.0, 0.0, 0.0], z)],
        EndCondition::Free => [([0.0, 0.0, 1.0, 0.0], z), ([0.0, 0.0, 0.0, 1.0], z)],
        EndCondition::Hinged => [([1.0, 0.0, 0.0, 0.0], z), ([0.0, 0.0, 1.0, 0.0], z)],
        EndCondition::Guided => [([0.0, 1.0, 0.0, 0.0], z), ([0.0, 0.0, 0.0, 1.0], z)],
    }
}

pub fn build_pencil(spec: &ProblemSpec, n: usize) -> Result<QuadraticPencil> {
    if n < MIN_DEGREE {
        return Err(Error::ResolutionTooLow { n, min: MIN_DEGREE });
    }
    let p = &spec.physical;
    let g = ChebGrid::new(n);
    let d = &g.diff;
    let mut k = &d[4] + &d[2] * p.eta;
    let mut c = &d[4] * p.alpha + &d[1] * (2.0 * p.beta * p.eta.sqrt()) + &d[0] * p.delta;
    let mut m2 = DMatrix::<f64>::identity(n + 1, n + 1);

    let [r0, r1] = end_rows(&spec.end0, true);
    let [r2, r3] = end_rows(&spec.end1, false);
    let bc_rows = vec![(0, 0, r0.0, r0.1), (1, 0, r1.0, r1.1), (n - 1, n, r2.0, r2.1), (n, n, r3.0, r3.1)];
    for &(row, node, c0, c1) in &bc_rows {
        for j in 0..=n {
            k[(row, j)] = (0..4).map(|q| c0[q] * d[q][(node, j)]).sum();
            c[(row, j)] = (0..4).map(|q| c1[q] * d[q][(node, j)]).sum();
            m2[(row, j)] = 0.0;
        }
    }
    Ok(QuadraticPencil { k, c, m2, bc_rows, grid: g })
}

/// Integrated form used by the oracle: unknowns are `v = w''''` at the nodes
/// and the cubic `a_0 + a_1 s + a_2 s^2 + a_3 s^3`, with
/// `w = J^4 v + cubic`. Rows `0..=n` collocate the equation at every node,
/// rows `n + 1..=n + 4` hold the boundary conditions. All blocks are bounded,
/// so the eigenvalues accumulating at `-1/alpha` stay near it instead of
/// spreading over the plane as they do for the differentiated pencil.
pub fn build_integral_pencil(spec: &ProblemSpec, n: usize) -> Result<QuadraticPencil> {
    if n < MIN_DEGREE {
        return Err(Error::ResolutionTooLow { n, min: MIN_DEGREE });
    }
    let p = &spec.physical;
    let g = ChebGrid::new(n);
    let ops = g.antiderivatives();
    let m = n + 1;
    let size = m + 4;
    // w^{(k)} at the nodes as a map from the unknowns.
    let w: Vec<DMatrix<f64>> = (0..=4)
        .map(|k| {
            let mut out = DMatrix::<f64>::zeros(m, size);
            out.view_mut((0, 0), (m, m)).copy_from(&ops[4 - k]);
            for (i, s) in g.nodes.iter().enumerate() {
                for j in k..4 {
                    let falling: f64 = ((j - k + 1)..=j).map(|q| q as f64).product();
                    out[(i, m + j)] = falling * s.powi((j - k) as i32);
                }
            }
            out
        })
        .collect();
    let mut k = DMatrix::<f64>::zeros(size, size);
    let mut c = DMatrix::<f64>::zeros(size, size);
    let mut m2 = DMatrix::<f64>::zeros(size, size);
    k.view_mut((0, 0), (m, size)).copy_from(&(&w[4] + &w[2] * p.eta));
    c.view_mut((0, 0), (m, size))
        .copy_from(&(&w[4] * p.alpha + &w[1] * (2.0 * p.beta * p.eta.sqrt()) + &w[0] * p.delta));
    m2.view_mut((0, 0), (m, size)).copy_from(&w[0]);

    let [r0, r1] = end_rows(&spec.end0, true);
    let [r2, r3] = end_rows(&spec.end1, false);
    let bc_rows = vec![(m, 0, r0.0, r0.1), (m + 1, 0, r1.0, r1.1), (m + 2, n, r2.0, r2.1), (m + 3, n, r3.0, r3.1)];
    for &(row, node, c0, c1) in &bc_rows {
        for j in 0..size {
            k[(row, j)] = (0..4).map(|q| c0[q] * w[q][(node, j)]).sum();
            c[(row, j)] = (0..4).map(|q| c1[q] * w[q][(node, j)]).sum();
        }
    }
    Ok(QuadraticPencil { k, c, m2, bc_rows, grid: g })
}

/// Finite eigenvalues of the pencil through the linearisation
/// `[0 I; -K -C] z = lambda [I 0; 0 M2] z`, `z = (w, lambda w)`, solved by
/// shift-and-invert so that the singular right-hand block only produces
/// eigenvalues at infinity. The shifted inverse is applied blockwise through
/// `Q(sigma) = K + sigma C + sigma^2 M2`, which keeps the unit blocks of the
/// linearisation out of the factorisation.
pub fn pencil_eigenvalues(pencil: &QuadraticPencil) -> Result<Vec<Complex64>> {
    for sigma in [0.5, 1.7, -0.3] {
        match shifted_eigenvalues(pencil, sigma) {
            Ok(v) => return Ok(v),
            Err(Error::SingularSystem { .. } | Error::SolverFailure(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SolverFailure("no shift gave a usable linearisation".into()))
}

/// Eigenvalues `sigma + 1/theta` from the shifted inverse, with `|T|_F` for diagnostics.
pub fn shifted_eigenvalues(pencil: &QuadraticPencil, sigma: f64) -> Result<Vec<Complex64>> {
    let m = pencil.k.nrows();
    let q = &pencil.k + &pencil.c * sigma + &pencil.m2 * (sigma * sigma);
    let lu = q.lu();
    let shifted = &pencil.c + &pencil.m2 * sigma;
    let (Some(r1), Some(r2)) = (lu.solve(&shifted), lu.solve(&pencil.m2)) else {
        return Err(Error::SingularSystem { det: 0.0 });
    };
    if !r1.iter().chain(r2.iter()).all(|v| v.is_finite()) {
        return Err(Error::SingularSystem { det: f64::NAN });
    }
    let mut t = DMatrix::<f64>::zeros(2 * m, 2 * m);
    t.view_mut((0, 0), (m, m)).copy_from(&(-&r1));
    t.view_mut((0, m), (m, m)).copy_from(&(-&r2));
    t.view_mut((m, 0), (m, m)).copy_from(&(DMatrix::identity(m, m) - &r1 * sigma));
    t.view_mut((m, m), (m, m)).copy_from(&(&r2 * -sigma));
    let dense = faer::Mat::<f64>::from_fn(2 * m, 2 * m, |i, j| t[(i, j)]);
    let theta: Vec<Complex64> = dense
        .eigenvalues()
        .map_err(|e| Error::SolverFailure(format!("eigenvalue iteration did not converge: {e:?}")))?
        .into_iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    let scale = theta.iter().map(|t| t.norm()).fold(0.0, f64::max);
    Ok(theta
        .iter()
        .filter(|t| t.norm() > 1e-13 * scale)
        .map(|t| Complex64::from(sigma) + 1.0 / t)
        .collect())
}

/// Largest relative move from the linearisation estimate that polishing may make.
const REFINE_REACH: f64 = 0.05;
/// Relative step below which a stalled iteration counts as converged.
const REFINE_FLOOR: f64 = 1e-8;
const REFINE_MAX: usize = 40;
const WARM_SWEEPS: usize = 3;

/// Polishes an eigenvalue estimate of the discrete pencil by nonlinear
/// inverse iteration, `x <- T(l)^{-1} T'(l) x`, `l <- l - (u.x_old)/(u.x_new)`.
/// The linearisation is badly conditioned for large `|lambda|`; the pencil
/// itself is not. Returns `None` when the iteration does not settle.
pub fn refine_pencil_eigenvalue(pencil: &QuadraticPencil, lambda0: Complex64) -> Option<Complex64> {
    let cast = |m: &DMatrix<f64>| m.map(Complex64::from);
    let (k, c, m2) = (cast(&pencil.k), cast(&pencil.c), cast(&pencil.m2));
    let size = k.nrows();
    let t = |l: Complex64| &k + &c * l + &m2 * (l * l);
    let dt = |l: Complex64| &c + &m2 * (l * 2.0);
    // Fixed, generic start and normalisation vectors.
    let u = DVector::<Complex64>::from_fn(size, |i, _| Complex64::new(1.0 + 0.1 * (i % 7) as f64, 0.3 - 0.05 * (i % 5) as f64));
    let mut lambda = lambda0;
    // A few fixed-shift sweeps first, so the Newton phase starts from a
    // vector close to the eigenvector. An exactly singular start is nudged off.
    if t(lambda).lu().solve(&u).is_none() {
        lambda += Complex64::from_polar(1e-12 * (1.0 + lambda.norm()), std::f64::consts::PI / 7.0);
    }
    let lu0 = t(lambda).lu();
    let d0 = dt(lambda);
    let mut x = lu0.solve(&u)?;
    for _ in 0..WARM_SWEEPS {
        let norm = x.norm();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        x = lu0.solve(&(&d0 * (x / Complex64::from(norm))))?;
    }
    let mut last = f64::INFINITY;
    for _ in 0..REFINE_MAX {
        let ux = u.dot(&x);
        if ux.norm() == 0.0 || !ux.re.is_finite() {
            return None;
        }
        x /= ux;
        let Some(y) = t(lambda).lu().solve(&(dt(lambda) * &x)) else {
            return Some(lambda);
        };
        let uy = u.dot(&y);
        if uy.norm() == 0.0 || !uy.re.is_finite() {
            return None;
        }
        let step = Complex64::new(1.0, 0.0) / uy;
        lambda -= step;
        x = y;
        let scale = 1.0 + lambda.norm();
        if (lambda - lambda0).norm() > REFINE_REACH * (1.0 + lambda0.norm()) {
            return None;
        }
        // Converged, or stalled at the rounding floor of the solves.
        if step.norm() <= 1e-11 * scale || (step.norm() >= 0.5 * last && step.norm() <= REFINE_FLOOR * scale) {
            return Some(lambda);
        }
        last = step.norm();
    }
    None
}

/// Eigenvalues of the discrete pencil outside the hole around `-1/alpha`:
/// linearisation estimates polished by [`refine_pencil_eigenvalue`].
pub fn discrete_spectrum(pencil: &QuadraticPencil, alpha: f64) -> Result<Vec<Complex64>> {
    let mut out: Vec<Complex64> = Vec::new();
    for l0 in pencil_eigenvalues(pencil)? {
        if in_hole(l0, alpha) {
            continue;
        }
        let Some(l) = refine_pencil_eigenvalue(pencil, l0) else { continue };
        if in_hole(l, alpha) || out.iter().any(|o| rel_dist(*o, l) < 1e-9) {
            continue;
        }
        out.push(l);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    /// Eigenvalues at the lower resolution, outside the hole around `-1/alpha`, sorted by modulus.
    pub eigenvalues: Vec<Complex64>,
    /// Moved by less than [`STABLE_MOVEMENT`] (relative) at the higher resolution.
    pub stable: Vec<bool>,
    /// The determinant's Newton correction there is below [`DET_CONFIRM`].
    pub det_confirmed: Vec<bool>,
    /// `stable && det_confirmed`.
    pub kept: Vec<bool>,
    pub n_used: (usize, usize),
}

impl OracleSpectrum {
    pub fn kept_values(&self) -> Vec<Complex64> {
        self.select(&self.kept)
    }

    pub fn stable_values(&self) -> Vec<Complex64> {
        self.select(&self.stable)
    }

    fn select(&self, mask: &[bool]) -> Vec<Complex64> {
        self.eigenvalues.iter().zip(mask).filter(|(_, k)| **k).map(|(v, _)| *v).collect()
    }

    /// Kept eigenvalues as records with `method = collocation`.
    pub fn records(&self, spec: &ProblemSpec) -> Vec<EigenvalueRecord> {
        self.kept_values()
            .into_iter()
            .map(|lambda| EigenvalueRecord {
                lambda,
                rho: canonical_rho(lambda, spec.alpha()),
                residual: char_det(lambda, spec).map(|d| d.relative_residual()).unwrap_or(f64::NAN),
                multiplicity: 1,
                branch_index: None,
                method: Method::Collocation,
                perturbed: false,
            })
            .collect()
    }
}

fn det_confirms(lambda: Complex64, spec: &ProblemSpec) -> bool {
    let (Ok(d), Ok(dd)) = (char_det(lambda, spec), char_det_derivative(lambda, spec)) else {
        return false;
    };
    (d.value / dd).norm() <= DET_CONFIRM * (1.0 + lambda.norm())
}

pub fn oracle_spectrum(spec: &ProblemSpec, n: usize) -> Result<OracleSpectrum> {
    let spec = spec.validate()?;
    let solve = |m: usize| build_integral_pencil(&spec, m).and_then(|p| discrete_spectrum(&p, spec.alpha()));
    #[cfg(feature = "parallel")]
    let (lo, hi) = rayon::join(|| solve(n), || solve(n + RESOLUTION_STEP));
    #[cfg(not(feature = "parallel"))]
    let (lo, hi) = (solve(n), solve(n + RESOLUTION_STEP));
    let (lo, hi) = (lo?, hi?);

    let alpha = spec.alpha();
    let mut eigenvalues: Vec<Complex64> = lo.into_iter().filter(|l| !in_hole(*l, alpha)).collect();
    eigenvalues.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(b.im.total_cmp(&a.im)));
    let stable: Vec<bool> = eigenvalues
        .iter()
        .map(|l| hi.iter().map(|h| rel_dist(*l, *h)).fold(f64::INFINITY, f64::min) < STABLE_MOVEMENT)
        .collect();
    let det_confirmed: Vec<bool> = eigenvalues.iter().map(|l| det_confirms(*l, &spec)).collect();
    let kept = stable.iter().zip(&det_confirmed).map(|(a, b)| *a && *b).collect();
    Ok(OracleSpectrum { eigenvalues, stable, det_confirmed, kept, n_used: (n, n + RESOLUTION_STEP) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhysicalParams;

    fn values(g: &ChebGrid, f: impl Fn(f64) -> f64) -> DVector<f64> {
        DVector::from_iterator(g.n + 1, g.nodes.iter().map(|s| f(*s)))
    }

    #[test]
    fn grid_endpoints_and_derivative_of_square() {
        let g = ChebGrid::new(32);
        assert_eq!(g.nodes[0], 0.0);
        assert!((g.nodes[32] - 1.0).abs() < 1e-15);
        let got = &g.diff[1] * values(&g, |s| s * s);
        let want = values(&g, |s| 2.0 * s);
        assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn interior_rows_on_a_cubic() {
        let p = PhysicalParams::new(0.3, 0.7, 2.0, 0.4);
        let spec = ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Free);
        let pen = build_pencil(&spec, 16).unwrap();
        let lambda = Complex64::new(-1.3, 2.1);
        let w = values(&pen.grid, |s| s.powi(3)).map(Complex64::from);
        let got = pen.apply(lambda, &w);
        let c = 2.0 * p.beta * p.eta.sqrt();
        for (i, s) in pen.grid.nodes.iter().enumerate().take(15).skip(2) {
            let want = lambda * lambda * s.powi(3) + lambda * (c * 3.0 * s * s + p.delta * s.powi(3)) + p.eta * 6.0 * s;
            assert!((got[i] - want).norm() < 1e-8 * (1.0 + want.norm()), "node {i} {}", (got[i] - want).norm());
        }
    }

    #[test]
    fn generalized_row_at_the_left_end() {
        let (k01, k02) = (1.5, 0.25);
        let p = PhysicalParams::new(0.3, 0.0, 0.0, 0.0);
        let end = EndCondition::generalized(k01, k02, 2.0, 3.0);
        let pen = build_pencil(&ProblemSpec::new(p, end, end), 20).unwrap();
        let lambda = Complex64::new(0.7, -1.1);
        // w = 1 + 2s + 3s^2 - s^3: w'(0) = 2, w''(0) = 6
        let w = values(&pen.grid, |s| 1.0 + 2.0 * s + 3.0 * s * s - s.powi(3)).map(Complex64::from);
        let got = pen.apply(lambda, &w)[0];
        let want = 6.0 - (k01 + lambda * k02) * 2.0;
        assert!((got - want).norm() < 1e-9);
    }

    #[test]
    fn clamped_rows_are_lambda_free() {
        let p = PhysicalParams::new(0.3, 0.1, 1.0, 0.1);
        let pen = build_pencil(&ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped), 20).unwrap();
        for &(row, _, _, c1) in &pen.bc_rows {
            assert_eq!(c1, [0.0; 4]);
            assert!(pen.c.row(row).iter().all(|v| *v == 0.0));
            assert!(pen.m2.row(row).iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn low_resolution_is_rejected() {
        let p = PhysicalParams::new(0.3, 0.1, 1.0, 0.1);
        let spec = ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped);
        assert_eq!(build_pencil(&spec, 15).unwrap_err(), Error::ResolutionTooLow { n: 15, min: 16 });
    }

    /// First positive root of `cos x cosh x = 1` by bisection.
    fn beam_root() -> f64 {
        let f = |x: f64| x.cos() * x.cosh() - 1.0;
        let (mut a, mut b) = (4.0, 5.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn clamped_beam_pair() {
        let p = PhysicalParams::new(1e-5, 0.0, 0.0, 0.0);
        let spec = ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped);
        let o = oracle_spectrum(&spec, DEFAULT_DEGREE).unwrap();
        let target = beam_root().powi(2);
        assert!((target - 22.3733).abs() < 1e-3);
        for sign in [1.0, -1.0] {
            assert!(
                o.kept_values().iter().any(|l| l.re.abs() < 0.05 && (l.im - sign * target).abs() < 0.05),
                "{:?}",
                &o.kept_values()[..4]
            );
        }
    }

    #[test]
    fn kept_set_is_closed_under_conjugation_and_stable_without_flow() {
        let p = PhysicalParams::new(0.1, 0.4, 0.0, 0.1);
        let spec = ProblemSpec::new(p, EndCondition::Hinged, EndCondition::Free);
        let o = oracle_spectrum(&spec, DEFAULT_DEGREE).unwrap();
        let kept = o.kept_values();
        assert!(kept.len() >= 12);
        for l in &kept {
            assert!(l.re <= 1e-8 * (1.0 + l.norm()), "{l}");
            assert!(kept.iter().any(|m| rel_dist(*m, l.conj()) < 1e-6), "{l}");
        }
    }
}
