//! Eigenvalue localisation: argument-principle counts on rectangles, binary
//! subdivision down to boxes holding a single zero, and Newton refinement.
//!
//! Two coordinate planes are used. Low-lying eigenvalues are searched directly
//! in the `lambda` plane. For large `|lambda|` the search moves to the rotated
//! representative `zeta = rho e^{-i pi/4}` (so `lambda = -alpha zeta^4`), where
//! eigenvalues sit close to the positive real axis with spacing close to `pi`.
//! Eigenvalues accumulate at `-1/alpha`; a square hole around that point is
//! never searched.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::assign_branches;
use crate::detfun::{char_det, char_det_derivative, CharDetValue};
use crate::error::{Error, Result};
use crate::model::{canonical_rho, zeta_to_lambda, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Lambda,
    /// The rotated `zeta` frame of the `rho` plane.
    Rho,
}

/// Axis-aligned rectangle `[lo.re, hi.re] x [lo.im, hi.im]` in `plane`.
///
/// Rectangles in the `Rho` plane must stay clear of the origin and span less
/// than `pi/2` in argument so that `zeta -> lambda` is one-to-one on them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub plane: Plane,
    pub lo: Complex64,
    pub hi: Complex64,
    pub depth: u32,
}

impl SearchRegion {
    pub fn lambda(lo: Complex64, hi: Complex64) -> Self {
        Self { plane: Plane::Lambda, lo, hi, depth: 0 }
    }

    pub fn zeta(lo: Complex64, hi: Complex64) -> Self {
        Self { plane: Plane::Rho, lo, hi, depth: 0 }
    }

    pub fn to_lambda(&self, z: Complex64, alpha: f64) -> Complex64 {
        match self.plane {
            Plane::Lambda => z,
            Plane::Rho => zeta_to_lambda(z, alpha),
        }
    }

    /// Coordinates of `lambda` in this region's plane; in the `Rho` plane the
    /// fourth root nearest the rectangle centre is taken.
    pub fn from_lambda(&self, lambda: Complex64, alpha: f64) -> Complex64 {
        match self.plane {
            Plane::Lambda => lambda,
            Plane::Rho => {
                let q = -lambda / alpha;
                let r = Complex64::from_polar(q.norm().powf(0.25), q.arg() / 4.0);
                let centre = self.centre();
                [r, r * Complex64::i(), -r, -r * Complex64::i()]
                    .into_iter()
                    .min_by(|a, b| (a - centre).norm().total_cmp(&(b - centre).norm()))
                    .unwrap()
            }
        }
    }

    pub fn centre(&self) -> Complex64 {
        (self.lo + self.hi) * 0.5
    }

    pub fn width(&self) -> f64 {
        self.hi.re - self.lo.re
    }

    pub fn height(&self) -> f64 {
        self.hi.im - self.lo.im
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.lo.re - slack && z.re <= self.hi.re + slack && z.im >= self.lo.im - slack && z.im <= self.hi.im + slack
    }

    fn vertices(&self) -> [Complex64; 4] {
        [self.lo, Complex64::new(self.hi.re, self.lo.im), self.hi, Complex64::new(self.lo.re, self.hi.im)]
    }

    fn child(&self, lo: Complex64, hi: Complex64) -> Self {
        Self { plane: self.plane, lo, hi, depth: self.depth + 1 }
    }

    /// Splits along the longer side at fraction `f`.
    fn split(&self, f: f64) -> (Self, Self) {
        if self.width() >= self.height() {
            let x = self.lo.re + f * self.width();
            (self.child(self.lo, Complex64::new(x, self.hi.im)), self.child(Complex64::new(x, self.lo.im), self.hi))
        } else {
            let y = self.lo.im + f * self.height();
            (self.child(self.lo, Complex64::new(self.hi.re, y)), self.child(Complex64::new(self.lo.re, y), self.hi))
        }
    }

    fn expanded(&self, by: f64) -> Self {
        let d = Complex64::new(by * self.width().max(self.height()), by * self.width().max(self.height()));
        Self { plane: self.plane, lo: self.lo - d, hi: self.hi + d, depth: self.depth }
    }

    /// The parts of this rectangle outside `hole` (given in the same plane).
    fn minus(&self, hole: &SearchRegion) -> Vec<SearchRegion> {
        let (x0, x1, y0, y1) = (self.lo.re, self.hi.re, self.lo.im, self.hi.im);
        let hx0 = hole.lo.re.max(x0);
        let hx1 = hole.hi.re.min(x1);
        let hy0 = hole.lo.im.max(y0);
        let hy1 = hole.hi.im.min(y1);
        if hx0 >= hx1 || hy0 >= hy1 {
            return vec![*self];
        }
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let mut out = Vec::new();
        if hx0 > x0 {
            out.push(self.child(c(x0, y0), c(hx0, y1)));
        }
        if x1 > hx1 {
            out.push(self.child(c(hx1, y0), c(x1, y1)));
        }
        if y1 > hy1 {
            out.push(self.child(c(hx0, hy1), c(hx1, y1)));
        }
        if hy0 > y0 {
            out.push(self.child(c(hx0, y0), c(hx1, hy0)));
        }
        out.into_iter().map(|r| SearchRegion { depth: self.depth, ..r }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Determinant,
    Collocation,
    Asymptotic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Determinant => "determinant",
            Method::Collocation => "collocation",
            Method::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub lambda: Complex64,
    pub rho: Complex64,
    /// `|Delta| / scale` at the reported point.
    pub residual: f64,
    pub multiplicity: u32,
    pub branch_index: Option<u32>,
    pub method: Method,
    /// The determinant was evaluated at a shifted point because of confluent exponents.
    pub perturbed: bool,
}

impl EigenvalueRecord {
    pub fn conj(&self) -> Self {
        Self { lambda: self.lambda.conj(), rho: self.rho.conj(), ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SearchTarget {
    FirstPairs(usize),
    /// `lambda`-plane rectangle `(re0, re1, im0, im1)`.
    Region { re0: f64, re1: f64, im0: f64, im1: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchMeta {
    pub target: String,
    pub lambda_cut: f64,
    /// Every eigenvalue in the closed upper half-plane with `|lambda|` below
    /// this radius (outside the hole) has been located.
    pub covered_radius: f64,
    pub hole_centre: f64,
    pub hole_half_width: f64,
    /// Right half-plane cap `R` when the capped rectangle was searched.
    pub rhp_cap: Option<f64>,
    pub rhp_count: usize,
    pub tiles: usize,
    pub boxes: usize,
    pub evaluations: usize,
    pub winding_total: i64,
    pub census_mismatches: Vec<String>,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub records: Vec<EigenvalueRecord>,
    pub spec_echo: ProblemSpec,
    pub search_meta: SearchMeta,
}

pub const CSV_HEADER: &str = "branch_index,re_lambda,im_lambda,re_rho,im_rho,residual,multiplicity,method";

impl SpectrumResult {
    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }
}

pub fn records_to_csv(records: &[EigenvalueRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let branch = r.branch_index.map(|n| n.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            branch,
            r.lambda.re,
            r.lambda.im,
            r.rho.re,
            r.rho.im,
            r.residual,
            r.multiplicity,
            r.method.name()
        ));
    }
    out
}

/// Half-width of the square around `-1/alpha` left out of every search.
pub fn hole_half_width(alpha: f64) -> f64 {
    0.1 / alpha
}

pub fn lambda_hole(alpha: f64) -> SearchRegion {
    let c = Complex64::new(-1.0 / alpha, 0.0);
    let r = hole_half_width(alpha);
    SearchRegion::lambda(c - Complex64::new(r, r), c + Complex64::new(r, r))
}

/// A `zeta`-plane square containing the preimage of [`lambda_hole`].
pub fn zeta_hole(alpha: f64) -> SearchRegion {
    let c = 1.0 / alpha.sqrt();
    let r = 0.03 / alpha.sqrt();
    SearchRegion::zeta(Complex64::new(c - r, -r), Complex64::new(c + r, r))
}

pub fn in_hole(lambda: Complex64, alpha: f64) -> bool {
    lambda_hole(alpha).contains(lambda, 0.0)
}

fn wrap(d: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = d.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Relative residual below which a contour sample counts as sitting on a zero.
const ON_CONTOUR: f64 = 1e-11;
const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_4;
const SEGMENT_DEPTH: u32 = 40;
const INITIAL_SAMPLES: usize = 8;

/// Why a contour count failed.
#[derive(Debug, Clone, PartialEq)]
enum ContourFailure {
    OnContour,
    Other(Error),
}

impl From<Error> for ContourFailure {
    fn from(e: Error) -> Self {
        match e {
            Error::ExcludedPoint { .. } => ContourFailure::OnContour,
            other => ContourFailure::Other(other),
        }
    }
}

struct Counter<'a> {
    spec: &'a ProblemSpec,
    evaluations: usize,
}

/// Phase of the determinant at a contour point with its logarithmic derivative.
#[derive(Debug, Clone, Copy)]
struct Sample {
    theta: f64,
    log_derivative: Complex64,
}

impl Counter<'_> {
    fn phase(&mut self, lambda: Complex64) -> std::result::Result<Sample, ContourFailure> {
        self.evaluations += 3;
        let d = char_det(lambda, self.spec)?;
        if d.relative_residual() < ON_CONTOUR || !d.value.re.is_finite() || !d.value.im.is_finite() {
            return Err(ContourFailure::OnContour);
        }
        let h = 1e-6 * (1.0 + lambda.norm());
        let plus = char_det(lambda + h, self.spec)?.in_scale_of(&d);
        let minus = char_det(lambda - h, self.spec)?.in_scale_of(&d);
        let log_derivative = (plus - minus) / (2.0 * h) / d.value;
        Ok(Sample { theta: d.arg(), log_derivative })
    }

    /// Argument change along `a -> b`. A segment is accepted when the phase
    /// increment is small and the log-derivative at both ends predicts no
    /// more than a quarter turn, which rules out increments aliased by whole turns.
    /// Segments are also kept shorter than half their distance to `-1/alpha`.
    fn segment(
        &mut self,
        map: &dyn Fn(Complex64) -> Complex64,
        a: Complex64,
        b: Complex64,
        sa: Sample,
        sb: Sample,
        depth: u32,
    ) -> std::result::Result<f64, ContourFailure> {
        let d = wrap(sb.theta - sa.theta);
        let (la, lb) = (map(a), map(b));
        let dl = lb - la;
        let predicted = (sa.log_derivative * dl).norm().max((sb.log_derivative * dl).norm());
        // The determinant varies on the scale of the distance to the
        // essential singularity at -1/alpha, so segments near it stay short.
        let pole = Complex64::new(-1.0 / self.spec.alpha(), 0.0);
        let reach = (la - pole).norm().min((lb - pole).norm());
        if d.abs() < MAX_PHASE_STEP && predicted < 2.0 * MAX_PHASE_STEP && dl.norm() <= 0.5 * reach {
            return Ok(d);
        }
        if depth >= SEGMENT_DEPTH {
            return Err(ContourFailure::OnContour);
        }
        let m = (a + b) * 0.5;
        let sm = self.phase(map(m))?;
        Ok(self.segment(map, a, m, sa, sm, depth + 1)? + self.segment(map, m, b, sm, sb, depth + 1)?)
    }

    /// Total argument change of the determinant around the closed polygon.
    fn polygon(&mut self, vertices: &[Complex64], map: &dyn Fn(Complex64) -> Complex64) -> std::result::Result<i64, ContourFailure> {
        let mut total = 0.0;
        let n = vertices.len();
        for k in 0..n {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            let pts: Vec<Complex64> =
                (0..=INITIAL_SAMPLES).map(|j| a + (b - a) * (j as f64 / INITIAL_SAMPLES as f64)).collect();
            let mut samples = Vec::with_capacity(pts.len());
            for p in &pts {
                samples.push(self.phase(map(*p))?);
            }
            for j in 0..INITIAL_SAMPLES {
                total += self.segment(map, pts[j], pts[j + 1], samples[j], samples[j + 1], 0)?;
            }
        }
        let turns = total / std::f64::consts::TAU;
        let rounded = turns.round();
        if (turns - rounded).abs() > 0.25 {
            return Err(ContourFailure::OnContour);
        }
        Ok(rounded as i64)
    }

    fn region(&mut self, region: &SearchRegion) -> std::result::Result<i64, ContourFailure> {
        let alpha = self.spec.alpha();
        let plane = *region;
        self.polygon(&region.vertices(), &move |z| plane.to_lambda(z, alpha))
    }
}

const SHIFT_RETRIES: usize = 5;

/// Number of zeros (with multiplicity) inside `region`. When a zero sits on
/// or very near the boundary, the rectangle is enlarged slightly and the
/// count repeated, up to five times; the count then refers to the enlarged
/// rectangle returned by [`winding_number_with_region`].
pub fn winding_number(region: &SearchRegion, spec: &ProblemSpec) -> Result<i64> {
    winding_number_with_region(region, spec).map(|(w, _)| w)
}

pub fn winding_number_with_region(region: &SearchRegion, spec: &ProblemSpec) -> Result<(i64, SearchRegion)> {
    let mut counter = Counter { spec, evaluations: 0 };
    for k in 0..=SHIFT_RETRIES {
        let r = if k == 0 { *region } else { region.expanded(1e-3 * k as f64 * 1.37) };
        match counter.region(&r) {
            Ok(w) => return Ok((w, r)),
            Err(ContourFailure::OnContour) => continue,
            Err(ContourFailure::Other(e)) => return Err(e),
        }
    }
    Err(Error::RootOnContour { retries: SHIFT_RETRIES })
}

/// Winding number of the determinant around a circle in the `lambda` plane,
/// approximated by a 64-gon.
pub fn circle_winding(centre: Complex64, radius: f64, spec: &ProblemSpec) -> Result<i64> {
    let mut counter = Counter { spec, evaluations: 0 };
    let vertices: Vec<Complex64> =
        (0..64).map(|k| centre + Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / 64.0)).collect();
    match counter.polygon(&vertices, &|z| z) {
        Ok(w) => Ok(w),
        Err(ContourFailure::OnContour) => Err(Error::RootOnContour { retries: 0 }),
        Err(ContourFailure::Other(e)) => Err(e),
    }
}

const NEWTON_MAX: usize = 100;

fn step_tolerance(lambda: Complex64) -> f64 {
    1e-12 * (1.0 + lambda.norm())
}

struct Converged {
    lambda: Complex64,
    det: CharDetValue,
    iterations: usize,
}

/// Newton iteration on the determinant (with multiplicity `m` scaling the step).
fn newton(lambda0: Complex64, spec: &ProblemSpec, m: f64) -> Result<Converged> {
    let mut lambda = lambda0;
    let mut prev_step = f64::INFINITY;
    let mut stalls = 0;
    for it in 0..NEWTON_MAX {
        let d = char_det(lambda, spec)?;
        if d.value.norm() == 0.0 {
            return Ok(Converged { lambda, det: d, iterations: it });
        }
        let dd = char_det_derivative(lambda, spec)?;
        let mut step = m * d.value / dd;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        let cap = 0.5 * (1.0 + lambda.norm());
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        let tol = step_tolerance(lambda);
        if step.norm() <= tol {
            let lambda = lambda - step;
            let det = char_det(lambda, spec)?;
            return Ok(Converged { lambda, det, iterations: it + 1 });
        }
        // Near the noise floor the step stops shrinking; accept if the residual is small.
        if step.norm() >= 0.5 * prev_step && step.norm() <= 1e6 * tol {
            stalls += 1;
            if stalls >= 3 && d.relative_residual() <= 1e-8 {
                return Ok(Converged { lambda, det: d, iterations: it });
            }
        }
        prev_step = step.norm();
        lambda -= step;
    }
    muller(lambda, spec)
}

/// Muller's method on the determinant, used when Newton stagnates.
fn muller(lambda0: Complex64, spec: &ProblemSpec) -> Result<Converged> {
    let h = 1e-4 * (1.0 + lambda0.norm());
    let mut x = [lambda0 - h, lambda0 + h, lambda0];
    for it in 0..NEWTON_MAX {
        let d2 = char_det(x[2], spec)?;
        let f2 = d2.value;
        let f0 = char_det(x[0], spec)?.in_scale_of(&d2);
        let f1 = char_det(x[1], spec)?.in_scale_of(&d2);
        let q01 = (f1 - f0) / (x[1] - x[0]);
        let q12 = (f2 - f1) / (x[2] - x[1]);
        let a = (q12 - q01) / (x[2] - x[0]);
        let b = q12 + a * (x[2] - x[1]);
        let disc = (b * b - 4.0 * a * f2).sqrt();
        let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
        if den.norm() == 0.0 {
            break;
        }
        let step = 2.0 * f2 / den;
        let next = x[2] - step;
        if step.norm() <= step_tolerance(x[2]) || (d2.relative_residual() <= 1e-12 && step.norm() <= 1e3 * step_tolerance(x[2])) {
            let det = char_det(next, spec)?;
            return Ok(Converged { lambda: next, det, iterations: it + 1 });
        }
        x = [x[1], x[2], next];
    }
    Err(Error::NoConvergence { what: "Newton/Muller refinement", iterations: NEWTON_MAX })
}

fn snap(lambda: Complex64) -> Complex64 {
    if lambda.im.abs() <= 1e-10 * (1.0 + lambda.norm()) {
        Complex64::new(lambda.re, 0.0)
    } else {
        lambda
    }
}

fn record(lambda: Complex64, det: &CharDetValue, multiplicity: u32, spec: &ProblemSpec) -> EigenvalueRecord {
    EigenvalueRecord {
        lambda,
        rho: canonical_rho(lambda, spec.alpha()),
        residual: det.relative_residual(),
        multiplicity,
        branch_index: None,
        method: Method::Determinant,
        perturbed: det.perturbed,
    }
}

/// Refines a seed to an eigenvalue; multiplicity comes from the winding
/// number of a small circle around the converged point.
pub fn refine(lambda0: Complex64, spec: &ProblemSpec) -> Result<EigenvalueRecord> {
    let c = newton(lambda0, spec, 1.0)?;
    let lambda = snap(c.lambda);
    let det = char_det(lambda, spec)?;
    let radius = 1e-6 * (1.0 + lambda.norm());
    let m = circle_winding(lambda, radius, spec).unwrap_or(1).max(1) as u32;
    Ok(record(lambda, &det, m, spec))
}

/// Newton iteration count from `lambda0`, exposed for seed-quality checks.
pub fn newton_iterations(lambda0: Complex64, spec: &ProblemSpec) -> Result<(Complex64, usize)> {
    newton(lambda0, spec, 1.0).map(|c| (c.lambda, c.iterations))
}

const DEPTH_CAP: u32 = 60;
const SPLIT_FRACTIONS: [f64; 7] = [0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65];

#[derive(Debug, Default)]
struct Census {
    records: Vec<EigenvalueRecord>,
    boxes: usize,
    evaluations: usize,
    mismatches: Vec<String>,
    failures: Vec<String>,
}

impl Census {
    fn merge(&mut self, other: Census) {
        self.records.extend(other.records);
        self.boxes += other.boxes;
        self.evaluations += other.evaluations;
        self.mismatches.extend(other.mismatches);
        self.failures.extend(other.failures);
    }
}

fn seeds(region: &SearchRegion) -> [Complex64; 5] {
    let c = region.centre();
    let dx = Complex64::new(region.width() / 4.0, 0.0);
    let dy = Complex64::new(0.0, region.height() / 4.0);
    [c, c + dx + dy, c - dx - dy, c + dx - dy, c - dx + dy]
}

fn explore(region: SearchRegion, w: i64, spec: &ProblemSpec, census: &mut Census) {
    census.boxes += 1;
    if w <= 0 {
        if w < 0 {
            census.failures.push(format!("negative winding {w} on {:?}", region));
        }
        return;
    }
    let alpha = spec.alpha();
    let centre_lambda = region.to_lambda(region.centre(), alpha);
    let diameter = (region.to_lambda(region.hi, alpha) - region.to_lambda(region.lo, alpha)).norm();
    let tiny = diameter <= 1e-9 * (1.0 + centre_lambda.norm());
    if w == 1 || tiny || region.depth >= DEPTH_CAP {
        let slack = 1e-9 * region.width().max(region.height());
        for seed in seeds(&region) {
            let lambda_seed = region.to_lambda(seed, alpha);
            match newton(lambda_seed, spec, w as f64) {
                Ok(c) if region.contains(region.from_lambda(c.lambda, alpha), slack) => {
                    census.records.push(record(snap(c.lambda), &c.det, w as u32, spec));
                    return;
                }
                _ => continue,
            }
        }
        if tiny || region.depth >= DEPTH_CAP {
            census.failures.push(Error::DepthCapExceeded { winding: w }.to_string());
            census.mismatches.push(format!("box at lambda {centre_lambda} counted {w}, refined 0"));
            return;
        }
    }
    let mut counter = Counter { spec, evaluations: 0 };
    for f in SPLIT_FRACTIONS {
        let (a, b) = region.split(f);
        let wa = counter.region(&a);
        let wb = counter.region(&b);
        census.evaluations += std::mem::take(&mut counter.evaluations);
        match (wa, wb) {
            (Ok(wa), Ok(wb)) if wa + wb == w => {
                explore(a, wa, spec, census);
                explore(b, wb, spec, census);
                return;
            }
            (Err(ContourFailure::Other(e)), _) | (_, Err(ContourFailure::Other(e))) => {
                census.failures.push(e.to_string());
                return;
            }
            _ => continue,
        }
    }
    census.failures.push(format!("no admissible split for box at lambda {centre_lambda}"));
}

/// Counts and refines all zeros inside one tile.
fn search_tile(tile: SearchRegion, spec: &ProblemSpec) -> Census {
    let mut census = Census::default();
    let mut counter = Counter { spec, evaluations: 0 };
    let mut outcome = Err(ContourFailure::OnContour);
    let mut used = tile;
    for k in 0..=SHIFT_RETRIES {
        used = if k == 0 { tile } else { tile.expanded(1e-3 * k as f64 * 1.37) };
        outcome = counter.region(&used);
        if !matches!(outcome, Err(ContourFailure::OnContour)) {
            break;
        }
    }
    census.evaluations += counter.evaluations;
    match outcome {
        Ok(w) => {
            let before = census.records.len();
            explore(used, w, spec, &mut census);
            let found: i64 = census.records[before..].iter().map(|r| r.multiplicity as i64).sum();
            if found != w {
                census.mismatches.push(format!("tile {:?}: winding {w}, refined multiplicity {found}", used.plane));
            }
        }
        Err(ContourFailure::OnContour) => census.failures.push(Error::RootOnContour { retries: SHIFT_RETRIES }.to_string()),
        Err(ContourFailure::Other(e)) => census.failures.push(e.to_string()),
    }
    census
}

/// Searches each tile, in parallel when the `parallel` feature is on. The
/// output order follows the tile order, whatever the scheduling.
fn search_tiles(tiles: &[SearchRegion], spec: &ProblemSpec) -> Vec<Census> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        tiles.par_iter().map(|t| search_tile(*t, spec)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        tiles.iter().map(|t| search_tile(*t, spec)).collect()
    }
}

/// Tiles covering `region` minus the holes around `-1/alpha`.
pub fn tiles_for(region: &SearchRegion, alpha: f64) -> Vec<SearchRegion> {
    let hole = match region.plane {
        Plane::Lambda => lambda_hole(alpha),
        Plane::Rho => zeta_hole(alpha),
    };
    region.minus(&hole)
}

fn dedupe(mut records: Vec<EigenvalueRecord>) -> Vec<EigenvalueRecord> {
    records.sort_by(|a, b| {
        a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    let mut out: Vec<EigenvalueRecord> = Vec::with_capacity(records.len());
    for r in records {
        let tol = 1e-6 * (1.0 + r.lambda.norm());
        if let Some(existing) = out.iter_mut().find(|e| (e.lambda - r.lambda).norm() <= tol) {
            if r.residual < existing.residual {
                *existing = EigenvalueRecord { multiplicity: existing.multiplicity.max(r.multiplicity), ..r };
            }
        } else {
            out.push(r);
        }
    }
    out
}

pub fn sort_records(records: &mut [EigenvalueRecord]) {
    records.sort_by(|a, b| b.lambda.im.total_cmp(&a.lambda.im).then(a.lambda.re.total_cmp(&b.lambda.re)));
}

/// Radius of the `lambda`-plane box used for low-lying eigenvalues.
pub fn lambda_cut(alpha: f64) -> f64 {
    alpha * (5.0 * std::f64::consts::PI).powi(4)
}

/// Right-half-plane cap `R = alpha (8 pi)^4`.
pub fn rhp_cap(alpha: f64) -> f64 {
    alpha * (8.0 * std::f64::consts::PI).powi(4)
}

/// The `zeta`-band `[x0, x1] x [-(x1 + 1), d]`, covering the closed upper
/// half-plane between `|zeta| = x0 sqrt 2` and `|zeta| = x1`.
pub fn zeta_band(x0: f64, x1: f64) -> SearchRegion {
    SearchRegion::zeta(Complex64::new(x0, -(x1 + 1.0)), Complex64::new(x1, 0.05 * std::f64::consts::PI))
}

const MAX_BANDS: usize = 4000;

pub fn find_spectrum(spec: &ProblemSpec, target: &SearchTarget) -> Result<SpectrumResult> {
    let spec = spec.validate()?;
    let start = std::time::Instant::now();
    let alpha = spec.alpha();
    let mut meta = SearchMeta {
        lambda_cut: lambda_cut(alpha),
        hole_centre: -1.0 / alpha,
        hole_half_width: hole_half_width(alpha),
        ..SearchMeta::default()
    };
    let mut census = Census::default();
    let mut records = match *target {
        SearchTarget::Region { re0, re1, im0, im1 } => {
            meta.target = format!("region {re0},{re1},{im0},{im1}");
            let region = SearchRegion::lambda(Complex64::new(re0, im0), Complex64::new(re1, im1));
            let tiles = tiles_for(&region, alpha);
            meta.tiles = tiles.len();
            for c in search_tiles(&tiles, &spec) {
                census.merge(c);
            }
            let found = dedupe(std::mem::take(&mut census.records));
            meta.covered_radius = 0.0;
            found.into_iter().filter(|r| !in_hole(r.lambda, alpha)).collect::<Vec<_>>()
        }
        SearchTarget::FirstPairs(n) => {
            meta.target = format!("pairs {n}");
            first_pairs(&spec, n, &mut meta, &mut census)?
        }
    };
    assign_branches(&mut records, &spec);
    sort_records(&mut records);
    meta.boxes = census.boxes;
    meta.evaluations = census.evaluations;
    meta.census_mismatches = census.mismatches;
    meta.failures = census.failures;
    meta.winding_total = records.iter().map(|r| r.multiplicity as i64).sum();
    meta.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(SpectrumResult { records, spec_echo: spec, search_meta: meta })
}

fn upper(records: &[EigenvalueRecord]) -> Vec<EigenvalueRecord> {
    records.iter().filter(|r| r.lambda.im >= 0.0).copied().collect()
}

fn first_pairs(spec: &ProblemSpec, n: usize, meta: &mut SearchMeta, census: &mut Census) -> Result<Vec<EigenvalueRecord>> {
    let alpha = spec.alpha();
    let l = lambda_cut(alpha);
    let h = 1e-3 * (1.0 + l);
    let mut tiles = tiles_for(&SearchRegion::lambda(Complex64::new(-l, -h), Complex64::new(l, l)), alpha);
    let mut rhp_tiles = Vec::new();
    if spec.physical.eta != 0.0 {
        let r = rhp_cap(alpha);
        meta.rhp_cap = Some(r);
        if r > l {
            rhp_tiles.push(SearchRegion::lambda(Complex64::new(l, -h), Complex64::new(r, r)));
            rhp_tiles.push(SearchRegion::lambda(Complex64::new(0.0, l), Complex64::new(l, r)));
        }
    }
    let main_count = tiles.len();
    tiles.extend(rhp_tiles);
    meta.tiles = tiles.len();
    let mut found = Vec::new();
    let mut rhp_found = Vec::new();
    for (k, c) in search_tiles(&tiles, spec).into_iter().enumerate() {
        if k < main_count {
            found.extend(c.records.iter().copied());
        } else {
            rhp_found.extend(c.records.iter().copied().filter(|r| r.lambda.re > 0.0));
        }
        census.merge(Census { records: Vec::new(), ..c });
    }
    let mut found = upper(&dedupe(found));
    found.retain(|r| !in_hole(r.lambda, alpha));
    let mut covered = l;

    // Bands in the rotated plane, with edges midway between the expected
    // asymptotic positions (n + offset) pi.
    let offset = spec.phase_offset();
    let pi = std::f64::consts::PI;
    let start = 0.95 * (l / alpha).powf(0.25) / 2f64.sqrt();
    let mut x = ((start / pi - offset - 0.5).floor() + offset + 0.5) * pi;
    let workers = worker_count();
    let mut bands = 0;
    while count_within(&found, covered) < n {
        if bands >= MAX_BANDS {
            census.failures.push(format!("band limit reached before {n} pairs"));
            break;
        }
        let batch: Vec<SearchRegion> = (0..workers)
            .flat_map(|j| {
                let x0 = x + j as f64 * pi;
                tiles_for(&zeta_band(x0, x0 + pi), alpha)
            })
            .collect();
        x += workers as f64 * pi;
        bands += workers;
        meta.tiles += batch.len();
        for c in search_tiles(&batch, spec) {
            found.extend(c.records.iter().copied().filter(|r| r.lambda.im >= 0.0));
            census.merge(Census { records: Vec::new(), ..c });
        }
        found = dedupe(found);
        found.retain(|r| !in_hole(r.lambda, alpha));
        covered = alpha * x.powi(4);
    }
    found.sort_by(|a, b| {
        a.lambda.norm().total_cmp(&b.lambda.norm()).then(a.lambda.re.total_cmp(&b.lambda.re))
    });
    found.truncate(n);
    meta.covered_radius = covered;
    rhp_found = upper(&dedupe(rhp_found));
    meta.rhp_count = rhp_found.len();
    for r in rhp_found {
        if !found.iter().any(|f| (f.lambda - r.lambda).norm() <= 1e-6 * (1.0 + r.lambda.norm())) {
            found.push(r);
        }
    }
    let mut all = found.clone();
    all.extend(found.iter().filter(|r| r.lambda.im > 0.0).map(EigenvalueRecord::conj));
    Ok(all)
}

fn count_within(records: &[EigenvalueRecord], radius: f64) -> usize {
    records.iter().filter(|r| r.lambda.norm() <= radius).count()
}

fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads().clamp(1, 8)
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Eigenvalue of branch `n` located by a search in the `zeta` band of width
/// `pi` centred on `(n + offset) pi`, where `offset` is the asymptotic phase
/// offset of the end conditions. Returns the upper-half-plane root closest to
/// the band centre, or `None` when the band holds no root.
pub fn branch_eigenvalue(spec: &ProblemSpec, n: u32) -> Result<Option<EigenvalueRecord>> {
    let spec = spec.validate()?;
    let alpha = spec.alpha();
    let pi = std::f64::consts::PI;
    let xc = (n as f64 + spec.phase_offset()) * pi;
    let region = SearchRegion::zeta(Complex64::new(xc - 0.5 * pi, -0.5 * pi - 0.5), Complex64::new(xc + 0.5 * pi, 0.05 * pi));
    let mut found = Vec::new();
    for c in search_tiles(&tiles_for(&region, alpha), &spec) {
        found.extend(c.records);
    }
    let target = Complex64::new(xc, 0.0);
    let best = dedupe(found)
        .into_iter()
        .filter(|r| r.lambda.im >= 0.0 && !in_hole(r.lambda, alpha))
        .min_by(|a, b| {
            let da = (region.from_lambda(a.lambda, alpha) - target).norm();
            let db = (region.from_lambda(b.lambda, alpha) - target).norm();
            da.total_cmp(&db)
        });
    Ok(best.map(|r| EigenvalueRecord { branch_index: Some(n), ..r }))
}

/// Branch eigenvalues for every `n` in `ns`, in parallel when enabled.
pub fn branch_spectrum(spec: &ProblemSpec, ns: &[u32]) -> Result<Vec<(u32, Option<EigenvalueRecord>)>> {
    #[cfg(feature = "parallel")]
    let out: Vec<Result<Option<EigenvalueRecord>>> = {
        use rayon::prelude::*;
        ns.par_iter().map(|&n| branch_eigenvalue(spec, n)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out: Vec<Result<Option<EigenvalueRecord>>> = ns.iter().map(|&n| branch_eigenvalue(spec, n)).collect();
    ns.iter().zip(out).map(|(&n, r)| r.map(|r| (n, r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EndCondition, PhysicalParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn clamped(alpha: f64, beta: f64, eta: f64, delta: f64) -> ProblemSpec {
        ProblemSpec::new(PhysicalParams::new(alpha, beta, eta, delta), EndCondition::Clamped, EndCondition::Clamped)
    }

    #[test]
    fn wrap_reduces_to_half_open_interval() {
        use std::f64::consts::PI;
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap(-0.1) + 0.1).abs() < 1e-15);
        assert!((wrap(PI) - PI).abs() < 1e-15);
    }

    #[test]
    fn region_split_and_hole_tiling() {
        let r = SearchRegion::lambda(c(0.0, 0.0), c(4.0, 2.0));
        let (a, b) = r.split(0.5);
        assert_eq!(a.hi.re, 2.0);
        assert_eq!(b.lo.re, 2.0);
        let hole = SearchRegion::lambda(c(1.0, -1.0), c(2.0, 1.0));
        let tiles = r.minus(&hole);
        let area: f64 = tiles.iter().map(|t| t.width() * t.height()).sum();
        assert!((area - (8.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zeta_coordinates_round_trip() {
        let band = zeta_band(20.0, 23.0);
        let z = c(21.0, -3.0);
        let lambda = band.to_lambda(z, 0.1);
        assert!((band.from_lambda(lambda, 0.1) - z).norm() < 1e-12);
    }

    #[test]
    fn beam_pair_is_found() {
        let spec = clamped(1e-5, 0.0, 0.0, 0.0);
        let result = find_spectrum(&spec, &SearchTarget::FirstPairs(1)).unwrap();
        let top = result.records[0];
        assert!((top.lambda.im - 22.3733).abs() < 0.03, "{:?}", result.records);
        assert!(top.lambda.re < 0.0);
        assert_eq!(result.records.len(), 2);
        assert_eq!(result.records[1].lambda, top.lambda.conj());
    }

    #[test]
    fn refine_is_a_fixed_point_at_a_root() {
        let spec = clamped(0.1, 0.4, 4.0, 0.1);
        let first = refine(c(-50.0, 1.0), &spec).unwrap();
        assert!(first.residual <= 1e-8);
        let (again, iterations) = newton_iterations(first.lambda, &spec).unwrap();
        assert!(iterations <= 2);
        assert!((again - first.lambda).norm() <= 1e-10 * first.lambda.norm());
        assert_eq!(first.multiplicity, 1);
    }

    #[test]
    fn winding_counts_single_root_and_nothing_in_the_right_half_plane() {
        let spec = clamped(0.1, 0.0, 0.0, 0.1);
        let root = refine(c(-50.0, 0.0), &spec).unwrap().lambda;
        let d = 1e-2 * root.norm();
        let around = SearchRegion::lambda(root - c(d, d * 0.7), root + c(d * 1.3, d));
        assert_eq!(winding_number(&around, &spec).unwrap(), 1);
        let far = SearchRegion::lambda(c(10.0, -500.0), c(900.0, 500.0));
        assert_eq!(winding_number(&far, &spec).unwrap(), 0);
        let above = SearchRegion::lambda(c(-80.0, 5.0), c(-20.0, 40.0));
        let below = SearchRegion::lambda(c(-80.0, -40.0), c(-20.0, -5.0));
        assert_eq!(winding_number(&above, &spec).unwrap(), winding_number(&below, &spec).unwrap());
    }
}
