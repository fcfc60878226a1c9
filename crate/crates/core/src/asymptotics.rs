//! Closed-form large-`n` eigenvalue formulae, branch indexing of computed
//! eigenvalues, remainder fits and the parameter-limit studies.
//!
//! The formulae place `rho_n` near `(n + 1/2) pi omega_2` (or `n pi omega_2`),
//! which is not the canonical sector representative. Comparisons are made
//! after mapping predictions through `lambda = alpha rho^4` to the upper
//! half-plane and back to the canonical `rho`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charbasis::least_squares;
use crate::error::{Error, Result};
use crate::model::{canonical_rho, omega, rho_to_lambda, EndClass, EndCondition, PhysicalParams, ProblemSpec};
use crate::roots::{branch_spectrum, EigenvalueRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Both ends clamped-like with finite `k04`, `k14` (a clamped end counts as infinite).
    GeneralizedNonzeroD,
    Clamped,
    /// Both ends generalised with `k04 = k14 = 0` and `k02, k12 > 0`.
    ZeroD,
    /// Any other combination: only the leading term `(n + offset) pi omega_2` is known.
    Leading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticModel {
    pub variant: ModelVariant,
    /// Bracket multiplying `1/((n + offset) pi)`.
    pub correction: Complex64,
    /// `1/2` or `0` for the named variants, the end-class sum otherwise.
    pub offset: f64,
    pub params_echo: PhysicalParams,
}

/// `(1/4) sqrt(1/alpha) (delta - 1/alpha)`.
fn damping_bracket(p: &PhysicalParams) -> f64 {
    let inv = 1.0 / p.alpha;
    0.25 * inv.sqrt() * (p.delta - inv)
}

impl AsymptoticModel {
    pub fn generalized(p: &PhysicalParams, k04: f64, k14: f64) -> Self {
        Self::with_inverse_stiffness(p, 1.0 / k04 + 1.0 / k14)
    }

    fn with_inverse_stiffness(p: &PhysicalParams, inv_k: f64) -> Self {
        let correction = omega(1) * (inv_k / p.alpha) + omega(2) * damping_bracket(p);
        Self { variant: ModelVariant::GeneralizedNonzeroD, correction, offset: 0.5, params_echo: *p }
    }

    pub fn clamped(p: &PhysicalParams) -> Self {
        Self { variant: ModelVariant::Clamped, correction: omega(2) * damping_bracket(p), offset: 0.5, params_echo: *p }
    }

    pub fn zero_d(p: &PhysicalParams) -> Self {
        Self { variant: ModelVariant::ZeroD, correction: omega(2) * damping_bracket(p), offset: 0.0, params_echo: *p }
    }

    pub fn leading(p: &PhysicalParams, offset: f64) -> Self {
        Self { variant: ModelVariant::Leading, correction: Complex64::new(0.0, 0.0), offset, params_echo: *p }
    }

    pub fn for_spec(spec: &ProblemSpec) -> Self {
        let p = &spec.physical;
        let inverse_d = |e: &EndCondition| match *e {
            EndCondition::Generalized { kd, .. } => 1.0 / kd,
            _ => 0.0,
        };
        let (c0, c1) = (spec.end0.class(), spec.end1.class());
        match (c0, c1) {
            (EndClass::ClampedLike, EndClass::ClampedLike) => {
                if spec.end0 == EndCondition::Clamped && spec.end1 == EndCondition::Clamped {
                    Self::clamped(p)
                } else {
                    Self::with_inverse_stiffness(p, inverse_d(&spec.end0) + inverse_d(&spec.end1))
                }
            }
            (EndClass::GuidedLike, EndClass::GuidedLike)
                if matches!(spec.end0, EndCondition::Generalized { .. })
                    && matches!(spec.end1, EndCondition::Generalized { .. }) =>
            {
                Self::zero_d(p)
            }
            _ => Self::leading(p, spec.phase_offset()),
        }
    }

    /// `(n + offset) pi`.
    pub fn wavenumber(&self, n: u32) -> f64 {
        (n as f64 + self.offset) * PI
    }
}

/// Leading term `(n + offset) pi omega_2`.
pub fn rho_n_base(n: u32, model: &AsymptoticModel) -> Complex64 {
    omega(2) * model.wavenumber(n)
}

/// Predicted `rho_n` in the frame of the closed-form formulae.
pub fn rho_n_predicted(n: u32, model: &AsymptoticModel) -> Complex64 {
    let k = model.wavenumber(n);
    let i = Complex64::i();
    match model.variant {
        ModelVariant::GeneralizedNonzeroD | ModelVariant::Clamped => omega(2) * k - i * model.correction / k,
        ModelVariant::ZeroD => omega(2) * k + i * model.correction / k,
        ModelVariant::Leading => omega(2) * k,
    }
}

/// `lambda_n = alpha rho_n^4` with the terms of its large-`n` expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPrediction {
    /// Upper-half-plane representative of `alpha rho_n^4`.
    pub value: Complex64,
    /// `alpha rho_n^4` as given by the formula, before conjugation.
    pub formula_value: Complex64,
    /// `-alpha k^4`, `k = (n + offset) pi`.
    pub leading: f64,
    /// `4 alpha (1/alpha)(1/k04 + 1/k14) k^2`.
    pub real_correction: f64,
    /// `+-4 alpha (1/4) sqrt(1/alpha)(delta - 1/alpha) k^2`, the coefficient of `i`.
    pub imag_correction: f64,
}

pub fn lambda_n_predicted(n: u32, model: &AsymptoticModel, alpha: f64) -> LambdaPrediction {
    let k = model.wavenumber(n);
    let p = &model.params_echo;
    let formula_value = rho_to_lambda(rho_n_predicted(n, model), alpha);
    let value = if formula_value.im < 0.0 { formula_value.conj() } else { formula_value };
    let c = damping_bracket(p);
    let (real_correction, imag_correction) = match model.variant {
        ModelVariant::GeneralizedNonzeroD => {
            let inv_k = (model.correction - omega(2) * c) / omega(1) * p.alpha;
            (4.0 * inv_k.re * k * k, 4.0 * alpha * c * k * k)
        }
        ModelVariant::Clamped => (0.0, 4.0 * alpha * c * k * k),
        ModelVariant::ZeroD => (0.0, -4.0 * alpha * c * k * k),
        ModelVariant::Leading => (0.0, 0.0),
    };
    LambdaPrediction { value, formula_value, leading: -alpha * k.powi(4), real_correction, imag_correction }
}

/// Canonical `rho` of the upper-half-plane predicted eigenvalue.
pub fn canonical_prediction(n: u32, model: &AsymptoticModel, alpha: f64) -> Complex64 {
    canonical_rho(lambda_n_predicted(n, model, alpha).value, alpha)
}

/// Canonical `rho` of `-alpha k^4` approached from above: `k e^{i pi/4}`.
pub fn canonical_base(n: u32, model: &AsymptoticModel) -> Complex64 {
    Complex64::from_polar(model.wavenumber(n), PI / 4.0)
}

/// The fourth root of `lambda/alpha` or of `conj(lambda)/alpha` nearest `reference`.
pub fn formula_frame_rho(lambda: Complex64, alpha: f64, reference: Complex64) -> Complex64 {
    let mut best = Complex64::new(f64::NAN, f64::NAN);
    let mut dist = f64::INFINITY;
    for l in [lambda, lambda.conj()] {
        let r = canonical_rho(l, alpha);
        for k in 0..4 {
            let cand = r * Complex64::i().powu(k);
            let d = (cand - reference).norm();
            if d < dist {
                dist = d;
                best = cand;
            }
        }
    }
    best
}

/// Smallest `|rho|` for which a branch index is assigned.
pub fn asymptotic_threshold(alpha: f64) -> f64 {
    2f64.max(2.0 / alpha.sqrt())
}

/// Sets `branch_index` on records in the asymptotic regime by the nearest
/// leading term `(n + offset) pi` in canonical `rho`, within half the
/// asymptotic spacing `pi`. The `1/n` bracket is left out of the matching so
/// that the indices do not depend on the term being tested.
/// Lower-half-plane records inherit the index of their conjugate.
pub fn assign_branches(records: &mut [EigenvalueRecord], spec: &ProblemSpec) {
    let alpha = spec.alpha();
    let model = AsymptoticModel::for_spec(spec);
    let threshold = asymptotic_threshold(alpha);
    let mut claims: Vec<(u32, usize, f64)> = Vec::new();
    for (idx, r) in records.iter_mut().enumerate() {
        r.branch_index = None;
        let lambda_up = if r.lambda.im < 0.0 { r.lambda.conj() } else { r.lambda };
        let rho = canonical_rho(lambda_up, alpha);
        if rho.norm() < threshold {
            continue;
        }
        let guess = (rho.norm() / PI - model.offset).round().max(1.0) as i64;
        let best = (guess - 1..=guess + 1)
            .filter(|n| *n >= 1)
            .map(|n| (n as u32, (canonical_base(n as u32, &model) - rho).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((n, d)) = best {
            if d < PI / 2.0 {
                claims.push((n, idx, d));
            }
        }
    }
    // One upper-half-plane record per index (plus its conjugate).
    claims.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.total_cmp(&b.2)));
    let mut kept: Vec<(u32, Complex64)> = Vec::new();
    for (n, idx, _) in claims {
        let lam = records[idx].lambda;
        let up = if lam.im < 0.0 { lam.conj() } else { lam };
        match kept.iter().find(|(m, _)| *m == n) {
            Some((_, owner)) if (owner - up).norm() > 1e-8 * (1.0 + up.norm()) => continue,
            Some(_) => {}
            None => kept.push((n, up)),
        }
        records[idx].branch_index = Some(n);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Fitted `p` in `remainder ~ C / n^p`.
    pub exponent: f64,
    /// Mean of `remainder_n * n^p`; its modulus is the fitted `|C|`.
    pub coefficient: Complex64,
    pub n_range: (u32, u32),
    /// RMS deviation of the log-log fit.
    pub residual_of_fit: f64,
    /// All remainders are at rounding level; the exponent is meaningless.
    pub at_floor: bool,
}

pub const FIT_MIN_POINTS: usize = 6;
pub const FIT_MIN_INDEX: u32 = 8;

/// Longest run of consecutive indices.
fn consecutive(mut pts: Vec<(u32, Complex64, f64)>) -> Vec<(u32, Complex64, f64)> {
    pts.sort_by_key(|p| p.0);
    pts.dedup_by_key(|p| p.0);
    let mut best: Vec<(u32, Complex64, f64)> = Vec::new();
    let mut run: Vec<(u32, Complex64, f64)> = Vec::new();
    for p in pts {
        if run.last().is_some_and(|l| l.0 + 1 != p.0) {
            run.clear();
        }
        run.push(p);
        if run.len() > best.len() {
            best = run.clone();
        }
    }
    best
}

/// Least-squares fit of `log |remainder|` against `log n`. Each point is
/// `(n, remainder, magnitude of the compared quantity)`.
pub fn fit_decay(points: Vec<(u32, Complex64, f64)>) -> Result<FitReport> {
    let pts = consecutive(points);
    if pts.len() < FIT_MIN_POINTS {
        return Err(Error::InsufficientData { have: pts.len(), need: FIT_MIN_POINTS });
    }
    let at_floor = pts.iter().all(|(_, r, m)| r.norm() <= 1e-12 * (1.0 + m));
    let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.norm().max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    let exponent = -slope;
    let coefficient = pts.iter().map(|p| p.1 * (p.0 as f64).powf(exponent)).sum::<Complex64>() / pts.len() as f64;
    Ok(FitReport {
        exponent,
        coefficient,
        n_range: (pts[0].0, pts[pts.len() - 1].0),
        residual_of_fit: rms,
        at_floor,
    })
}

fn branch_points(records: &[EigenvalueRecord]) -> impl Iterator<Item = (u32, Complex64)> + '_ {
    records
        .iter()
        .filter(|r| r.lambda.im >= 0.0)
        .filter_map(|r| r.branch_index.filter(|n| *n >= FIT_MIN_INDEX).map(|n| (n, r.rho)))
}

/// Fit of the remainder `rho_n - rho_n^predicted` (canonical frame).
pub fn fit_remainder(records: &[EigenvalueRecord], model: &AsymptoticModel) -> Result<FitReport> {
    let alpha = model.params_echo.alpha;
    fit_decay(
        branch_points(records)
            .map(|(n, rho)| (n, rho - canonical_prediction(n, model, alpha), rho.norm()))
            .collect(),
    )
}

/// Fit of the distance to the leading term `(n + offset) pi` on the ray.
pub fn fit_leading(records: &[EigenvalueRecord], model: &AsymptoticModel) -> Result<FitReport> {
    fit_decay(branch_points(records).map(|(n, rho)| (n, rho - canonical_base(n, model), rho.norm())).collect())
}

/// Measured against predicted `1/n` bracket, per branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRow {
    pub n: u32,
    pub measured: Complex64,
    pub predicted: Complex64,
}

/// Recovers the bracket from computed eigenvalues by inverting the formula
/// for `rho_n` in its own frame. Reported, not gated.
pub fn correction_diagnostic(records: &[EigenvalueRecord], model: &AsymptoticModel) -> Vec<CorrectionRow> {
    let alpha = model.params_echo.alpha;
    let i = Complex64::i();
    let mut rows: Vec<CorrectionRow> = records
        .iter()
        .filter(|r| r.lambda.im >= 0.0)
        .filter_map(|r| r.branch_index.map(|n| (n, r.lambda)))
        .map(|(n, lambda)| {
            let k = model.wavenumber(n);
            let rho = formula_frame_rho(lambda, alpha, rho_n_predicted(n, model));
            let d = rho - rho_n_base(n, model);
            let measured = match model.variant {
                ModelVariant::ZeroD => -i * d * k,
                _ => i * d * k,
            };
            CorrectionRow { n, measured, predicted: model.correction }
        })
        .collect();
    rows.sort_by_key(|r| r.n);
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    ClampedLimit,
    K02,
    BetaEta,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::ClampedLimit => "clamped-limit",
            StudyKind::K02 => "k02",
            StudyKind::BetaEta => "beta-eta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: u32,
    pub parameter_value: f64,
    pub gap: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    /// Clamped limit: every branch gap strictly decreases along the sweep.
    pub monotone: Option<bool>,
    /// Largest gap at the final sweep value.
    pub terminal_max: f64,
    /// Fitted decay in `n` of the study's headline gap.
    pub decay: Option<FitReport>,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub rows: Vec<StudyRow>,
    pub summary: StudySummary,
}

pub const STUDY_CSV_HEADER: &str = "study,n,parameter_value,re_gap,im_gap,abs_gap";

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(STUDY_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.kind.name(),
                r.n,
                r.parameter_value,
                r.gap.re,
                r.gap.im,
                r.gap.norm()
            ));
        }
        out
    }
}

pub const CLAMPED_LIMIT_K: [f64; 3] = [1e2, 1e3, 1e4];
pub const K02_VALUES: [f64; 3] = [0.1, 1.0, 10.0];

fn with_ends(p: PhysicalParams, end: EndCondition) -> ProblemSpec {
    ProblemSpec::new(p, end, end)
}

type Branches = Vec<(u32, Option<EigenvalueRecord>)>;

fn rho_of(branches: &Branches, n: u32) -> Option<Complex64> {
    branches.iter().find(|(m, _)| *m == n).and_then(|(_, r)| r.map(|r| r.rho))
}

/// Parameter sweeps on top of the physical parameters of `base`.
///
/// * clamped limit: `k02 = k04 = k12 = k14 = K` (other `k = 1`) against clamped ends, `n = 5..=15`;
/// * `k02`: `k12 = k02` with `k04 = k14 = 0`, `n = 10..=20`, gaps to the mean over the sweep;
/// * beta-eta: all `k = 1`, the base `(beta, eta)` against `beta = eta = 0`, `n = 5..=25`.
pub fn limit_studies(base: &ProblemSpec, kind: StudyKind) -> Result<StudyReport> {
    let p = base.physical;
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    let summary = match kind {
        StudyKind::ClampedLimit => {
            let ns: Vec<u32> = (5..=15).collect();
            let reference = branch_spectrum(&with_ends(p, EndCondition::Clamped), &ns)?;
            let sweeps: Vec<Branches> = CLAMPED_LIMIT_K
                .iter()
                .map(|&k| branch_spectrum(&with_ends(p, EndCondition::generalized(1.0, k, 1.0, k)), &ns))
                .collect::<Result<_>>()?;
            let mut monotone = true;
            let mut terminal_max: f64 = 0.0;
            for &n in &ns {
                let Some(r0) = rho_of(&reference, n) else {
                    missing.push(format!("clamped n={n}"));
                    monotone = false;
                    continue;
                };
                let mut prev = f64::INFINITY;
                for (s, &k) in sweeps.iter().zip(&CLAMPED_LIMIT_K) {
                    match rho_of(s, n) {
                        Some(r) => {
                            let gap = r - r0;
                            rows.push(StudyRow { n, parameter_value: k, gap });
                            monotone &= gap.norm() < prev;
                            prev = gap.norm();
                        }
                        None => {
                            missing.push(format!("K={k} n={n}"));
                            monotone = false;
                        }
                    }
                }
                terminal_max = terminal_max.max(prev);
            }
            StudySummary { monotone: Some(monotone), terminal_max, decay: None, missing }
        }
        StudyKind::K02 => {
            let ns: Vec<u32> = (10..=20).collect();
            let sweeps: Vec<Branches> = K02_VALUES
                .iter()
                .map(|&k| branch_spectrum(&with_ends(p, EndCondition::generalized(1.0, k, 1.0, 0.0)), &ns))
                .collect::<Result<_>>()?;
            let mut spread = Vec::new();
            let mut terminal_max: f64 = 0.0;
            for &n in &ns {
                let rhos: Vec<Option<Complex64>> = sweeps.iter().map(|s| rho_of(s, n)).collect();
                if rhos.iter().any(Option::is_none) {
                    missing.push(format!("n={n}"));
                    continue;
                }
                let rhos: Vec<Complex64> = rhos.into_iter().flatten().collect();
                let mean = rhos.iter().sum::<Complex64>() / rhos.len() as f64;
                for (r, &k) in rhos.iter().zip(&K02_VALUES) {
                    rows.push(StudyRow { n, parameter_value: k, gap: r - mean });
                }
                let d = rhos[0] - rhos[rhos.len() - 1];
                terminal_max = terminal_max.max(d.norm());
                spread.push((n, d, mean.norm()));
            }
            StudySummary { monotone: None, terminal_max, decay: fit_decay(spread).ok(), missing }
        }
        StudyKind::BetaEta => {
            let ns: Vec<u32> = (5..=25).collect();
            let ones = EndCondition::generalized(1.0, 1.0, 1.0, 1.0);
            let flow = branch_spectrum(&with_ends(p, ones), &ns)?;
            let still = PhysicalParams { beta: 0.0, eta: 0.0, ..p };
            let reference = branch_spectrum(&with_ends(still, ones), &ns)?;
            let mut pts = Vec::new();
            let mut terminal_max: f64 = 0.0;
            for &n in &ns {
                match (rho_of(&flow, n), rho_of(&reference, n)) {
                    (Some(a), Some(b)) => {
                        rows.push(StudyRow { n, parameter_value: p.beta * p.eta.sqrt(), gap: a - b });
                        pts.push((n, a - b, b.norm()));
                        terminal_max = (a - b).norm();
                    }
                    _ => missing.push(format!("n={n}")),
                }
            }
            StudySummary { monotone: None, terminal_max, decay: fit_decay(pts).ok(), missing }
        }
    };
    Ok(StudyReport { kind, rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::Method;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn phys(alpha: f64, delta: f64) -> PhysicalParams {
        PhysicalParams::new(alpha, 0.3, 2.0, delta)
    }

    fn synthetic(n: u32, rho: Complex64) -> EigenvalueRecord {
        EigenvalueRecord {
            lambda: rho_to_lambda(rho, 1.0),
            rho,
            residual: 0.0,
            multiplicity: 1,
            branch_index: Some(n),
            method: Method::Asymptotic,
            perturbed: false,
        }
    }

    #[test]
    fn generalized_formula_at_n_10() {
        let m = AsymptoticModel::generalized(&phys(1.0, 0.0), 1.0, 1.0);
        let k = 10.5 * PI;
        let want = omega(2) * k - c(0.0, 1.0) * (omega(1) * 2.0 - omega(2) * 0.25) / k;
        assert!((rho_n_predicted(10, &m) - want).norm() < 1e-14);
    }

    #[test]
    fn clamped_is_the_stiff_limit() {
        let p = phys(0.3, 0.2);
        let g = AsymptoticModel::generalized(&p, 1e12, 1e12);
        let cl = AsymptoticModel::clamped(&p);
        for n in 1..=100 {
            let a = rho_n_predicted(n, &g);
            let b = rho_n_predicted(n, &cl);
            assert!((a - b).norm() <= 1e-10 * b.norm());
        }
    }

    #[test]
    fn correction_vanishes_when_delta_is_inverse_alpha() {
        let p = phys(0.5, 2.0);
        let m = AsymptoticModel::clamped(&p);
        assert_eq!(m.correction, c(0.0, 0.0));
        assert_eq!(rho_n_predicted(7, &m), omega(2) * 7.5 * PI);
    }

    #[test]
    fn lambda_components_match_the_formula() {
        let p = phys(0.2, 0.4);
        let m = AsymptoticModel::generalized(&p, 2.0, 3.0);
        for n in [10, 40, 160] {
            let pred = lambda_n_predicted(n, &m, p.alpha);
            let k = m.wavenumber(n);
            assert!(pred.leading < 0.0);
            assert!((pred.leading + p.alpha * k.powi(4)).abs() < 1e-9 * k.powi(4));
            assert!((pred.real_correction - 4.0 * (1.0 / 2.0 + 1.0 / 3.0) * k * k).abs() < 1e-9 * k * k);
            let assembled = c(pred.leading + pred.real_correction, pred.imag_correction);
            // The remaining terms are O(n) relative to k^2 pieces.
            assert!((assembled - pred.formula_value).norm() <= 50.0 * k, "n={n}");
            assert!(pred.value.im >= 0.0);
        }
        let stiff = AsymptoticModel::generalized(&p, 1e15, 1e15);
        assert!(lambda_n_predicted(12, &stiff, p.alpha).real_correction.abs() < 1e-9);
        let ratio = |n| {
            let l = lambda_n_predicted(n, &m, p.alpha).value;
            l.im.abs() / l.re.abs()
        };
        assert!(ratio(100) < ratio(10));
    }

    #[test]
    fn omega_products_used_in_the_fourth_power() {
        // omega_2^3 = omega_4, omega_4 omega_1 = i, omega_4 omega_2 = -1
        assert!((omega(2).powu(3) - omega(4)).norm() < 1e-15);
        assert!((omega(4) * omega(1) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((omega(4) * omega(2) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn fit_of_synthetic_inverse_square_remainder() {
        let m = AsymptoticModel::clamped(&PhysicalParams::new(1.0, 0.0, 0.0, 0.0));
        let records: Vec<_> = (8..=20)
            .map(|n| synthetic(n, canonical_prediction(n, &m, 1.0) + c(0.3, 0.1) / (n as f64).powi(2)))
            .collect();
        let fit = fit_remainder(&records, &m).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.05, "{fit:?}");
        assert!((fit.coefficient.norm() - 0.316).abs() < 0.005);
        assert!(!fit.at_floor);

        let exact: Vec<_> = (8..=20).map(|n| synthetic(n, canonical_prediction(n, &m, 1.0))).collect();
        assert!(fit_remainder(&exact, &m).unwrap().at_floor);

        let few: Vec<_> = (8..=12).map(|n| synthetic(n, canonical_prediction(n, &m, 1.0))).collect();
        assert!(matches!(fit_remainder(&few, &m), Err(Error::InsufficientData { have: 5, need: 6 })));
    }

    #[test]
    fn model_dispatch() {
        let p = phys(0.1, 0.1);
        let g = |a, b, cc, d| EndCondition::generalized(a, b, cc, d);
        let spec = |a, b| ProblemSpec::new(p, a, b);
        assert_eq!(AsymptoticModel::for_spec(&spec(EndCondition::Clamped, EndCondition::Clamped)).variant, ModelVariant::Clamped);
        let mixed = AsymptoticModel::for_spec(&spec(EndCondition::Clamped, g(1.0, 1.0, 1.0, 2.0)));
        assert_eq!(mixed.variant, ModelVariant::GeneralizedNonzeroD);
        assert_eq!(mixed, AsymptoticModel::with_inverse_stiffness(&p, 0.5));
        assert_eq!(AsymptoticModel::for_spec(&spec(g(1.0, 2.0, 1.0, 0.0), g(1.0, 3.0, 1.0, 0.0))).variant, ModelVariant::ZeroD);
        let hf = AsymptoticModel::for_spec(&spec(EndCondition::Hinged, EndCondition::Free));
        assert_eq!(hf.variant, ModelVariant::Leading);
        assert_eq!(hf.offset, 0.25);
    }

    #[test]
    fn branch_assignment_is_stable_under_small_perturbations() {
        let p = PhysicalParams::new(0.1, 0.4, 4.0, 0.1);
        let spec = ProblemSpec::new(p, EndCondition::Clamped, EndCondition::Clamped);
        let m = AsymptoticModel::for_spec(&spec);
        let mut records: Vec<_> = (5..=30)
            .map(|n| {
                let rho = canonical_prediction(n, &m, p.alpha) + Complex64::from_polar(0.01 * PI, n as f64);
                EigenvalueRecord { lambda: rho_to_lambda(rho, p.alpha), ..synthetic(0, rho) }
            })
            .collect();
        assign_branches(&mut records, &spec);
        for (r, n) in records.iter().zip(5..) {
            assert_eq!(r.branch_index, Some(n));
        }
    }
}
