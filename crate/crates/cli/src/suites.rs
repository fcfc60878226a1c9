//! Verification suites behind `verify` and `selfcheck`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use tubespec::charbasis::lemma_diagnostic;
use tubespec::detfun::eigenfunction;
use tubespec::energy::{sample_domain_state, sample_state, EnergySpace, InnerKind};
use tubespec::model::{rel_dist, EndCondition, PhysicalParams, ProblemSpec};
use tubespec::pencil::{oracle_spectrum, DEFAULT_DEGREE};
use tubespec::roots::{find_spectrum, rhp_cap, winding_number, EigenvalueRecord, SearchRegion, SearchTarget};

use crate::config::Suite;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Counts towards the exit status.
    pub gated: bool,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub spec: ProblemSpec,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn new(seed: u64, spec: ProblemSpec, suites: Vec<SuiteReport>) -> Self {
        let passed = suites.iter().flat_map(|s| &s.checks).all(|c| !c.gated || c.passed);
        Self { seed, spec, passed, suites }
    }
}

fn check(name: &str, gated: bool, passed: bool, detail: Value) -> Check {
    Check { name: name.to_string(), gated, passed, detail }
}

pub const DISSIPATIVITY_STATES: usize = 200;
pub const ROUND_TRIP_STATES: usize = 50;
pub const MAX_STATE_DEGREE: usize = 8;
/// `lhs <= DISSIPATIVITY_TOL * scale`
pub const DISSIPATIVITY_TOL: f64 = 1e-10;
/// `|lhs - rhs| <= IDENTITY_TOL * (1 + |rhs|)`
pub const IDENTITY_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const LINEARITY_TOL: f64 = 1e-10;
pub const EIGEN_TOL: f64 = 1e-6;
/// First upper-half-plane eigenvalues compared against the collocation oracle.
pub const ORACLE_COUNT: usize = 12;
pub const ORACLE_TOL: f64 = 1e-5;
/// Tolerance for the two largest of the compared eigenvalues.
pub const ORACLE_TOL_LARGEST: f64 = 1e-3;
/// `Re lambda <= LHP_TOL * (1 + |lambda|)`
pub const LHP_TOL: f64 = 1e-8;

/// Space used by the energy suite and whether it comes from the spec itself.
pub fn energy_space(spec: &ProblemSpec) -> Result<(EnergySpace, bool), CliError> {
    match EnergySpace::new(spec) {
        Ok(s) => Ok((s, true)),
        Err(_) => Ok((EnergySpace::uniform(spec.physical, 1.0)?, false)),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DissipativityStats {
    pub states: usize,
    /// Largest `lhs / scale`.
    pub worst_sign: f64,
    /// Largest `|lhs - rhs| / (1 + |rhs|)`.
    pub worst_identity: f64,
    pub passed: bool,
}

pub fn dissipativity(space: &EnergySpace, rng: &mut ChaCha8Rng, states: usize) -> Result<DissipativityStats, CliError> {
    let (mut worst_sign, mut worst_identity, mut passed) = (f64::NEG_INFINITY, 0.0f64, true);
    for _ in 0..states {
        let degree = rng.gen_range(0..=MAX_STATE_DEGREE);
        let x = sample_domain_state(&mut || rng.gen_range(-1.0..1.0), degree)?;
        let d = space.dissipation_identity(&x)?;
        let sign = if d.scale > 0.0 { d.lhs / d.scale } else { d.lhs };
        let ident = (d.lhs - d.rhs).abs() / (1.0 + d.rhs.abs());
        worst_sign = worst_sign.max(sign);
        worst_identity = worst_identity.max(ident);
        passed &= d.lhs <= DISSIPATIVITY_TOL * d.scale && ident <= IDENTITY_TOL;
    }
    Ok(DissipativityStats { states, worst_sign, worst_identity, passed })
}

/// Largest `|A0 (A0^-1 x) - x|_X / |x|_X` over random states.
pub fn round_trip(space: &EnergySpace, rng: &mut ChaCha8Rng, states: usize) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for _ in 0..states {
        let degree = rng.gen_range(0..=MAX_STATE_DEGREE);
        let xt = sample_state(&mut || rng.gen_range(-1.0..1.0), degree)?;
        let back = space.apply_a0(&space.a0_inverse(&xt)?)?;
        let err = space.norm(&back.axpy(Complex64::from(-1.0), &xt), InnerKind::X)?;
        let size = space.norm(&xt, InnerKind::X)?;
        worst = worst.max(if size > 0.0 { err / size } else { err });
    }
    Ok(worst)
}

fn linearity(space: &EnergySpace, rng: &mut ChaCha8Rng, pairs: usize) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = sample_domain_state(&mut || rng.gen_range(-1.0..1.0), MAX_STATE_DEGREE)?;
        let y = sample_domain_state(&mut || rng.gen_range(-1.0..1.0), MAX_STATE_DEGREE)?;
        let (a, b) = (Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)), Complex64::new(rng.gen_range(-2.0..2.0), 0.0));
        let lhs = space.apply_a0(&x.scale(a).axpy(b, &y))?;
        let rhs = space.apply_a0(&x)?.scale(a).axpy(b, &space.apply_a0(&y)?);
        let diff = space.norm(&lhs.axpy(Complex64::from(-1.0), &rhs), InnerKind::X)?;
        let size = space.norm(&lhs, InnerKind::X)?.max(space.norm(&rhs, InnerKind::X)?);
        worst = worst.max(if size > 0.0 { diff / size } else { diff });
    }
    Ok(worst)
}

pub fn energy_suite(spec: &ProblemSpec, seed: u64) -> Result<SuiteReport, CliError> {
    let (space, own) = energy_space(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let weights = if own { "spec" } else { "unit stiffness (spec ends lack positive k02, k04, k12, k14)" };
    let d = dissipativity(&space, &mut rng, DISSIPATIVITY_STATES)?;
    checks.push(check("dissipativity", true, d.passed, json!({ "weights": weights, "stats": d })));
    let rt = round_trip(&space, &mut rng, ROUND_TRIP_STATES)?;
    checks.push(check("a0_inverse_round_trip", true, rt <= ROUND_TRIP_TOL, json!({ "states": ROUND_TRIP_STATES, "worst_relative_error": rt })));
    let lin = linearity(&space, &mut rng, 20)?;
    checks.push(check("a0_linearity", true, lin <= LINEARITY_TOL, json!({ "pairs": 20, "worst_relative_error": lin })));
    if own {
        let found = find_spectrum(spec, &SearchTarget::FirstPairs(2))?;
        let mut rows = Vec::new();
        let mut ok = !found.records.is_empty();
        for r in found.records.iter().filter(|r| r.lambda.im >= 0.0) {
            let mode = eigenfunction(r.lambda, spec, 33)?;
            let res = space.eigen_residual(r.lambda, &space.eigenstate(r.lambda, mode.shape))?;
            ok &= res <= EIGEN_TOL;
            rows.push(json!({ "lambda": [r.lambda.re, r.lambda.im], "relative_residual": res }));
        }
        checks.push(check("eigen_consistency", true, ok, Value::Array(rows)));
    }
    Ok(SuiteReport { suite: "energy".into(), checks })
}

/// Reference `rho` for the exponent sweep: `|rho| = 10`, mid-sector argument.
pub fn lemma_rho() -> Complex64 {
    Complex64::from_polar(10.0, 3.0 * std::f64::consts::PI / 16.0)
}

pub const LEMMA_CSV_HEADER: &str = "abs_rho,m,gap,fitted_exponent";

pub fn lemma_suite(spec: &ProblemSpec) -> Result<(SuiteReport, String), CliError> {
    let diag = lemma_diagnostic(lemma_rho(), &spec.physical)?;
    let mut csv = String::from(LEMMA_CSV_HEADER);
    csv.push('\n');
    for r in &diag.rows {
        csv.push_str(&format!("{},{},{},{}\n", r.abs_rho, r.m, r.gap, r.fitted_exponent));
    }
    let exponents: Vec<f64> = diag.fits.iter().map(|f| f.0).collect();
    let leading = exponents.iter().all(|p| *p >= 0.9);
    let stated: Vec<[f64; 2]> = diag.stated_first_order.iter().map(|w| [w.re, w.im]).collect();
    let checks = vec![
        check("exponents_approach_rho_omega", true, leading, json!({ "fitted_exponents": exponents, "threshold": 0.9 })),
        check(
            "first_order_coefficient",
            false,
            true,
            json!({
                "stated_w_at_s1": stated,
                "measured_magnitudes": diag.fits.iter().map(|f| f.1).collect::<Vec<_>>(),
                "measured_exponents": exponents,
                "second_order_coefficient": diag.second_order_coefficient,
                "third_order_coefficient": diag.third_order_coefficient,
            }),
        ),
    ];
    Ok((SuiteReport { suite: "lemma".into(), checks }, csv))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub determinant: [f64; 2],
    pub oracle: Option<[f64; 2]>,
    pub relative_gap: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub rows: Vec<OracleRow>,
    pub passed: bool,
    pub oracle_degrees: (usize, usize),
}

/// First `count` upper-half-plane eigenvalues from the determinant search,
/// each matched to the nearest confirmed collocation eigenvalue.
pub fn compare_with_oracle(spec: &ProblemSpec, count: usize) -> Result<OracleComparison, CliError> {
    let det = find_spectrum(spec, &SearchTarget::FirstPairs(count))?;
    let oracle = oracle_spectrum(spec, DEFAULT_DEGREE)?;
    let kept: Vec<Complex64> = oracle.kept_values().into_iter().filter(|l| l.im >= -LHP_TOL * (1.0 + l.norm())).collect();
    let mut upper: Vec<Complex64> = det.records.iter().filter(|r| r.lambda.im >= 0.0).map(|r| r.lambda).collect();
    upper.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    upper.truncate(count);
    let n = upper.len();
    let rows: Vec<OracleRow> = upper
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let best = kept.iter().copied().min_by(|a, b| rel_dist(*a, *l).total_cmp(&rel_dist(*b, *l)));
            let gap = best.map_or(f64::INFINITY, |b| rel_dist(b, *l));
            let tolerance = if i + 2 >= n { ORACLE_TOL_LARGEST } else { ORACLE_TOL };
            OracleRow { determinant: [l.re, l.im], oracle: best.map(|b| [b.re, b.im]), relative_gap: gap, tolerance }
        })
        .collect();
    let passed = n == count && rows.iter().all(|r| r.relative_gap <= r.tolerance);
    Ok(OracleComparison { rows, passed, oracle_degrees: oracle.n_used })
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfPlaneReport {
    pub largest_scaled_re: f64,
    pub rhp_winding: i64,
    pub rectangle: [f64; 4],
    pub passed: bool,
}

/// Every eigenvalue in `records` satisfies `Re lambda <= LHP_TOL (1 + |lambda|)`
/// and the winding number over `[x0, R] x [-R, R]` vanishes, with
/// `R = alpha (8 pi)^4` and `x0 = LHP_TOL (1 + R)`.
pub fn left_half_plane(spec: &ProblemSpec, records: &[EigenvalueRecord]) -> Result<HalfPlaneReport, CliError> {
    let largest = records.iter().map(|r| r.lambda.re / (1.0 + r.lambda.norm())).fold(f64::NEG_INFINITY, f64::max);
    let r = rhp_cap(spec.alpha());
    let x0 = LHP_TOL * (1.0 + r);
    let rect = SearchRegion::lambda(Complex64::new(x0, -r), Complex64::new(r, r));
    let w = winding_number(&rect, spec)?;
    Ok(HalfPlaneReport { largest_scaled_re: largest, rhp_winding: w, rectangle: [x0, r, -r, r], passed: largest <= LHP_TOL && w == 0 })
}

pub fn oracle_suite(spec: &ProblemSpec) -> Result<SuiteReport, CliError> {
    let cmp = compare_with_oracle(spec, ORACLE_COUNT)?;
    let mut checks = vec![check("oracle_agreement", true, cmp.passed, serde_json::to_value(&cmp).unwrap_or(Value::Null))];
    if spec.physical.eta == 0.0 {
        let found = find_spectrum(spec, &SearchTarget::FirstPairs(ORACLE_COUNT))?;
        let lhp = left_half_plane(spec, &found.records)?;
        checks.push(check("left_half_plane", true, lhp.passed, serde_json::to_value(&lhp).unwrap_or(Value::Null)));
    }
    Ok(SuiteReport { suite: "oracle".into(), checks })
}

/// Runs the requested suites; the lemma CSV is returned when that suite ran.
pub fn verify(spec: &ProblemSpec, suite: Suite, seed: u64) -> Result<(VerifyReport, Option<String>), CliError> {
    let mut suites = Vec::new();
    let mut lemma_csv = None;
    if matches!(suite, Suite::Energy | Suite::All) {
        suites.push(energy_suite(spec, seed)?);
    }
    if matches!(suite, Suite::Lemma | Suite::All) {
        let (r, csv) = lemma_suite(spec)?;
        suites.push(r);
        lemma_csv = Some(csv);
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        suites.push(oracle_suite(spec)?);
    }
    Ok((VerifyReport::new(seed, *spec, suites), lemma_csv))
}

/// First positive root of `cos x cosh x = 1`, by bisection on `[4, 5]`.
pub fn beam_root() -> f64 {
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

/// Fast invariant smoke suite on built-in specs.
pub fn selfcheck() -> Result<VerifyReport, CliError> {
    let mut checks = Vec::new();

    let beam = ProblemSpec::new(PhysicalParams::new(1e-5, 0.0, 0.0, 0.0), EndCondition::Clamped, EndCondition::Clamped);
    let found = find_spectrum(&beam, &SearchTarget::FirstPairs(1))?;
    let target = beam_root().powi(2);
    let lead = found.records.iter().find(|r| r.lambda.im > 0.0).map(|r| r.lambda);
    let ok = lead.is_some_and(|l| (l.im - target).abs() <= 2e-3 * target && l.re < 0.0);
    checks.push(check("beam_pair", true, ok, json!({ "lambda": lead.map(|l| [l.re, l.im]), "mu1_squared": target })));

    let end = EndCondition::generalized(1.0, 1.0, 1.0, 1.0);
    let gen = ProblemSpec::new(PhysicalParams::new(0.1, 0.4, 4.0, 0.1), end, end);
    let found = find_spectrum(&gen, &SearchTarget::FirstPairs(4))?;
    let paired = found.records.iter().all(|r| found.records.iter().any(|m| rel_dist(m.lambda, r.lambda.conj()) <= 1e-8));
    checks.push(check("conjugate_pairs", true, paired, json!({ "count": found.records.len() })));

    let (space, _) = energy_space(&gen)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let d = dissipativity(&space, &mut rng, 20)?;
    checks.push(check("dissipativity", true, d.passed, serde_json::to_value(d).unwrap_or(Value::Null)));
    let rt = round_trip(&space, &mut rng, 5)?;
    checks.push(check("a0_inverse_round_trip", true, rt <= ROUND_TRIP_TOL, json!({ "worst_relative_error": rt })));

    Ok(VerifyReport::new(0, gen, vec![SuiteReport { suite: "selfcheck".into(), checks }]))
}
