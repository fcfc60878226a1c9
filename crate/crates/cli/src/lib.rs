//! Library half of the `tubespec` command: configuration, subcommands and
//! output writers. The binary only parses arguments and maps errors to exit codes.

pub mod config;
pub mod export;
pub mod suites;

use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use tubespec::asymptotics::{
    canonical_prediction, correction_diagnostic, fit_leading, fit_remainder, lambda_n_predicted, limit_studies, AsymptoticModel, StudyKind, StudyReport,
};
use tubespec::roots::{branch_spectrum, find_spectrum};

pub use config::{parse_config, Command, RunConfig, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Computation(#[from] tubespec::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration errors, 3 for computation and i/o failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Computation(_) | CliError::Io(_) => 3,
        }
    }
}

/// Exit status when every gated check passed, and when one did not.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Runs one subcommand inside a pool of `config.workers` threads.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", config.workers)))?;
    pool.install(|| dispatch(config))
}

fn dispatch(config: &RunConfig) -> Result<Outcome, CliError> {
    let dir = &config.output;
    let spec = &config.spec;
    match &config.command {
        Command::Spectrum(target) => {
            let result = find_spectrum(spec, target)?;
            let meta = &result.search_meta;
            let passed = meta.failures.is_empty() && meta.census_mismatches.is_empty();
            let lambdas: Vec<Complex64> = result.records.iter().map(|r| r.lambda).collect();
            let files = vec![
                export::write(dir, "spectrum.csv", &result.to_csv())?,
                export::write(dir, "spectrum.json", &export::json(&result)?)?,
                export::write(dir, "spectrum.svg", &export::spectrum_svg(&lambdas, &config.echo))?,
            ];
            let summary = format!(
                "{} eigenvalues ({}), {} failures, {} census mismatches",
                result.records.len(),
                meta.target,
                meta.failures.len(),
                meta.census_mismatches.len()
            );
            Ok(Outcome { passed, files, summary })
        }
        Command::Asymptote { n_max } => asymptote(config, *n_max),
        Command::Verify(suite) => {
            let (report, lemma_csv) = suites::verify(spec, *suite, config.seed)?;
            let mut files = vec![export::write(dir, "verify.json", &export::json(&report)?)?];
            if let Some(csv) = lemma_csv {
                files.push(export::write(dir, "lemma.csv", &csv)?);
            }
            let failed: Vec<String> = report
                .suites
                .iter()
                .flat_map(|s| s.checks.iter().filter(|c| c.gated && !c.passed).map(move |c| format!("{}/{}", s.suite, c.name)))
                .collect();
            let summary = if failed.is_empty() { "all gated checks passed".to_string() } else { format!("failed: {}", failed.join(", ")) };
            Ok(Outcome { passed: report.passed, files, summary })
        }
        Command::Sweep(kind) => {
            let report = limit_studies(spec, *kind)?;
            let (passed, why) = study_gate(&report);
            let name = kind.name();
            let files = vec![
                export::write(dir, &format!("study-{name}.csv"), &report.to_csv())?,
                export::write(dir, &format!("study-{name}.json"), &export::json(&json!({ "study": name, "passed": passed, "gate": why, "summary": report.summary }))?)?,
            ];
            Ok(Outcome { passed, files, summary: format!("{name}: {why}") })
        }
        Command::Selfcheck => {
            let report = suites::selfcheck()?;
            let summary = export::json(&report)?;
            Ok(Outcome { passed: report.passed, files: Vec::new(), summary })
        }
    }
}

/// Clamped limit: strictly decreasing gaps with terminal gap at most `1e-3`;
/// `k02`: decay exponent at least `0.9`; beta-eta: the gap decays (positive exponent).
pub fn study_gate(report: &StudyReport) -> (bool, String) {
    let s = &report.summary;
    if !s.missing.is_empty() {
        return (false, format!("missing branches: {}", s.missing.join("; ")));
    }
    match report.kind {
        StudyKind::ClampedLimit => {
            let ok = s.monotone == Some(true) && s.terminal_max <= 1e-3;
            (ok, format!("monotone = {:?}, terminal gap = {:e} (limit 1e-3)", s.monotone, s.terminal_max))
        }
        StudyKind::K02 | StudyKind::BetaEta => {
            let k02 = report.kind == StudyKind::K02;
            match &s.decay {
                Some(fit) => {
                    let ok = if k02 { fit.exponent >= 0.9 } else { fit.exponent > 0.0 };
                    (ok, format!("decay exponent {:.4} (needs {})", fit.exponent, if k02 { ">= 0.9" } else { "> 0" }))
                }
                None => (false, "no decay fit".to_string()),
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct AsymptoteReport {
    model: AsymptoticModel,
    fit_leading: Result<tubespec::asymptotics::FitReport, String>,
    fit_remainder: Result<tubespec::asymptotics::FitReport, String>,
    corrections: Vec<tubespec::asymptotics::CorrectionRow>,
}

pub const ASYMPTOTE_CSV_HEADER: &str = "n,re_rho_predicted,im_rho_predicted,re_lambda_predicted,im_lambda_predicted,re_rho,im_rho,re_lambda,im_lambda";

fn asymptote(config: &RunConfig, n_max: u32) -> Result<Outcome, CliError> {
    let spec = &config.spec;
    let alpha = spec.alpha();
    let model = AsymptoticModel::for_spec(spec);
    let ns: Vec<u32> = (1..=n_max).collect();
    let branches = branch_spectrum(spec, &ns)?;
    let mut csv = String::from(ASYMPTOTE_CSV_HEADER);
    csv.push('\n');
    let (mut computed, mut predicted, mut records) = (Vec::new(), Vec::new(), Vec::new());
    for (n, rec) in &branches {
        let rho_p = canonical_prediction(*n, &model, alpha);
        let lambda_p = lambda_n_predicted(*n, &model, alpha).value;
        predicted.push(rho_p);
        let tail = match rec {
            Some(r) => {
                computed.push(r.rho);
                records.push(*r);
                format!("{},{},{},{}", r.rho.re, r.rho.im, r.lambda.re, r.lambda.im)
            }
            None => ",,,".to_string(),
        };
        csv.push_str(&format!("{n},{},{},{},{},{tail}\n", rho_p.re, rho_p.im, lambda_p.re, lambda_p.im));
    }
    let report = AsymptoteReport {
        model,
        fit_leading: fit_leading(&records, &model).map_err(|e| e.to_string()),
        fit_remainder: fit_remainder(&records, &model).map_err(|e| e.to_string()),
        corrections: correction_diagnostic(&records, &model),
    };
    let dir = &config.output;
    let files = vec![
        export::write(dir, "asymptote.csv", &csv)?,
        export::write(dir, "asymptote.json", &export::json(&report)?)?,
        export::write(dir, "asymptote.svg", &export::overlay_svg(&computed, &predicted, &config.echo))?,
    ];
    let missing = branches.iter().filter(|(_, r)| r.is_none()).count();
    Ok(Outcome { passed: true, files, summary: format!("{} branches, {missing} without a root in their band", branches.len()) })
}
