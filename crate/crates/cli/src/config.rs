//! Flat `key = value` run configuration.
//!
//! ```text
//! # physical parameters
//! alpha = 0.1
//! beta = 0.4
//! eta = 4
//! delta = 0.1
//! end0 = generalized
//! k01 = 1
//! k02 = 1
//! k03 = 1
//! k04 = 1
//! end1 = clamped
//! workers = 4
//! seed = 7
//! output = out
//! ```
//!
//! `end0`/`end1` take `clamped`, `free`, `hinged`, `guided` or `generalized`;
//! a generalised end needs its four stiffnesses (`k01..k04` at `s = 0`,
//! `k11..k14` at `s = 1`) and any other end must not set them. Unknown or
//! repeated keys are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use tubespec::asymptotics::StudyKind;
use tubespec::model::{EndCondition, PhysicalParams, ProblemSpec};
use tubespec::roots::SearchTarget;

use crate::CliError;

pub const KEYS: [&str; 17] = [
    "alpha", "beta", "eta", "delta", "end0", "end1", "k01", "k02", "k03", "k04", "k11", "k12", "k13", "k14", "workers", "seed", "output",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Energy,
    Lemma,
    Oracle,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "energy" => Ok(Suite::Energy),
            "lemma" => Ok(Suite::Lemma),
            "oracle" => Ok(Suite::Oracle),
            "all" => Ok(Suite::All),
            _ => Err(CliError::Config(format!("unknown suite '{s}' (energy, lemma, oracle, all)"))),
        }
    }
}

pub fn parse_study(s: &str) -> Result<StudyKind, CliError> {
    match s {
        "clamped-limit" => Ok(StudyKind::ClampedLimit),
        "k02" => Ok(StudyKind::K02),
        "beta-eta" => Ok(StudyKind::BetaEta),
        _ => Err(CliError::Config(format!("unknown study '{s}' (clamped-limit, k02, beta-eta)"))),
    }
}

/// `re0,re1,im0,im1`
pub fn parse_region(s: &str) -> Result<SearchTarget, CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("region '{s}' must be four numbers re0,re1,im0,im1")))?;
    let [re0, re1, im0, im1] = parts[..] else {
        return Err(CliError::Config(format!("region '{s}' must be four numbers re0,re1,im0,im1")));
    };
    if !(re0 < re1 && im0 < im1) || parts.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("region '{s}' is empty or not finite")));
    }
    Ok(SearchTarget::Region { re0, re1, im0, im1 })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Spectrum(SearchTarget),
    Asymptote { n_max: u32 },
    Verify(Suite),
    Sweep(StudyKind),
    Selfcheck,
}

/// Everything a run needs, resolved before any computation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub command: Command,
    pub output: PathBuf,
    pub workers: usize,
    pub seed: u64,
    /// The configuration text as read, echoed into SVG output.
    pub echo: String,
}

impl RunConfig {
    /// Combines a parsed file with a command; `env_workers` is `TUBESPEC_WORKERS`.
    pub fn resolve(file: FileConfig, command: Command, env_workers: Option<&str>) -> Result<Self, CliError> {
        Ok(Self {
            workers: resolve_workers(file.workers, env_workers)?,
            spec: file.spec,
            command,
            output: file.output,
            seed: file.seed,
            echo: file.echo,
        })
    }

    /// `selfcheck` needs no configuration file.
    pub fn selfcheck(env_workers: Option<&str>) -> Result<Self, CliError> {
        Ok(Self {
            spec: ProblemSpec::new(PhysicalParams::new(0.1, 0.4, 4.0, 0.1), EndCondition::Clamped, EndCondition::Clamped),
            command: Command::Selfcheck,
            output: PathBuf::from("out"),
            workers: resolve_workers(None, env_workers)?,
            seed: 0,
            echo: String::new(),
        })
    }
}

/// File contents without the command.
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub spec: ProblemSpec,
    pub output: PathBuf,
    pub workers: Option<usize>,
    pub seed: u64,
    pub echo: String,
}

fn number(map: &BTreeMap<String, (usize, String)>, key: &str) -> Result<Option<f64>, CliError> {
    map.get(key)
        .map(|(line, v)| v.parse::<f64>().map_err(|_| CliError::Config(format!("line {line}: {key} = '{v}' is not a number"))))
        .transpose()
}

fn end(map: &BTreeMap<String, (usize, String)>, which: &str, prefix: &str) -> Result<EndCondition, CliError> {
    let ks: Vec<String> = (1..=4).map(|j| format!("{prefix}{j}")).collect();
    let Some((line, name)) = map.get(which) else {
        return Err(CliError::Config(format!("missing key {which}")));
    };
    let simple = match name.as_str() {
        "clamped" => Some(EndCondition::Clamped),
        "free" => Some(EndCondition::Free),
        "hinged" => Some(EndCondition::Hinged),
        "guided" => Some(EndCondition::Guided),
        "generalized" => None,
        other => return Err(CliError::Config(format!("line {line}: unknown end condition '{other}'"))),
    };
    if let Some(e) = simple {
        if let Some(k) = ks.iter().find(|k| map.contains_key(*k)) {
            return Err(CliError::Config(format!("{k} is only valid when {which} = generalized")));
        }
        return Ok(e);
    }
    let mut vals = [0.0; 4];
    for (v, k) in vals.iter_mut().zip(&ks) {
        *v = number(map, k)?.ok_or_else(|| CliError::Config(format!("{which} = generalized needs {k}")))?;
    }
    Ok(EndCondition::generalized(vals[0], vals[1], vals[2], vals[3]))
}

pub fn parse_config(text: &str) -> Result<FileConfig, CliError> {
    let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        if map.insert(k.clone(), (i + 1, v)).is_some() {
            return Err(CliError::Config(format!("line {}: repeated key '{k}'", i + 1)));
        }
    }
    let mut p = [0.0; 4];
    for (v, k) in p.iter_mut().zip(["alpha", "beta", "eta", "delta"]) {
        *v = number(&map, k)?.ok_or_else(|| CliError::Config(format!("missing key {k}")))?;
    }
    let spec = ProblemSpec::new(PhysicalParams::new(p[0], p[1], p[2], p[3]), end(&map, "end0", "k0")?, end(&map, "end1", "k1")?);
    let spec = spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let integer = |key: &str| -> Result<Option<u64>, CliError> {
        map.get(key)
            .map(|(line, v)| v.parse::<u64>().map_err(|_| CliError::Config(format!("line {line}: {key} = '{v}' is not a nonnegative integer"))))
            .transpose()
    };
    let workers = integer("workers")?.map(|w| w as usize);
    if workers == Some(0) {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    Ok(FileConfig {
        spec,
        output: map.get("output").map(|(_, v)| PathBuf::from(v)).unwrap_or_else(|| PathBuf::from("out")),
        workers,
        seed: integer("seed")?.unwrap_or(0),
        echo: text.to_string(),
    })
}

/// Worker count: `TUBESPEC_WORKERS` wins over the file, which wins over the
/// machine's parallelism (capped at 8).
pub fn resolve_workers(file: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    if let Some(e) = env {
        return match e.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("TUBESPEC_WORKERS = '{e}' is not a positive integer"))),
        };
    }
    Ok(file.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8)))
}
