use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tubespec_cli::config::{parse_region, parse_study, FileConfig};
use tubespec_cli::{parse_config, run, CliError, Command, RunConfig, Suite};
use tubespec::roots::SearchTarget;

#[derive(Parser)]
#[command(name = "tubespec", version, about = "Spectra of a damped fluid-conveying tube")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Locate eigenvalues and write spectrum.csv, spectrum.json and spectrum.svg.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Number of conjugate pairs, counted from the smallest modulus.
        #[arg(long, conflicts_with = "region", required_unless_present = "region")]
        pairs: Option<usize>,
        /// Lambda-plane rectangle re0,re1,im0,im1.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
    },
    /// Compare the first branches with their asymptotic prediction.
    Asymptote {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n_max: u32,
    },
    /// Run verification suites and write verify.json.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// energy, lemma, oracle or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Overrides the seed in the configuration file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parameter sweeps: clamped-limit, k02 or beta-eta.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        study: String,
    },
    /// Fast invariant smoke suite.
    Selfcheck,
}

fn load(path: &PathBuf) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn resolve(sub: Sub) -> Result<RunConfig, CliError> {
    let env = std::env::var("TUBESPEC_WORKERS").ok();
    let env = env.as_deref();
    let (path, command, seed) = match sub {
        Sub::Selfcheck => return RunConfig::selfcheck(env),
        Sub::Spectrum { config, pairs, region } => {
            let target = match (pairs, region) {
                (Some(0), _) => return Err(CliError::Config("--pairs must be at least 1".into())),
                (Some(n), _) => SearchTarget::FirstPairs(n),
                (None, Some(r)) => parse_region(&r)?,
                (None, None) => return Err(CliError::Config("spectrum needs --pairs or --region".into())),
            };
            (config, Command::Spectrum(target), None)
        }
        Sub::Asymptote { config, n_max } => {
            if n_max == 0 {
                return Err(CliError::Config("--n-max must be at least 1".into()));
            }
            (config, Command::Asymptote { n_max }, None)
        }
        Sub::Verify { config, suite, seed } => (config, Command::Verify(Suite::parse(&suite)?), seed),
        Sub::Sweep { config, study } => (config, Command::Sweep(parse_study(&study)?), None),
    };
    let mut file = load(&path)?;
    if let Some(s) = seed {
        file.seed = s;
    }
    RunConfig::resolve(file, command, env)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(cli.command).and_then(|config| run(&config));
    match outcome {
        Ok(o) => {
            println!("{}", o.summary);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("tubespec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
