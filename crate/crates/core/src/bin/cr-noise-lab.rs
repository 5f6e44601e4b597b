use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use cr_noise_lab::cli::{self, Command, Overrides};
use cr_noise_lab::config::{self, RunConfig};
use cr_noise_lab::spectral::DbConvention;
use cr_noise_lab::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Mode frequencies, shapes, labels and Q
    Modes,
    /// Time-domain run: time series CSV plus band-power summary
    Simulate,
    /// Time-domain run: Welch spectra of both resonators plus summary
    Psd,
    /// Thermomechanical and readout noise budget
    Budget,
    /// Output resolution and minimum detectable stiffness
    Resolution,
    /// Budget, resolution and optional noise floor for each sweep.kc value
    Sweep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Db {
    /// 20*log10 of the power quantity
    Paper,
    /// 10*log10 of the power quantity
    Power,
}

#[derive(Debug, Parser)]
#[command(name = "cr-noise-lab", version, about = "Noise analysis for weakly coupled MEMS resonator pairs", after_long_help = config::key_help())]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Configuration file (`key = value` lines)
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped configuration: paper-reference or uncoupled-demo
    #[arg(long)]
    preset: Option<String>,
    /// Noise seed; overrides forcing.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// dB convention of summaries; overrides analysis.db_convention
    #[arg(long, value_enum)]
    db_convention: Option<Db>,
}

fn load(args: &Args) -> Result<RunConfig, Error> {
    match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::load(path),
        (None, Some(name)) => {
            let text = config::presets::get(name).ok_or_else(|| Error::Config {
                key: "--preset".into(),
                reason: format!("unknown preset `{name}` (known: {})", config::presets::NAMES.join(", ")),
            })?;
            RunConfig::parse(text)
        }
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = match args.command {
        Cmd::Modes => Command::Modes,
        Cmd::Simulate => Command::Simulate,
        Cmd::Psd => Command::Psd,
        Cmd::Budget => Command::Budget,
        Cmd::Resolution => Command::Resolution,
        Cmd::Sweep => Command::Sweep,
    };
    let overrides = Overrides {
        seed: args.seed,
        out: args.out.clone(),
        db_convention: args.db_convention.map(|d| match d {
            Db::Paper => DbConvention::Paper20Log,
            Db::Power => DbConvention::Power10Log,
        }),
    };
    let result = load(&args).and_then(|cfg| cli::run(command, cfg, &overrides));
    match result {
        Ok(out) => {
            print!("{}", out.text);
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = cli::exit_code(&e);
            let kind = if code == 1 {
                "invalid input"
            } else {
                "numerical failure"
            };
            eprintln!("error ({kind}): {e}");
            ExitCode::from(code as u8)
        }
    }
}
