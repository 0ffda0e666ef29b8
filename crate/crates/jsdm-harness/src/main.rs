use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jsdm_harness::commands::{self, Overrides};
use jsdm_harness::output::{self, Records};
use jsdm_harness::{HarnessError, Scenario};

#[derive(Parser, Debug)]
#[command(name = "jsdm", version, about = "JSDM massive-MIMO scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV; a manifest is written next to it. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo and sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long = "mc-draws", global = true)]
    mc_draws: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Covariance matrices, eigenvalues and ranks.
    Covariance,
    /// Toeplitz symbol and eigenvalue distributions (ULA).
    Spectrum,
    /// Pre-beamformer dimensions and leakage.
    Prebeam,
    /// Deterministic-equivalent SINRs over the SNR grid.
    Deteq,
    /// Monte Carlo SINRs alongside the det-eq values.
    Montecarlo,
    /// b' sweep and (S', b') slope analysis with training.
    Sweep,
    /// 3D pattern scheduling pipeline.
    Layout3d,
    /// Invariant suites.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Covariance => "covariance",
            Command::Spectrum => "spectrum",
            Command::Prebeam => "prebeam",
            Command::Deteq => "deteq",
            Command::Montecarlo => "montecarlo",
            Command::Sweep => "sweep",
            Command::Layout3d => "layout3d",
            Command::Validate => "validate",
        }
    }
}

fn load(cli: &Cli) -> Result<Scenario, HarnessError> {
    let path = cli.config.as_ref().ok_or_else(|| HarnessError::config("--config is required"))?;
    let mut sc = Scenario::load(path)?;
    Overrides { seed: cli.seed, mc_draws: cli.mc_draws, threads: cli.threads }.apply(&mut sc);
    sc.validate()?;
    Ok(sc)
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let (sc, rec, failed): (Scenario, Records, usize) = if cli.command == Command::Validate && cli.config.is_none() {
        let sc = Scenario::from_toml("id = \"validate\"\n[layout3d]\n")?;
        let (rec, failed) = commands::validate(&sc.id);
        (sc, rec, failed)
    } else {
        let sc = load(cli)?;
        if cli.threads > 0 {
            // sweeps use the global pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
        }
        let (rec, failed) = match cli.command {
            Command::Covariance => (commands::covariance(&sc)?, 0),
            Command::Spectrum => (commands::spectrum(&sc, 512)?, 0),
            Command::Prebeam => (commands::prebeam(&sc)?, 0),
            Command::Deteq => (commands::deteq(&sc)?, 0),
            Command::Montecarlo => (commands::montecarlo(&sc, cli.threads)?, 0),
            Command::Sweep => (commands::sweep(&sc)?, 0),
            Command::Layout3d => (commands::layout3d(&sc)?, 0),
            Command::Validate => commands::validate(&sc.id),
        };
        (sc, rec, failed)
    };
    let out = cli.out.clone().or_else(|| sc.output.as_ref().map(PathBuf::from));
    match out {
        Some(path) => output::write_outputs(&path, &sc, cli.command.name(), &rec.rows)?,
        None => output::write_csv(std::io::stdout().lock(), &rec.rows)?,
    }
    if failed > 0 {
        return Err(HarnessError::ChecksFailed(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
