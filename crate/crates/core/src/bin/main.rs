use std::path::PathBuf;
use std::process::ExitCode;

use bethe_loops::harness::{emit_results, run, Command, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bethe-loops",
    version,
    about = "Bethe free energy, loop series and polymer expansion experiments on regular LDPC ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Loop-series identity residuals
    Identity(Flags),
    /// Bethe gap |(1/n) ln Z - f_Bethe| versus n
    Theorem1(Flags),
    /// Gap after the small-polymer correction
    Theorem2(Flags),
    /// Activity bounds, degree inequality and the Brydges functional
    Bounds(Flags),
    /// Type census of generalized loops
    Census(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    r: Option<String>,
    /// Comma-separated list of block lengths
    #[arg(long)]
    n: Option<String>,
    /// Flip probability (clears --h)
    #[arg(long, conflicts_with = "h")]
    p: Option<String>,
    /// Field magnitude (clears --p)
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    zeta0: Option<String>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Record wall-clock time per trial
    #[arg(long)]
    timing: bool,
    /// Report free energies and gaps in bits
    #[arg(long)]
    bits: bool,
}

impl Flags {
    fn config(&self) -> bethe_loops::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.p.is_some() {
            cfg.h = None;
        }
        if self.h.is_some() {
            cfg.p = None;
        }
        let pairs = [
            ("l", &self.l),
            ("r", &self.r),
            ("n", &self.n),
            ("p", &self.p),
            ("h", &self.h),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("kappa", &self.kappa),
            ("lambda", &self.lambda),
            ("zeta0", &self.zeta0),
            ("out", &self.out),
            ("format", &self.format),
            ("workers", &self.workers),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.timing {
            cfg.timing = true;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Cmd::Identity(f) => (Command::Identity, f),
        Cmd::Theorem1(f) => (Command::Theorem1, f),
        Cmd::Theorem2(f) => (Command::Theorem2, f),
        Cmd::Bounds(f) => (Command::Bounds, f),
        Cmd::Census(f) => (Command::Census, f),
    };
    let result = flags.config().and_then(|cfg| {
        let mut report = run(&cfg, command)?;
        if flags.bits {
            report = report.into_bits();
        }
        emit_results(&report, cfg.format, cfg.out.as_deref())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
