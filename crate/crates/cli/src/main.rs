use std::path::PathBuf;
use std::process::ExitCode;

use capmod::experiments::{
    cmd_ahlfors, cmd_build, cmd_calibrate, cmd_decay, cmd_duality, cmd_llc, cmd_quotient, cmd_report, ExperimentConfig,
    ExperimentError, ExperimentReport,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "capmod", version, about = "Discrete modulus experiments on the cusp space")]
struct Cli {
    /// TOML configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build Y and X, write the meshes and check structural invariants.
    Build,
    /// Unit-square calibration and the oracle corpus.
    Calibrate,
    /// Stratified ball scan on Y.
    Ahlfors,
    /// Linear local connectivity on seeded triples.
    Llc,
    /// Analytic energy bound and modulus decay in delta.
    Decay,
    /// Cut and curve moduli under cusp refinement.
    Duality,
    /// Moduli on X and on X with E collapsed.
    Quotient,
    /// Consolidate the saved experiment reports.
    Report,
}

fn config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(report: &ExperimentReport) -> i32 {
    for a in &report.assertions {
        println!("{} {} / {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.criterion, a.name, a.detail);
    }
    println!("{} finished in {:.1} s", report.experiment, report.wall_clock_s);
    if report.passed() {
        0
    } else {
        1
    }
}

fn run(cli: &Cli) -> Result<i32, ExperimentError> {
    let cfg = config(cli)?;
    let report = match cli.command {
        Command::Build => cmd_build(&cfg)?,
        Command::Calibrate => cmd_calibrate(&cfg)?,
        Command::Ahlfors => cmd_ahlfors(&cfg)?,
        Command::Llc => cmd_llc(&cfg)?,
        Command::Decay => cmd_decay(&cfg)?,
        Command::Duality => cmd_duality(&cfg)?,
        Command::Quotient => cmd_quotient(&cfg)?,
        Command::Report => {
            let report = cmd_report(&cfg)?;
            print!("{}", report.to_text());
            if !report.missing.is_empty() {
                return Err(ExperimentError::MissingInputs(report.missing));
            }
            return Ok(if report.all_passed() { 0 } else { 1 });
        }
    };
    Ok(summarize(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("capmod: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
