//! Command-line front end.
//!
//! Exit status: 0 success, 1 certification failure, 2 configuration or I/O
//! error, 3 infeasible scenario.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use rltopa::pipeline::{parse_seeds, run_mode, Mode, Outcome, RunOptions};
use rltopa::scenario::Scenario;
use rltopa::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Validate,
    Feasibility,
    Oracle,
    Train,
    Eval,
    Report,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Validate => Mode::Validate,
            ModeArg::Feasibility => Mode::Feasibility,
            ModeArg::Oracle => Mode::Oracle,
            ModeArg::Train => Mode::Train,
            ModeArg::Eval => Mode::Eval,
            ModeArg::Report => Mode::Report,
        }
    }
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn seed_list(text: &str) -> Result<SeedList, String> {
    parse_seeds(text).map(SeedList)
}

/// Flying access point placement: train, certify and report.
#[derive(Debug, Parser)]
#[command(name = "rltopa", version)]
struct Cli {
    mode: ModeArg,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Seeds as `a..b` (inclusive), `a,b,c` or a single value.
    #[arg(long, default_value = "1", value_parser = seed_list)]
    seeds: SeedList,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write full per-step traces and the oracle's per-point table.
    #[arg(long)]
    trace: bool,
    /// Replace the scenario's MCS table with a built-in one.
    #[arg(long)]
    mcs_table: Option<String>,
    /// Worker threads for the oracle and seed runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

const EXIT_CERTIFICATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let scenario = match Scenario::load(&cli.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let scenario = match &cli.mcs_table {
        Some(label) => match scenario.with_mcs_table(label) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_for(&e);
            }
        },
        None => scenario,
    };
    let options = RunOptions {
        out_dir: cli.out,
        seeds: cli.seeds.0,
        trace: cli.trace,
        threads: cli.threads,
    };
    match run_mode(&scenario, cli.mode.into(), &options) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CertificationFailed) => ExitCode::from(EXIT_CERTIFICATION),
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
