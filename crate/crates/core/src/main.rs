use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twrc::harness::{run, write_table, ExperimentConfig, ExperimentKind};
use twrc::{Error, Result};

/// Two-way relay channel simulator.
#[derive(Debug, Parser)]
#[command(name = "twrc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base seed; every operating point derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// CSV destination (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// `key = value` file applied on top of the experiment defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Packets (or channel draws) per operating point.
    #[arg(long, global = true)]
    packets: Option<u64>,

    /// Extra overrides, e.g. `--set ebn0_db=0,5,10`. Applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Packet error rate against Eb/N0 and gain ratio.
    PerSweep,
    /// Symbol error rate against Eb/N0.
    SerSweep,
    /// Simulated HDMF SER next to the closed-form average.
    TheoryVsSim,
    /// Mean queue lengths from the Markov model and from simulation.
    Queue,
    /// Relay scheme frequencies next to their closed forms.
    SelectProbs,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::PerSweep => ExperimentKind::PerSweep,
            Command::SerSweep => ExperimentKind::SerSweep,
            Command::TheoryVsSim => ExperimentKind::TheoryVsSim,
            Command::Queue => ExperimentKind::QueueAnalysis,
            Command::SelectProbs => ExperimentKind::SelectionProbs,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let kind = cli.command.kind();
    let mut cfg = ExperimentConfig::defaults(kind);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
        if cfg.kind != kind {
            return Err(Error::Config(format!(
                "config file names experiment '{}' but subcommand is '{kind}'",
                cfg.kind
            )));
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(packets) = cli.packets {
        cfg.packets = packets;
    }
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{o}' is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.kind = kind;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = build_config(cli)?;
    let table = run(&cfg)?;
    let io_err = |e: io::Error| Error::Config(format!("cannot write output: {e}"));
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            write_table(&table, &mut w)?;
            w.flush().map_err(io_err)
        }
        None => write_table(&table, io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twrc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
