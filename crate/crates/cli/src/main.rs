use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vaftc_cli::commands::{cmd_emit_default, cmd_gains, cmd_run, cmd_verify, RunOptions};
use vaftc_core::engine::Mode;

#[derive(Parser)]
#[command(
    name = "vaftc",
    version,
    about = "Adaptive virtual-actuator fault-tolerant control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one or more scenarios and write trace, metrics and plots
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// nominal_only, faulty_no_va or faulty_with_va
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Scenarios simulated concurrently
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output band used for recovery times
        #[arg(long, value_parser = parse_positive)]
        eps_band: Option<f64>,
    },
    /// Check the Lyapunov certificates of a scenario
    Verify {
        scenario: PathBuf,
        /// Also write conditions.csv into this directory
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the model-matching gains of a scenario
    Gains { scenario: PathBuf },
    /// Write the built-in simulation study as a scenario file (`-` for stdout)
    EmitDefault {
        #[arg(default_value = "-")]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::from_name(s).ok_or_else(|| format!("unknown mode `{s}`"))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match cli.command {
        Command::Run {
            scenarios,
            mode,
            out: out_dir,
            jobs,
            eps_band,
        } => {
            let opts = RunOptions {
                mode,
                eps_band,
                out_dir,
            };
            cmd_run(&scenarios, &opts, jobs, &mut out, &mut err)
        }
        Command::Verify { scenario, out: dir } => {
            cmd_verify(&scenario, dir.as_deref(), &mut out, &mut err)
        }
        Command::Gains { scenario } => cmd_gains(&scenario, &mut out, &mut err),
        Command::EmitDefault { out: path } => cmd_emit_default(&path, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
