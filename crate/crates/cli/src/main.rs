//! `evseq`: run anytime-valid sequential tests on streaming data.

mod fail;
mod format;
mod input;
mod plot;
mod run;
mod verify;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fail::{Failure, EXIT_CONFIG};

#[derive(Debug, Parser)]
#[command(name = "evseq", version, about = "Anytime-valid sequential tests with e-values")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Monitor a data stream and write its e-value trajectory.
    Run(run::RunArgs),
    /// Run a verification check and print a JSON report.
    Verify(verify::VerifyArgs),
    /// Render a trajectory file as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Trajectory CSV written by `run`, or - for standard input.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long)]
    output: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn plot_cmd(args: &PlotArgs) -> Result<(), Failure> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::config(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let points = plot::parse_trajectory(&input::read_all(&args.input)?)?;
    std::fs::write(&args.output, plot::render(&points, args.alpha)).map_err(|e| Failure::io(&args.output, e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.cmd {
        Cmd::Run(args) => run::run(args),
        Cmd::Verify(args) => verify::run(args),
        Cmd::Plot(args) => plot_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("evseq: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
