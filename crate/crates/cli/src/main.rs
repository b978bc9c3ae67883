//! `sheafbranch`: branch-number heat maps and property checks for binary images.
//!
//! Exit status: 0 on success, 2 on bad usage, 10 on I/O errors, 11 on
//! unparsable input, 12 on invalid input, 13 when a property check fails.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use sheafbranch::branch::Stride;
use sheafbranch::checks::{run_checks, CheckConfig};
use sheafbranch::imageio::{build_filtration, ThresholdMode};
use sheafbranch::persistence::{format_diagrams, reduction_diagrams};
use sheafbranch::pipeline::{load_input, parse_sizes, run, Emit, InputFormat, RunConfig};
use sheafbranch::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "sheafbranch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute local branch numbers over sliding windows and write artifacts.
    Run(RunArgs),
    /// Run the randomized property suites.
    Check(CheckArgs),
    /// Print the persistence diagrams of a filtration given as nested images.
    Diagram(DiagramArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// pbm, pbm-ascii, pbm-binary, csv, pgm or gray-csv.
    #[arg(long, default_value = "pbm", value_parser = parse_with::<InputFormat>)]
    format: InputFormat,
    /// Threshold for grayscale inputs: `mean` or `fixed:<t>`.
    #[arg(long, default_value = "mean", value_parser = parse_with::<ThresholdMode>)]
    threshold: ThresholdMode,
    /// Comma-separated window sizes.
    #[arg(long, default_value = "10,20,30", value_parser = parse_sizes_arg)]
    windows: Sizes,
    /// `tile` or a positive step in pixels.
    #[arg(long, default_value = "tile", value_parser = parse_with::<Stride>)]
    stride: Stride,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of pd, heatmap, mask, report.
    #[arg(long, default_value = "heatmap,mask,report", value_parser = parse_with::<Emit>)]
    emit: Emit,
    /// Require a 100x100 input.
    #[arg(long)]
    demo: bool,
}

#[derive(Clone)]
struct Sizes(Vec<usize>);

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random filtrations for the Betti-number suite.
    #[arg(long, default_value_t = 200)]
    filtrations: usize,
    /// Small filtrations for the exhaustive coincidence suites.
    #[arg(long, default_value_t = 100)]
    small: usize,
    #[arg(long, default_value_t = 200)]
    patches: usize,
    /// Corrupt one restriction matrix before the functoriality suite.
    #[arg(long)]
    corrupt_restriction: bool,
}

#[derive(Args)]
struct DiagramArgs {
    /// Levels 1..n, each containing the previous one.
    #[arg(required = true)]
    levels: Vec<PathBuf>,
    #[arg(long, default_value = "pbm", value_parser = parse_with::<InputFormat>)]
    format: InputFormat,
    #[arg(long, default_value = "mean", value_parser = parse_with::<ThresholdMode>)]
    threshold: ThresholdMode,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sizes_arg(s: &str) -> Result<Sizes, String> {
    parse_sizes(s).map(Sizes).map_err(|e| e.to_string())
}

#[derive(Debug)]
struct PropertyFailure(usize);

impl std::fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} property suite(s) failed", self.0)
    }
}

impl std::error::Error for PropertyFailure {}

fn run_cmd(args: RunArgs) -> anyhow::Result<()> {
    let config = RunConfig {
        input: args.input,
        format: args.format,
        threshold: args.threshold,
        windows: args.windows.0,
        stride: args.stride,
        out: args.out,
        emit: args.emit,
        demo: args.demo,
    };
    let summary = run(&config)?;
    let reported = summary.windows.iter().filter(|w| w.inner_black > 0).count();
    println!(
        "{}x{} image, {} windows ({} with content), max heat {}, {} files in {}",
        summary.image.width(),
        summary.image.height(),
        summary.windows.len(),
        reported,
        summary.heat_map.max(),
        summary.written.len(),
        config.out.display()
    );
    Ok(())
}

fn check_cmd(args: CheckArgs) -> anyhow::Result<()> {
    let config = CheckConfig {
        seed: args.seed,
        filtrations: args.filtrations,
        small_filtrations: args.small,
        patches: args.patches,
        corrupt_restriction: args.corrupt_restriction,
    };
    let reports = run_checks(&config);
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("seed {}: {} of {} suites passed", config.seed, reports.len() - failed, reports.len());
    if failed > 0 {
        bail!(PropertyFailure(failed));
    }
    Ok(())
}

fn diagram_cmd(args: DiagramArgs) -> anyhow::Result<()> {
    let levels = args
        .levels
        .iter()
        .map(|p| load_input(p, args.format, args.threshold))
        .collect::<Result<Vec<_>, _>>()?;
    let filt = build_filtration(levels).context("building filtration")?;
    print!("{}", format_diagrams(&reduction_diagrams(&filt)));
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<PropertyFailure>().is_some() {
        return 13;
    }
    match err.downcast_ref::<Error>().map(Error::kind) {
        Some(ErrorKind::Io) => 10,
        Some(ErrorKind::Parse) => 11,
        _ => 12,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run_cmd(a),
        Command::Check(a) => check_cmd(a),
        Command::Diagram(a) => diagram_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
