use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand as ClapSubcommand};
use magspec::harness::{self, RunError, RunOptions, Subcommand};

#[derive(Parser)]
#[command(name = "magspec", version, about = "Eigenvalue counting for magnetic Schrodinger-type operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and CSV files.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to MAGSPEC_THREADS, then the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Closed-form intensities against the computed magnetic tensor.
    #[command(name = "gauge-check")]
    GaugeCheck(RunArgs),
    /// Weak-coupling bound state of a 1D well.
    #[command(name = "oned-shallow")]
    OnedShallow(RunArgs),
    /// Ground state under a slowly decaying 1D potential.
    #[command(name = "oned-slowdecay")]
    OnedSlowdecay(RunArgs),
    /// Negative eigenvalues of an inverse-square tail in growing boxes.
    #[command(name = "oned-hardy")]
    OnedHardy(RunArgs),
    /// Landau-level degeneracy on Dirichlet squares and periodic tori.
    #[command(name = "landau")]
    Landau(RunArgs),
    /// Eigenvalues accumulating below the lowest Landau level.
    #[command(name = "accumulate")]
    Accumulate(RunArgs),
    /// Principal terms of the eta-counting integrals.
    #[command(name = "eta-count")]
    EtaCount(RunArgs),
    /// Log-log fit of integrated densities against catalog exponents.
    #[command(name = "exponent-fit")]
    ExponentFit(RunArgs),
    /// Lowest eigenvalues of the 1D operators along the field lines.
    #[command(name = "reduce3d")]
    Reduce3d(RunArgs),
}

impl Command {
    fn split(self) -> (Subcommand, RunArgs) {
        match self {
            Command::GaugeCheck(a) => (Subcommand::GaugeCheck, a),
            Command::OnedShallow(a) => (Subcommand::OnedShallow, a),
            Command::OnedSlowdecay(a) => (Subcommand::OnedSlowdecay, a),
            Command::OnedHardy(a) => (Subcommand::OnedHardy, a),
            Command::Landau(a) => (Subcommand::Landau, a),
            Command::Accumulate(a) => (Subcommand::Accumulate, a),
            Command::EtaCount(a) => (Subcommand::EtaCount, a),
            Command::ExponentFit(a) => (Subcommand::ExponentFit, a),
            Command::Reduce3d(a) => (Subcommand::Reduce3d, a),
        }
    }
}

fn main() -> ExitCode {
    let (sub, args) = Cli::parse().command.split();
    match run(sub, &args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(sub: Subcommand, args: &RunArgs) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let threads = harness::resolve_threads(args.threads)?;
    let status = harness::run(sub, &text, &args.out, RunOptions { seed: args.seed, threads })
        .map_err(|e: RunError| anyhow::anyhow!(e))?;
    let r = &status.report;
    if let Some(err) = &r.error {
        eprintln!("error: {err}");
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    for c in &r.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("report: {}", status.report_path.display());
    Ok(status.exit_code)
}
