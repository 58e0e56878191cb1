use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbem::experiment::{
    cmd_compare, cmd_optimal_points, cmd_parity, cmd_sweep_s, cmd_table, profile_table,
    ExperimentConfig, Report,
};
use rbem::Error;

/// Radial boundary element experiments.
#[derive(Parser, Debug)]
#[command(name = "rbem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Zeros of the Err0 quadrature error and the chosen offset.
    OptimalPoints {
        #[arg(long, default_value_t = 16)]
        nodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write Err0, Err1, Err2 sampled on (0, 1) to this file.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Flux error as a function of the source offset s.
    SweepS(Common),
    /// Interior errors over basis x N x boundary condition.
    Table(Common),
    /// Radial against linear BEM for advection-diffusion.
    Compare(Common),
    /// Plain quadrature against the graded reference integrator.
    Parity(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    pde: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    elements: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    /// `auto` or a value in (0, 1).
    #[arg(long)]
    offset: Option<String>,
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    exact: Option<String>,
    /// Dense solver: auto, lu or rrqr.
    #[arg(long)]
    solver: Option<String>,
    /// Boundary integrator: gauss or reference.
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated offsets for sweep-s.
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated bases for table.
    #[arg(long)]
    bases: Option<String>,
    /// Comma-separated element counts for table and compare.
    #[arg(long)]
    element_list: Option<String>,
    /// Comma-separated boundary conditions for table.
    #[arg(long)]
    bcs: Option<String>,
    /// Comma-separated h1:h2 pairs for compare.
    #[arg(long, allow_hyphen_values = true)]
    h_values: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("domain", &self.domain),
            ("pde", &self.pde),
            ("h1", &self.h1),
            ("h2", &self.h2),
            ("lambda", &self.lambda),
            ("basis", &self.basis),
            ("elements", &self.elements),
            ("nodes", &self.nodes),
            ("offset", &self.offset),
            ("bc", &self.bc),
            ("exact", &self.exact),
            ("solver", &self.solver),
            ("integrator", &self.integrator),
            ("out", &self.out),
            ("grid", &self.grid),
            ("bases", &self.bases),
            ("element-list", &self.element_list),
            ("bcs", &self.bcs),
            ("h-values", &self.h_values),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.apply(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn finish(report: Report, out: Option<&std::path::Path>) -> Result<(), Error> {
    report.table.emit(out)?;
    for n in &report.notes {
        eprintln!("{n}");
    }
    for f in &report.failures {
        eprintln!("check failed: {f}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::OptimalPoints {
            nodes,
            out,
            profile,
        } => {
            let (report, _, prof) = cmd_optimal_points(nodes)?;
            if let Some(p) = profile {
                profile_table(&prof).emit(Some(&p))?;
            }
            finish(report, out.as_deref())
        }
        Command::SweepS(c) => {
            let cfg = c.resolve()?;
            finish(cmd_sweep_s(&cfg)?, cfg.out.as_deref())
        }
        Command::Table(c) => {
            let cfg = c.resolve()?;
            finish(cmd_table(&cfg)?, cfg.out.as_deref())
        }
        Command::Compare(c) => {
            let cfg = c.resolve()?;
            finish(cmd_compare(&cfg)?, cfg.out.as_deref())
        }
        Command::Parity(c) => {
            let cfg = c.resolve()?;
            finish(cmd_parity(&cfg)?, cfg.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
