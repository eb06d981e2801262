//! Argument parsing and dispatch.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{cmd_gen, cmd_metrics, cmd_plot, cmd_run, cmd_sweep};
use crate::error::CliError;
use crate::parallel::default_jobs;

/// DC simulator for ISFET readout circuits.
#[derive(Debug, Parser)]
#[command(name = "isfetsim", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bias {
    /// Ideal current sources.
    Ideal,
    /// Widlar mirror from the negative rail.
    Widlar,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the operating point and print node voltages and device regions.
    Run {
        netlist: PathBuf,
        /// Override a setting or model parameter (`key=value`, repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the netlist's sweeps and write a CSV.
    Sweep {
        netlist: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// CSV destination; standard output if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Worker threads (default: available parallelism).
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        jobs: Option<u32>,
    },
    /// Sensitivity and temperature coefficients from a sweep CSV.
    Metrics { csv: PathBuf },
    /// Render a sweep CSV as an SVG of V_O against pH.
    Plot {
        csv: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit a built-in circuit as a netlist.
    Gen {
        /// readout, widlar, divider, diode_connected or single_isfet.
        circuit: String,
        #[arg(long, value_enum, default_value = "ideal")]
        bias: Bias,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let res = match cli.command {
        Command::Run { netlist, set } => cmd_run(&netlist, &set, &mut out),
        Command::Sweep {
            netlist,
            set,
            output,
            jobs,
        } => {
            let jobs = jobs.map_or_else(default_jobs, |j| j as usize);
            cmd_sweep(&netlist, &set, output.as_deref(), jobs, &mut out)
        }
        Command::Metrics { csv } => cmd_metrics(&csv, &mut out),
        Command::Plot { csv, output } => cmd_plot(&csv, output.as_deref(), &mut out),
        Command::Gen {
            circuit,
            bias,
            set,
            output,
        } => cmd_gen(
            &circuit,
            bias == Bias::Widlar,
            &set,
            output.as_deref(),
            &mut out,
        ),
    };
    res?;
    out.flush().map_err(CliError::stdout)
}
