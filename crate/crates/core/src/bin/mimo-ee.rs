//! Command-line front end: sweeps, single-point optimization, PA power
//! fraction and fixed-antenna comparisons, all written as CSV.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use mimo_ee::capacity::{CapacityEngine, Estimator};
use mimo_ee::power::{linear_to_db, pa_fraction_closed_form, SystemParams};
use mimo_ee::sweep::{
    compare_fixed_m, format_float, render_csv, run_sweep, Config, SweepObjective, SweepSpec,
    SweepVariable,
};

#[derive(Debug, Parser)]
#[command(
    name = "mimo-ee",
    version,
    about = "Energy-efficient antenna count for multi-antenna links"
)]
struct Cli {
    /// Run configuration (TOML key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated objectives: exact, bound, relaxed, fixed-m-N.
    #[arg(long, global = true)]
    objective: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every objective across the configured grid.
    Sweep,
    /// Evaluate every objective at the configured operating point.
    Optimize,
    /// Closed-form PA share of total power at the relaxed optimum.
    PaFraction,
    /// Ratio of the optimal EE to the EE with a fixed antenna count.
    CompareFixedM {
        /// Antenna count to compare against; overrides `fixed_m`.
        #[arg(long)]
        m: Option<u32>,
    },
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numerical = e
            .chain()
            .filter_map(|c| c.downcast_ref::<mimo_ee::Error>())
            .any(|c| c.is_numerical());
        if numerical {
            Failure::Numerical(e)
        } else {
            Failure::Config(e)
        }
    }
}

impl From<mimo_ee::Error> for Failure {
    fn from(e: mimo_ee::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_deref()
        .context("--config <path> is required")?;
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        if let Estimator::MonteCarlo { seed: s, .. } = &mut cfg.capacity.estimator {
            *s = seed;
        }
    }
    if let Some(list) = &cli.objective {
        cfg.objectives = list
            .split(',')
            .map(|s| s.trim().parse::<SweepObjective>())
            .collect::<mimo_ee::Result<_>>()?;
    }
    Ok(cfg)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .context("writing to stdout"),
    }
}

/// Operating points: the sweep grid when configured, otherwise the single
/// configured point.
fn operating_points(cfg: &Config) -> Result<Vec<(f64, SystemParams)>> {
    if cfg.sweep_variable.is_some() {
        let spec = cfg.sweep_spec()?;
        Ok((0..spec.grid.len()).map(|i| spec.point(i)).collect())
    } else {
        Ok(vec![(cfg.require_rate()?, cfg.point_params()?)])
    }
}

fn point_spec(cfg: &Config) -> Result<SweepSpec> {
    let params = cfg.point_params()?;
    let spec = SweepSpec {
        variable: SweepVariable::ChannelGainDb,
        grid: vec![linear_to_db(params.channel_gain)],
        fixed_value: cfg.require_rate()?,
        params: cfg.params,
        objectives: cfg.objectives.clone(),
        output_path: None,
        capacity: cfg.capacity,
        search: cfg.search,
        threshold: cfg.threshold,
        execution: cfg.capacity.execution,
    };
    spec.validate()?;
    Ok(spec)
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let cfg = load_config(cli).map_err(Failure::Config)?;
    match &cli.command {
        Command::Sweep | Command::Optimize => {
            let spec = match cli.command {
                Command::Sweep => cfg.sweep_spec()?,
                _ => point_spec(&cfg).map_err(Failure::Config)?,
            };
            let curve = run_sweep(&spec)?;
            let out = cli.out.as_deref().or(spec.output_path.as_deref());
            write_output(out, &render_csv(&curve)?).map_err(Failure::Config)?;
            let failures = curve.failures();
            if failures > 0 {
                return Err(Failure::Numerical(anyhow::anyhow!(
                    "{failures} row(s) failed; see the status column"
                )));
            }
        }
        Command::PaFraction => {
            let mut csv = String::from("rate,gc_db,f_pa\n");
            for (rate, params) in operating_points(&cfg).map_err(Failure::Config)? {
                let f = pa_fraction_closed_form(&params, rate)?;
                csv.push_str(&format!(
                    "{},{},{}\n",
                    format_float(rate),
                    format_float(linear_to_db(params.channel_gain)),
                    format_float(f)
                ));
            }
            write_output(cli.out.as_deref(), csv.as_bytes()).map_err(Failure::Config)?;
        }
        Command::CompareFixedM { m } => {
            let fixed = m.unwrap_or(cfg.fixed_m);
            if fixed == 0 {
                return Err(Failure::Config(anyhow::anyhow!("--m must be >= 1")));
            }
            let engine = CapacityEngine::new(cfg.capacity)?;
            let mut csv = String::from("rate,gc_db,fixed_m,M_opt,eta_opt,eta_fixed,ratio\n");
            for (rate, params) in operating_points(&cfg).map_err(Failure::Config)? {
                let c = compare_fixed_m(rate, &params, fixed, &engine, &cfg.search)?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    format_float(rate),
                    format_float(linear_to_db(params.channel_gain)),
                    fixed,
                    c.optimum.antennas as u64,
                    format_float(c.optimum.eta),
                    format_float(c.fixed.eta),
                    format_float(c.ratio)
                ));
            }
            write_output(cli.out.as_deref(), csv.as_bytes()).map_err(Failure::Config)?;
        }
    }
    Ok(())
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
