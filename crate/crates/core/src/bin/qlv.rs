use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlv::config::{
    cmd_fit_icdf, cmd_price_classical, cmd_resources, cmd_simulate, cmd_validate, error_value, render, Format, IcdfSection,
    RunConfig, RunOptions,
};
use qlv::resources::ResourceParams;
use qlv::{Error, Result};

#[derive(Parser)]
#[command(name = "qlv", version, about = "Local-volatility pricing circuits: simulation, classical reference and resource estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Skip this many whole paths of the generator.
    #[arg(long, global = true, default_value_t = 0, allow_hyphen_values = true)]
    seed_offset: i64,
    /// Simulator support and enumeration limit.
    #[arg(long, global = true, default_value_t = qlv::circuit::DEFAULT_BUDGET)]
    budget: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Classical Monte Carlo price of the configured model.
    PriceClassical,
    /// Build and simulate the configured circuit.
    Simulate,
    /// Closed-form qubit and T-counts of both circuits.
    Resources {
        #[arg(long, default_value_t = 16)]
        n_samp: u64,
        #[arg(long, default_value_t = 16)]
        n_dig: u64,
        #[arg(long, default_value_t = 64)]
        n_prn: u64,
        #[arg(long, default_value_t = 109)]
        n_icdf: u64,
        #[arg(long, default_value_t = 360)]
        n_t: u64,
        #[arg(long, default_value_t = 5)]
        n_s: u64,
    },
    /// Fit the piecewise-cubic inverse normal CDF; the fit goes to --out.
    FitIcdf {
        #[arg(long, default_value_t = 1e-6)]
        target_err: f64,
        #[arg(long, default_value_t = qlv::icdf::DEFAULT_MAX_INTERVALS)]
        max_intervals: usize,
    },
    /// Check a configuration without pricing.
    Validate,
}

fn need_config(c: &Common) -> Result<RunConfig> {
    let path = c.config.as_ref().ok_or_else(|| Error::Config("this command needs --config PATH".into()))?;
    RunConfig::load(path)
}

fn run(cli: &Cli) -> Result<bool> {
    let c = &cli.common;
    let opts = RunOptions {
        seed_offset: c.seed_offset,
        budget: c.budget,
    };
    let file_cfg = match (&cli.command, &c.config) {
        (Command::Resources { .. } | Command::FitIcdf { .. }, None) => None,
        _ => Some(need_config(c)?),
    };
    let format = match c.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None => file_cfg.as_ref().map(|f| f.output.format).unwrap_or_default(),
    };
    let out = c.out.clone().or_else(|| file_cfg.as_ref().and_then(|f| f.output.path.clone()));
    let mut ok = true;
    let (value, table) = match &cli.command {
        Command::PriceClassical => (cmd_price_classical(file_cfg.as_ref().unwrap(), &opts)?.to_value()?, None),
        Command::Simulate => (cmd_simulate(file_cfg.as_ref().unwrap(), &opts)?.to_value()?, None),
        Command::Validate => {
            let env = cmd_validate(file_cfg.as_ref().unwrap(), &opts)?;
            ok = env.result.passed;
            (env.to_value()?, None)
        }
        Command::Resources { n_samp, n_dig, n_prn, n_icdf, n_t, n_s } => {
            let p = ResourceParams {
                n_samp: *n_samp,
                n_dig: *n_dig,
                n_prn: *n_prn,
                n_icdf: *n_icdf,
                n_t: *n_t,
                n_s: *n_s,
            };
            let env = cmd_resources(&p)?;
            let table = env.result.table.clone();
            (env.to_value()?, Some(table))
        }
        Command::FitIcdf { target_err, max_intervals } => {
            let spec = IcdfSection {
                target_err: *target_err,
                max_intervals: *max_intervals,
                ..file_cfg.map(|f| f.engine.icdf).unwrap_or_default()
            };
            let (approx, env) = cmd_fit_icdf(&spec, out.as_deref())?;
            eprintln!(
                "{} intervals, max error {:.3e}",
                env.result.n_intervals, env.result.max_err
            );
            if out.is_none() {
                print!("{}", approx.to_json()?);
                println!();
            }
            return Ok(true);
        }
    };
    let text = render(&value, format)?;
    match out {
        Some(p) => std::fs::write(&p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    if let Some(t) = table {
        eprint!("{t}");
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&error_value(&e)).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(2)
        }
    }
}
