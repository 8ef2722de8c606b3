use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esm_verify::{commands, run, Command, Overrides, Scenario, VerifyError};

#[derive(Parser, Debug)]
#[command(name = "esm-verify", version, about = "Verify twisted Einstein-Scalar-Maxwell scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check every constructor invariant of the scenario.
    Validate(Common),
    /// Residuals of the Einstein, scalar and Maxwell equations.
    Residuals(Common),
    /// Duality covariance of the residuals under the scenario transformations.
    Duality(Common),
    /// Twisted Dirac quantization of the field strength.
    Quantize(Common),
    /// Monodromy, lattice type and triviality witness.
    Holonomy(Common),
    /// End-to-end U-fold demonstration on the bundled scenario.
    UfoldDemo {
        #[command(flatten)]
        common: Common,
        /// Write the bundled scenario to this path and exit.
        #[arg(long)]
        emit_scenario: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Override a tolerance, e.g. `--tol field_tol=1e-8`.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tolerance)]
    tolerances: Vec<(String, f64)>,
    /// Refine the spacetime grid by this factor.
    #[arg(long)]
    refine: Option<usize>,
    /// Include pointwise residual fields in the report.
    #[arg(long)]
    dump_fields: bool,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let value = value.trim().parse::<f64>().map_err(|e| format!("{value:?}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn execute(cli: Cli) -> Result<i32, VerifyError> {
    let (command, common) = match cli.command {
        Cmd::Validate(c) => (Command::Validate, c),
        Cmd::Residuals(c) => (Command::Residuals, c),
        Cmd::Duality(c) => (Command::Duality, c),
        Cmd::Quantize(c) => (Command::Quantize, c),
        Cmd::Holonomy(c) => (Command::Holonomy, c),
        Cmd::UfoldDemo { common, emit_scenario } => {
            if let Some(path) = emit_scenario {
                std::fs::write(&path, commands::UFOLD_SCENARIO).map_err(|source| VerifyError::Io { path, source })?;
                return Ok(0);
            }
            (Command::UfoldDemo, common)
        }
    };
    let scenario = match (&common.scenario, command) {
        (Some(path), _) => Scenario::load(path)?,
        (None, Command::UfoldDemo) => commands::bundled_ufold()?,
        (None, _) => return Err(VerifyError::schema("--scenario", "this command needs a scenario file")),
    };
    let overrides = Overrides { tolerances: common.tolerances, refine: common.refine };
    let report = run(command, &scenario, &overrides, common.dump_fields, common.timings)?;
    let text = report.to_json();
    match &common.report {
        Some(path) => {
            std::fs::write(path, &text).map_err(|source| VerifyError::Io { path: path.clone(), source })?;
            eprintln!("{}: {}", command.name(), report.outcome.status.as_str());
        }
        None => print!("{text}"),
    }
    Ok(report.outcome.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
