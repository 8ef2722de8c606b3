//! Scenario-driven verification of twisted Einstein-Scalar-Maxwell
//! configurations: TOML scenario files, deterministic JSON reports and the
//! commands behind the `esm-verify` binary.

pub mod commands;
pub mod error;
pub mod model;
pub mod report;
pub mod scenario;

pub use error::{Result, VerifyError};
pub use model::Overrides;
pub use report::{Outcome, Report, Status};
pub use scenario::Scenario;

/// Verification commands exposed by the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Residuals,
    Duality,
    Quantize,
    Holonomy,
    UfoldDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Residuals => "residuals",
            Command::Duality => "duality",
            Command::Quantize => "quantize",
            Command::Holonomy => "holonomy",
            Command::UfoldDemo => "ufold-demo",
        }
    }
}

/// Runs `command` on `scenario` and wraps the outcome in a report.
pub fn run(command: Command, scenario: &Scenario, overrides: &Overrides, dump_fields: bool, timings: bool) -> Result<Report> {
    let start = std::time::Instant::now();
    let outcome = match command {
        Command::Validate => commands::validate(scenario, overrides)?,
        Command::Residuals => commands::residuals(scenario, overrides, dump_fields)?,
        Command::Duality => commands::duality(scenario, overrides)?,
        Command::Quantize => commands::quantize(scenario, overrides)?,
        Command::Holonomy => commands::holonomy(scenario, overrides)?,
        Command::UfoldDemo => commands::ufold_demo(scenario, overrides)?,
    };
    let timings = timings.then(|| [("total_ms".to_string(), start.elapsed().as_secs_f64() * 1e3)].into_iter().collect());
    Ok(Report {
        command: command.name().to_string(),
        scenario_name: scenario.name().to_string(),
        scenario_hash: scenario.hash.clone(),
        outcome,
        timings,
    })
}
