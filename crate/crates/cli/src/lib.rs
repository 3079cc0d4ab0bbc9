//! Scenario runner and verification harness.
//!
//! A scenario is one TOML file whose `kind` selects the experiment; every
//! run writes its artifacts, a `report.txt` echoing the resolved constants,
//! and a `manifest.txt` with the SHA-256 of each artifact.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
pub mod verify;

use std::path::{Path, PathBuf};

use config::{Scenario, Tier};
use error::{CliError, CliResult};
use output::{Outputs, REPORT};
use verify::{Fault, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Solve,
    Thermo,
    Measure,
    Compare,
    Verify,
}

impl Command {
    /// Scenario kinds the subcommand runs.
    pub fn kinds(self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["langevin", "fokker-planck", "madelung"],
            Command::Solve => &["schrodinger"],
            Command::Thermo => &["thermo-pool"],
            Command::Measure => &["measurement"],
            Command::Compare => &["compare"],
            Command::Verify => &["verify"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Solve => "solve",
            Command::Thermo => "thermo",
            Command::Measure => "measure",
            Command::Compare => "compare",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub tier: Option<Tier>,
    pub fault: Option<Fault>,
    /// Restricts verify to checks whose id contains this text.
    pub only: Option<String>,
}

/// Loads and validates a scenario for `command`.
pub fn load_scenario(command: Command, path: &Path, seed: Option<u64>) -> CliResult<Scenario> {
    let mut scenario = config::load(path)?;
    if !command.kinds().contains(&scenario.kind()) {
        return Err(CliError::Config(format!(
            "`{}` does not run scenarios of kind `{}` (expected one of: {})",
            command.name(),
            scenario.kind(),
            command.kinds().join(", ")
        )));
    }
    scenario.finalize(seed)?;
    Ok(scenario)
}

/// Runs one invocation, writes its artifacts and returns the report text.
pub fn execute(inv: &Invocation) -> CliResult<String> {
    if inv.command == Command::Verify {
        return verify(inv);
    }
    let path = inv.config.as_deref().ok_or_else(|| CliError::Config("missing `--config`".into()))?;
    let scenario = load_scenario(inv.command, path, inv.seed)?;
    let out = scenarios::run(&scenario)?;
    out.finish(&inv.out)?;
    let report = String::from_utf8_lossy(out.get(REPORT).unwrap_or_default()).into_owned();
    if matches!(scenario, Scenario::Compare(_)) && !scenarios::compare_passed(&out) {
        eprint!("{report}");
        return Err(CliError::Invariant { failed: 1, total: 1 });
    }
    Ok(report)
}

fn verify(inv: &Invocation) -> CliResult<String> {
    let from_file = match &inv.config {
        Some(path) => match load_scenario(Command::Verify, path, inv.seed)? {
            Scenario::Verify(v) => v.tier,
            _ => unreachable!("kind checked on load"),
        },
        None => None,
    };
    let settings = Settings { tier: inv.tier.or(from_file).unwrap_or_default(), fault: inv.fault };
    let suite = verify::run_suite(&settings, inv.only.as_deref());
    let text = suite.render();
    let mut out = Outputs::new();
    out.add(REPORT, text.clone().into_bytes());
    out.finish(&inv.out)?;
    match suite.failed() {
        0 => Ok(text),
        failed => {
            eprint!("{text}");
            Err(CliError::Invariant { failed, total: suite.results.len() })
        }
    }
}
