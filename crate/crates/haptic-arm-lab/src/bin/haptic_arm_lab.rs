use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use haptic_arm_lab::scenario::{
    apply_override, deserialize_scenario, list_kinds, load_scenario, run_scenario,
    validate_scenario,
};

#[derive(Parser)]
#[command(
    name = "haptic-arm-lab",
    version,
    about = "Scenario harness for the collaborative-arm haptic display simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a previously emitted metadata.json).
    Run {
        scenario: PathBuf,
        /// Output directory for CSV/JSON results and metadata.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override any scenario field by dotted path, e.g.
        /// `params.budget=200` or `controller.gamma=0.8`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Parse and statically validate a scenario file.
    Validate { scenario: PathBuf },
    /// List the available scenario kinds.
    ListScenarios,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run() -> haptic_arm_lab::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for (name, blurb) in list_kinds() {
                println!("{name:<24} {blurb}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            validate_scenario(&s)?;
            println!("ok: {} scenario '{}'", s.kind.name(), scenario.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            scenario,
            out,
            seed,
            overrides,
        } => {
            let text = std::fs::read_to_string(&scenario).map_err(|source| {
                haptic_arm_lab::Error::Io {
                    path: scenario.display().to_string(),
                    source,
                }
            })?;
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| haptic_arm_lab::Error::Parse {
                    file: scenario.display().to_string(),
                    field_path: "<root>".into(),
                    detail: e.to_string(),
                })?;
            // Unwrap a metadata file down to its scenario.
            if value.get("artifact_version").is_some() {
                if let Some(inner) = value.get("scenario") {
                    value = inner.clone();
                }
            }
            for ov in &overrides {
                let (key, raw) = ov.split_once('=').ok_or_else(|| {
                    haptic_arm_lab::Error::InvalidConfig(format!(
                        "override '{ov}' is not KEY=VALUE"
                    ))
                })?;
                apply_override(&mut value, key, raw)?;
            }
            if let Some(seed) = seed {
                apply_override(&mut value, "seed", &seed.to_string())?;
            }
            let s = deserialize_scenario(&scenario.display().to_string(), value)?;
            validate_scenario(&s)?;
            let outcome = run_scenario(&s, &out)?;
            for path in &outcome.outputs {
                println!("wrote {}", path.display());
            }
            let mut failed = 0;
            for check in &outcome.checks {
                let tag = if check.passed { "PASS" } else { "FAIL" };
                println!("[{tag}] {}: {}", check.name, check.detail);
                if !check.passed {
                    eprintln!("failed check: {} ({})", check.name, check.detail);
                    failed += 1;
                }
            }
            if failed == 0 {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
