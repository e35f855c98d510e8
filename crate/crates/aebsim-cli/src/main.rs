//! Command-line front end: single runs, parameter sweeps, hazard analysis
//! and scenario validation.
//!
//! Exit codes: 0 when every outcome is Safe (StoppedTooSoon counts as
//! non-fatal), 2 when any run ends in Crash or ConstraintViolated, 3 on a
//! model error. Log verbosity comes from `AEBSIM_LOG` (standard env_logger
//! filter syntax).

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aebsim::monitors::Outcome;
use aebsim::report;
use aebsim::runner::{run_once, run_sweep};
use aebsim::scenarios::{load_scenario_file, load_sweep_file};
use aebsim::stpa;

#[derive(Parser)]
#[command(
    name = "aebsim",
    version,
    about = "Sensor-attack simulation for AEB evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit trace.csv + verdict.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Seed override; defaults to the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a sweep grid and emit sweep.json / sweep.csv / sweep.svg.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        /// Worker threads; 1 forces the sequential path.
        #[arg(long, default_value_t = default_parallelism())]
        parallel: usize,
        /// Base seed for per-cell seed derivation.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hazard analysis commands.
    #[command(subcommand)]
    Stpa(StpaCommand),
    /// Scenario file checks.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

#[derive(Subcommand)]
enum StpaCommand {
    /// Enumerate UCAs, hazard scenarios and attack templates.
    Analyze {
        /// Analysis model: control structure, hazards, rules, hint words.
        #[arg(long)]
        model: PathBuf,
        /// Sensor-attack catalog.
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed one attack template into an operational scenario.
    Concretize {
        /// Template file: a single template or the analyze output array.
        #[arg(long)]
        template: PathBuf,
        /// Template id when the file holds an array.
        #[arg(long)]
        template_id: Option<String>,
        /// Operational scenario exposing attack slots.
        #[arg(long)]
        scenario: PathBuf,
        /// Slot bindings JSON: {"name": [values...]}.
        #[arg(long)]
        slots: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Validate a scenario document against the schema and invariants.
    Validate { file: PathBuf },
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn exit_code_for(outcomes: &[Outcome]) -> u8 {
    if outcomes.contains(&Outcome::ModelError) {
        3
    } else if outcomes
        .iter()
        .any(|o| matches!(o, Outcome::Crash | Outcome::ConstraintViolated))
    {
        2
    } else {
        0
    }
}

fn cmd_run(scenario_path: &Path, seed: Option<u64>, out: &Path) -> Result<u8> {
    let scenario = load_scenario_file(scenario_path)
        .with_context(|| format!("loading {}", scenario_path.display()))?;
    let seed = seed.unwrap_or(scenario.seed);
    ensure_dir(out)?;
    match run_once(&scenario, seed) {
        Ok((trace, verdict)) => {
            report::emit_run(out, &trace, &verdict, &scenario, seed)?;
            println!(
                "{}: {} (min separation {:.3} m, {} ticks)",
                scenario.name,
                verdict.outcome.as_str(),
                verdict.min_separation_m,
                trace.rows.len()
            );
            Ok(exit_code_for(&[verdict.outcome]))
        }
        Err(err) => {
            log::error!("model error: {err}");
            eprintln!("model error: {err}");
            Ok(3)
        }
    }
}

fn cmd_sweep(grid_path: &Path, parallel: usize, seed: Option<u64>, out: &Path) -> Result<u8> {
    let grid =
        load_sweep_file(grid_path).with_context(|| format!("loading {}", grid_path.display()))?;
    let base_seed = seed.unwrap_or(grid.base.seed);
    ensure_dir(out)?;
    let result = run_sweep(&grid, parallel, base_seed)?;
    report::emit_sweep(out, &result)?;
    let mut tally = std::collections::BTreeMap::new();
    for cell in &result.cells {
        *tally.entry(cell.outcome.as_str()).or_insert(0usize) += 1;
    }
    let summary: Vec<String> = tally.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!(
        "{}: {} cells ({})",
        grid.name,
        result.cells.len(),
        summary.join(", ")
    );
    let outcomes: Vec<Outcome> = result.cells.iter().map(|c| c.outcome.clone()).collect();
    Ok(exit_code_for(&outcomes))
}

fn cmd_stpa_analyze(model_path: &Path, catalog_path: &Path, out: &Path) -> Result<u8> {
    let model = stpa::load_model(&std::fs::read_to_string(model_path)?)
        .with_context(|| format!("loading {}", model_path.display()))?;
    let catalog = stpa::load_catalog(&std::fs::read_to_string(catalog_path)?)
        .with_context(|| format!("loading {}", catalog_path.display()))?;
    let result = stpa::analyze(&model, &catalog)?;
    ensure_dir(out)?;
    std::fs::write(
        out.join("ucas.json"),
        serde_json::to_string_pretty(&result.ucas)?,
    )?;
    std::fs::write(
        out.join("hazard_scenarios.json"),
        serde_json::to_string_pretty(&result.hazard_scenarios)?,
    )?;
    std::fs::write(
        out.join("attack_templates.json"),
        serde_json::to_string_pretty(&result.templates)?,
    )?;
    std::fs::write(
        out.join("uncovered.json"),
        serde_json::to_string_pretty(&result.uncovered)?,
    )?;
    std::fs::write(
        out.join("report.txt"),
        stpa::render_report(&result, &catalog),
    )?;
    println!(
        "{} UCAs, {} hazard scenarios, {} attack templates, {} uncovered",
        result.ucas.len(),
        result.hazard_scenarios.len(),
        result.templates.len(),
        result.uncovered.len()
    );
    Ok(0)
}

fn cmd_stpa_concretize(
    template_path: &Path,
    template_id: Option<&str>,
    scenario_path: &Path,
    slots_path: Option<&Path>,
    out: &Path,
) -> Result<u8> {
    let raw = std::fs::read_to_string(template_path)?;
    let template: stpa::AttackScenarioTemplate = match serde_json::from_str(&raw) {
        Ok(single) => single,
        Err(_) => {
            let all: Vec<stpa::AttackScenarioTemplate> = serde_json::from_str(&raw)
                .context("template file is neither a template nor an array of templates")?;
            match template_id {
                Some(id) => all
                    .into_iter()
                    .find(|t| t.id == id)
                    .with_context(|| format!("template '{id}' not found"))?,
                None => bail!("template file holds an array; pass --template-id"),
            }
        }
    };
    let scenario = load_scenario_file(scenario_path)?;
    let slots: aebsim::scenarios::AttackSlots = match slots_path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
            .with_context(|| format!("parsing slots {}", p.display()))?,
        None => Default::default(),
    };
    let concretized = stpa::concretize(&template, &scenario, &slots)?;
    let json = match &concretized {
        stpa::Concretized::Single(s) => serde_json::to_string_pretty(s)?,
        stpa::Concretized::Sweep(g) => serde_json::to_string_pretty(g)?,
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    std::fs::write(out, json)?;
    match concretized {
        stpa::Concretized::Single(_) => println!("wrote runnable scenario to {}", out.display()),
        stpa::Concretized::Sweep(g) => {
            println!(
                "wrote sweep grid ({} cells) to {}",
                g.cell_count(),
                out.display()
            )
        }
    }
    Ok(0)
}

fn cmd_validate(file: &Path) -> Result<u8> {
    match load_scenario_file(file) {
        Ok(scenario) => {
            println!("{}: valid (scenario '{}')", file.display(), scenario.name);
            Ok(0)
        }
        Err(err) => {
            eprintln!("{}: INVALID: {err}", file.display());
            Ok(1)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("AEBSIM_LOG")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            scenario,
            seed,
            out,
        } => cmd_run(scenario, *seed, out),
        Command::Sweep {
            grid,
            parallel,
            seed,
            out,
        } => cmd_sweep(grid, *parallel, *seed, out),
        Command::Stpa(sub) => match sub {
            StpaCommand::Analyze {
                model,
                catalog,
                out,
            } => cmd_stpa_analyze(model, catalog, out),
            StpaCommand::Concretize {
                template,
                template_id,
                scenario,
                slots,
                out,
            } => cmd_stpa_concretize(
                template,
                template_id.as_deref(),
                scenario,
                slots.as_deref(),
                out,
            ),
        },
        Command::Scenario(sub) => match sub {
            ScenarioCommand::Validate { file } => cmd_validate(file),
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
