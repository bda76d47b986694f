use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use flyhand_core::error::SimError;
use flyhand_core::scenario::{
    emit_outputs, parse_scenario, preset_names, preset_source, run_scenario, ConfigError, ScenarioConfig,
    SummaryMetrics,
};

const EXIT_INVALID: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_PASSIVITY: u8 = 3;

/// Simulator for a quadrotor carrying a delta manipulator and an
/// underactuated gripper that grasps an object off a wall.
#[derive(Parser)]
#[command(name = "flyhand", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the trace, metrics and plots.
    Run(RunArgs),
    /// Check a scenario file without running it.
    Validate(Source),
    /// List the built-in scenarios, or print one with --show.
    Presets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceGroup {
    /// Scenario file (TOML).
    file: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    source: SourceGroup,
    /// Override the integration step, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the run length, s.
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: Source,
    /// Output directory; defaults to the scenario's own setting.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Exit with status 3 when the passivity check fails.
    #[arg(long)]
    strict_passivity: bool,
    /// Skip the SVG plots.
    #[arg(long)]
    no_plots: bool,
}

enum Failure {
    Invalid(anyhow::Error),
    Diverged(SimError),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(e)
    }
}

fn load(src: &Source) -> Result<ScenarioConfig, Failure> {
    let (text, origin) = match (&src.source.file, &src.source.preset) {
        (Some(path), _) => (
            std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?,
            path.display().to_string(),
        ),
        (None, Some(name)) => {
            let text = preset_source(name).with_context(|| {
                format!("unknown preset {name:?}; available: {}", preset_names().collect::<Vec<_>>().join(", "))
            })?;
            (text.to_string(), format!("preset {name}"))
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let mut cfg = parse_scenario(&text).with_context(|| origin.clone())?;
    if src.dt.is_some() || src.t_end.is_some() {
        cfg.sim.dt = src.dt.unwrap_or(cfg.sim.dt);
        cfg.sim.t_end = src.t_end.unwrap_or(cfg.sim.t_end);
        let errors = cfg.validate();
        if !errors.is_empty() {
            return Err(anyhow::Error::new(ConfigError::Invalid(errors))
                .context(format!("{origin} with command-line overrides"))
                .into());
        }
    }
    Ok(cfg)
}

fn print_summary(m: &SummaryMetrics) {
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |t| format!("{t:.3} s"));
    println!("scenario {}: {} steps, {:.3} s", m.name, m.steps, m.duration);
    println!("missions: {}", m.missions.join(" -> "));
    println!(
        "contact: {}, grasp secured: {}, detach: {}",
        opt(m.contact_time),
        opt(m.grasp_secured_time),
        opt(m.detach_time)
    );
    for p in &m.rms {
        println!(
            "rms {:>12}: uav [{:.2e} {:.2e} {:.2e}] m, ee [{:.2e} {:.2e} {:.2e}] m",
            p.mission, p.uav[0], p.uav[1], p.uav[2], p.ee[0], p.ee[1], p.ee[2]
        );
    }
    if let Some(d) = m.max_dock_deviation {
        println!("max dock deviation: {d:.4} m");
    }
    println!("max attitude error: {:.3} deg", m.max_attitude_error_deg);
    let p = &m.passivity;
    println!(
        "passivity: {} ({} violations, {} impact steps)",
        if p.passed { "pass" } else { "FAIL" },
        p.violations.len(),
        p.impact_steps
    );
}

fn run(args: &RunArgs) -> Result<bool, Failure> {
    let mut cfg = load(&args.scenario)?;
    if args.no_plots {
        cfg.output.plots = false;
    }
    let trace = run_scenario(&cfg).map_err(Failure::Diverged)?;
    let dir = args.out_dir.clone().unwrap_or_else(|| Path::new(&cfg.output.dir).to_path_buf());
    let files = emit_outputs(&trace, &cfg, &dir).map_err(anyhow::Error::new)?;
    print_summary(&files.summary);
    println!("wrote {}", files.csv.display());
    println!("wrote {}", files.metrics.display());
    for p in &files.plots {
        println!("wrote {}", p.display());
    }
    Ok(files.summary.passivity.passed)
}

fn execute(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Run(args) => {
            let passed = run(&args)?;
            if args.strict_passivity && !passed {
                eprintln!("error: passivity check failed");
                return Ok(ExitCode::from(EXIT_PASSIVITY));
            }
        }
        Command::Validate(src) => {
            let cfg = load(&src)?;
            println!("{}: ok ({} steps)", cfg.name, cfg.sim_config().steps());
        }
        Command::Presets { show: None } => {
            for name in preset_names() {
                println!("{name}");
            }
        }
        Command::Presets { show: Some(name) } => {
            let text = preset_source(&name).with_context(|| format!("unknown preset {name:?}"))?;
            print!("{}", text.trim_start());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Diverged(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DIVERGED)
        }
    }
}
