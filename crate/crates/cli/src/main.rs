//! conelab: scenario runner for the nonlocal cone laboratory.
//!
//! Each subcommand resolves to one scenario, optionally seeded from a TOML
//! config file; explicit flags override config fields. Reports land in the
//! output directory (`report.json` plus CSV plot data) and the report body
//! is echoed to stdout. Exit codes: 0 ok, 1 domain error, 2 config error,
//! with a machine-readable error JSON on stderr.

use clap::{Args, Parser, Subcommand};
use conelab_core::catalog::list_catalog;
use conelab_core::error::{Error, Result};
use conelab_core::scenarios::{run_scenario, ScenarioConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "conelab", version, about = "Numerical laboratory for nonlocal minimal cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every scenario subcommand. Any of them may also come
/// from `--config FILE`; a flag given on the command line wins.
#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// Fractional order s in (0, 1)
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated order list (Hardy orders, or the s sweep of a
    /// perimeter scan)
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    sigma: Option<Vec<f64>>,
    /// Output directory for report.json and CSV files
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Samples per curve, grid points, or cells per axis
    #[arg(long, value_name = "N")]
    resolution: Option<usize>,
    /// Scenario tolerance override
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// TOML scenario config; flags override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct TraceFlags {
    /// Catalog trace id, e.g. maximal-circle or parallel-circles:h=0.25
    #[arg(long, value_name = "ID")]
    trace: Option<String>,
    /// Curve file (.csv or .json) instead of a catalog trace
    #[arg(long, value_name = "FILE")]
    trace_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the sphere interaction kernel over its chord range
    Kernel(KernelArgs),
    /// Sweep weighted Hardy quotients and measured constants per order
    Hardy(HardyArgs),
    /// Second-variation stability verdict for a cone trace
    Stability(TraceArgs),
    /// Flatness fit of the normal field, per trace component
    Flatness(TraceArgs),
    /// Fractional and classical perimeter of a lattice scene
    Perimeter(PerimeterArgs),
    /// Band crossing measure of the double-loop example
    Crossing(KernelArgs),
    /// List built-in traces and sets
    Catalog,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args)]
struct HardyArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Truncation index for the near-optimizer family
    #[arg(long, value_name = "K")]
    cutoff: Option<f64>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonFlags,
    #[command(flatten)]
    trace: TraceFlags,
}

#[derive(Args)]
struct PerimeterArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Catalog set id, e.g. disk or double-cone
    #[arg(long, value_name = "ID")]
    set: Option<String>,
}

/// Load the config file if given, then lay the explicit flags on top.
fn base_config(scenario: &str, common: &CommonFlags) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::from_toml_file(path)?,
        None => ScenarioConfig::default(),
    };
    cfg.scenario = scenario.to_string();
    if common.s.is_some() {
        cfg.s = common.s;
    }
    if common.out.is_some() {
        cfg.out_dir = common.out.clone();
    }
    if common.resolution.is_some() {
        cfg.resolution = common.resolution;
    }
    if common.tol.is_some() {
        cfg.tolerance = common.tol;
    }
    Ok(cfg)
}

fn apply_trace(cfg: &mut ScenarioConfig, trace: &TraceFlags) {
    if trace.trace.is_some() {
        cfg.trace = trace.trace.clone();
        cfg.trace_file = None;
    }
    if trace.trace_file.is_some() {
        cfg.trace_file = trace.trace_file.clone();
        cfg.trace = None;
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.command {
        Command::Kernel(a) => base_config("kernel-scan", &a.common)?,
        Command::Hardy(a) => {
            let mut cfg = base_config("hardy-sweep", &a.common)?;
            if a.common.sigma.is_some() {
                cfg.sigma_list = a.common.sigma.clone();
            }
            if a.cutoff.is_some() {
                cfg.cutoff = a.cutoff;
            }
            cfg
        }
        Command::Stability(a) => {
            let mut cfg = base_config("stability-report", &a.common)?;
            apply_trace(&mut cfg, &a.trace);
            cfg
        }
        Command::Flatness(a) => {
            let mut cfg = base_config("flatness-diagnostic", &a.common)?;
            apply_trace(&mut cfg, &a.trace);
            cfg
        }
        Command::Perimeter(a) => {
            let mut cfg = base_config("perimeter-scan", &a.common)?;
            if a.set.is_some() {
                cfg.set = a.set.clone();
            }
            if a.common.sigma.is_some() {
                cfg.s_list = a.common.sigma.clone();
            }
            cfg
        }
        Command::Crossing(a) => base_config("crossing-diagnostic", &a.common)?,
        Command::Catalog => {
            for item in list_catalog() {
                let params = if item.parameters.is_empty() {
                    String::new()
                } else {
                    format!(" [{}]", item.parameters)
                };
                println!(
                    "{:<18} {:<10} {:>5}  {}{}",
                    item.id,
                    item.kind.label(),
                    item.default_resolution,
                    item.summary,
                    params
                );
            }
            return Ok(());
        }
    };
    let outcome = run_scenario(&cfg)?;
    let text = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| Error::Config(format!("report echo failed: {e}")))?;
    println!("{text}");
    Ok(())
}

fn main() {
    // worker pool size comes from the environment, read only here
    if let Ok(raw) = std::env::var("CONELAB_WORKERS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "error": {
                            "kind": "config",
                            "message": format!("CONELAB_WORKERS must be a positive integer, got {raw:?}"),
                        }
                    })
                );
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!(
            "{}",
            serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}})
        );
        std::process::exit(e.exit_code());
    }
}
