//! Batch scenario driver: one configuration in, a JSON report plus CSV plot
//! data out.
//!
//! A scenario names one of six measurement campaigns (kernel-scan,
//! hardy-sweep, stability-report, flatness-diagnostic, perimeter-scan,
//! crossing-diagnostic), the object it runs on ([`crate::catalog`] id or a
//! curve file), and the orders and resolutions to use. Every run writes
//! `report.json` with the resolved configuration, the versions of the
//! modules involved, the tolerances used, and the results; bulk numbers go
//! to CSV files next to it. Keys in the JSON are sorted, so a rerun of the
//! same configuration is byte-identical except for the `timestamp` field.

use crate::catalog;
use crate::curves::{
    curve_from_csv, curve_from_json, cylinder_crossing_measure, make_double_loop,
    resample_arclength, ConeTrace, CylinderBand,
};
use crate::error::{Error, Result};
use crate::hardy::{corollary_check, hardy_ratio, near_optimizer_resolved, profile_corpus};
use crate::kernels::{kernel_ks, ks_asymptotic_constant, ks_lower_bound_ratio, KernelParams};
use crate::perimeter::{
    bbm_scaling_scan, classical_perimeter, fractional_perimeter, perimeter_density_scan,
};
use crate::seminorms::flatness_fit;
use crate::specfun::{hardy_constant, FracOrder};
use crate::stability::{stability_report, ResolutionSettings};
use crate::util::linspace;
use nalgebra::Vector3;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::fs;
use std::path::{Path, PathBuf};

/// One scenario run, as parsed from TOML or assembled by a front end.
///
/// Unset fields fall back to per-scenario defaults at run time; the resolved
/// values are echoed in the report.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// One of `kernel-scan`, `hardy-sweep`, `stability-report`,
    /// `flatness-diagnostic`, `perimeter-scan`, `crossing-diagnostic`.
    pub scenario: String,
    /// Catalog trace id (trace scenarios).
    #[serde(default)]
    pub trace: Option<String>,
    /// Path to a curve file, `.csv` or `.json` (alternative to `trace`).
    #[serde(default)]
    pub trace_file: Option<PathBuf>,
    /// Catalog set id (perimeter-scan).
    #[serde(default)]
    pub set: Option<String>,
    /// Single fractional order.
    #[serde(default)]
    pub s: Option<f64>,
    /// Order sweep (perimeter-scan).
    #[serde(default)]
    pub s_list: Option<Vec<f64>>,
    /// Order sweep (hardy-sweep).
    #[serde(default)]
    pub sigma_list: Option<Vec<f64>>,
    /// Samples per curve, grid points, or cells per axis, by scenario.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Truncation index for the near-optimizer family (hardy-sweep).
    #[serde(default)]
    pub cutoff: Option<f64>,
    /// Scenario-specific tolerance override.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Output directory for `report.json` and CSV files.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<ScenarioConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("bad scenario TOML: {e}")))
    }

    pub fn from_toml_file<P: AsRef<Path>>(path: P) -> Result<ScenarioConfig> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.as_ref().display()))
        })?;
        ScenarioConfig::from_toml_str(&text)
    }
}

/// Paths written by a scenario run plus the parsed report body.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub report_path: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub report: Value,
}

/// CSV writer helper: one header row, then records, RFC 4180 via the csv crate.
fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(header).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    w.flush().map_err(Error::Io)?;
    Ok(())
}

/// Full float precision, stable text form for CSV cells.
fn num(v: f64) -> String {
    format!("{v:.17e}")
}

fn trace_from_config(cfg: &ScenarioConfig, default_id: &str) -> Result<(String, ConeTrace)> {
    if cfg.trace.is_some() && cfg.trace_file.is_some() {
        return Err(Error::Config("give either trace or trace_file, not both".into()));
    }
    if let Some(path) = &cfg.trace_file {
        let label = path.display().to_string();
        let curve = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                let f = fs::File::open(path)
                    .map_err(|e| Error::Config(format!("cannot open {label}: {e}")))?;
                curve_from_csv(f)?
            }
            Some("json") => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot open {label}: {e}")))?;
                curve_from_json(&text)?
            }
            _ => {
                return Err(Error::Config(format!(
                    "trace file {label} must end in .csv or .json"
                )))
            }
        };
        return Ok((label, ConeTrace::new(vec![curve], vec![1])?));
    }
    let id = cfg.trace.clone().unwrap_or_else(|| default_id.to_string());
    let samples = cfg.resolution.unwrap_or(512);
    Ok((id.clone(), catalog::build_trace(&id, samples)?))
}

/// Seconds since the Unix epoch; the one report field excluded from
/// byte-identity.
fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn report_skeleton(scenario: &str, modules: &[&str], config_echo: Value, tolerances: Value) -> Map<String, Value> {
    let mut modules_map = Map::new();
    for m in modules {
        modules_map.insert((*m).into(), json!(env!("CARGO_PKG_VERSION")));
    }
    let mut root = Map::new();
    root.insert("scenario".into(), json!(scenario));
    root.insert("config".into(), config_echo);
    root.insert("modules".into(), Value::Object(modules_map));
    root.insert("tolerances".into(), tolerances);
    root.insert("timestamp".into(), json!(timestamp()));
    root
}

fn finish(
    out_dir: &Path,
    mut root: Map<String, Value>,
    results: Value,
    csv_paths: Vec<PathBuf>,
) -> Result<ScenarioOutcome> {
    root.insert("results".into(), results);
    let report = Value::Object(root);
    let report_path = out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    text.push('\n');
    fs::write(&report_path, text)?;
    Ok(ScenarioOutcome { report_path, csv_paths, report })
}

/// Run one scenario to completion, writing `report.json` and CSVs into the
/// configured output directory (created if missing).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("conelab-out"));
    fs::create_dir_all(&out_dir)?;
    match cfg.scenario.as_str() {
        "kernel-scan" => kernel_scan(cfg, &out_dir),
        "hardy-sweep" => hardy_sweep(cfg, &out_dir),
        "stability-report" => stability_scenario(cfg, &out_dir),
        "flatness-diagnostic" => flatness_scenario(cfg, &out_dir),
        "perimeter-scan" => perimeter_scan(cfg, &out_dir),
        "crossing-diagnostic" => crossing_scenario(cfg, &out_dir),
        other => Err(Error::Config(format!(
            "unknown scenario {other:?}; expected one of kernel-scan, hardy-sweep, \
             stability-report, flatness-diagnostic, perimeter-scan, crossing-diagnostic"
        ))),
    }
}

/// Sphere interaction kernel over the full chord range plus its normalized
/// form, whose infimum is the quantitative nondegeneracy margin.
fn kernel_scan(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let s = cfg.s.unwrap_or(0.9);
    let n = cfg.resolution.unwrap_or(200).max(2);
    let params = KernelParams::new(s)?;
    let grid = linspace(-1.0, 1.0 - 1e-3, n);
    let mut rows = Vec::with_capacity(n);
    let mut min_norm = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for &a in &grid {
        let k = kernel_ks(a, &params)?;
        let normalized = k * (2.0 - 2.0 * a).powf((2.0 + s) / 2.0);
        let ratio = ks_lower_bound_ratio(a, &params)?;
        min_norm = min_norm.min(normalized);
        min_ratio = min_ratio.min(ratio);
        rows.push(vec![num(a), num(k), num(normalized), num(ratio)]);
    }
    let csv = out_dir.join("kernel_scan.csv");
    write_csv(&csv, &["a", "kernel", "normalized", "lower_bound_ratio"], &rows)?;
    let root = report_skeleton(
        "kernel-scan",
        &["kernels"],
        json!({"s": s, "resolution": n, "out_dir": out_dir.display().to_string()}),
        json!({"quad_rel_tol": params.quad_rel_tol()}),
    );
    let results = json!({
        "asymptotic_constant": ks_asymptotic_constant(s)?,
        "grid_points": n,
        "min_normalized_kernel": min_norm,
        "min_lower_bound_ratio": min_ratio,
    });
    finish(out_dir, root, results, vec![csv])
}

/// Weighted Hardy quotients of the profile corpus and the near-optimizer
/// family against the sharp constant, per order.
fn hardy_sweep(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let sigmas = cfg.sigma_list.clone().unwrap_or_else(|| vec![0.6, 0.75, 0.9]);
    if sigmas.is_empty() {
        return Err(Error::Config("sigma_list must not be empty".into()));
    }
    let n = cfg.resolution.unwrap_or(4096);
    let cutoffs = match cfg.cutoff {
        Some(k) => vec![k],
        None => vec![10.0, 30.0, 100.0],
    };
    let corpus = profile_corpus(n)?;
    let mut rows = Vec::new();
    let mut summary = Map::new();
    for &sigma in &sigmas {
        let order = FracOrder::new(2, sigma)?;
        let sharp = hardy_constant(order)?;
        let mut min_margin = f64::INFINITY;
        for (name, profile) in &corpus {
            let ratio = hardy_ratio(profile, order)?;
            let margin = ratio / sharp - 1.0;
            min_margin = min_margin.min(margin);
            rows.push(vec![
                num(sigma),
                (*name).to_string(),
                num(ratio),
                num(sharp),
                num(margin),
                num(corollary_check(profile, sigma)?),
            ]);
        }
        let mut per_sigma = Map::new();
        per_sigma.insert("sharp_constant".into(), json!(sharp));
        per_sigma.insert("min_corpus_margin".into(), json!(min_margin));
        for &k in &cutoffs {
            let profile = near_optimizer_resolved(sigma, k, n)?;
            let ratio = hardy_ratio(&profile, order)?;
            let margin = ratio / sharp - 1.0;
            let measured_c = corollary_check(&profile, sigma)?;
            rows.push(vec![
                num(sigma),
                format!("near-optimizer-k{k:.0}"),
                num(ratio),
                num(sharp),
                num(margin),
                num(measured_c),
            ]);
            per_sigma.insert(format!("measured_c_k{k:.0}"), json!(measured_c));
        }
        summary.insert(format!("sigma_{sigma}"), Value::Object(per_sigma));
    }
    let csv = out_dir.join("hardy_sweep.csv");
    write_csv(
        &csv,
        &["sigma", "profile", "ratio", "sharp_constant", "margin", "measured_c"],
        &rows,
    )?;
    let root = report_skeleton(
        "hardy-sweep",
        &["hardy", "specfun"],
        json!({
            "sigma_list": sigmas,
            "cutoffs": cutoffs,
            "resolution": n,
            "out_dir": out_dir.display().to_string(),
        }),
        json!({"corpus_margin_floor": -1e-2}),
    );
    finish(out_dir, root, Value::Object(summary), vec![csv])
}

/// Second-variation verdict for the cone over a trace.
fn stability_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let s = cfg.s.unwrap_or(0.9);
    let (label, trace) = trace_from_config(cfg, "maximal-circle")?;
    let settings = ResolutionSettings::default();
    let report = stability_report(&trace, s, &settings)?;
    let csv = out_dir.join("stability_report.csv");
    write_csv(
        &csv,
        &["s", "min_rayleigh", "a_total", "crucial_ratio", "verdict"],
        &[vec![
            num(s),
            num(report.min_rayleigh),
            num(report.a_total),
            num(report.crucial_ratio),
            report.verdict.to_string(),
        ]],
    )?;
    let root = report_skeleton(
        "stability-report",
        &["stability", "curves", "kernels"],
        json!({
            "trace": label,
            "s": s,
            "resolution": cfg.resolution.unwrap_or(512),
            "out_dir": out_dir.display().to_string(),
        }),
        json!({"rayleigh_tolerance": report.rayleigh_tolerance}),
    );
    let results = serde_json::to_value(&report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    finish(out_dir, root, results, vec![csv])
}

/// Axis fit of the normal field and its deviation seminorms, per component.
fn flatness_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let s = cfg.s.unwrap_or(0.9);
    let (label, trace) = trace_from_config(cfg, "maximal-circle")?;
    let mut rows = Vec::new();
    let mut max_dev = 0.0f64;
    for (idx, comp) in trace.components().iter().enumerate() {
        // the normal-field fit requires uniform arc-length sampling
        let uniform = resample_arclength(comp, comp.samples().len().max(16))?;
        let fit = flatness_fit(&uniform, s)?;
        max_dev = max_dev.max(fit.dev);
        rows.push(vec![
            idx.to_string(),
            num(fit.dev),
            num(fit.seminorm),
            num(fit.axis.x),
            num(fit.axis.y),
            num(fit.axis.z),
        ]);
    }
    let csv = out_dir.join("flatness_diagnostic.csv");
    write_csv(&csv, &["component", "dev", "seminorm", "axis_x", "axis_y", "axis_z"], &rows)?;
    let root = report_skeleton(
        "flatness-diagnostic",
        &["seminorms", "curves"],
        json!({
            "trace": label,
            "s": s,
            "resolution": cfg.resolution.unwrap_or(512),
            "out_dir": out_dir.display().to_string(),
        }),
        json!({"axis_degeneracy_floor": 1e-3}),
    );
    let results = json!({
        "components": trace.components().len(),
        "max_dev": max_dev,
    });
    finish(out_dir, root, results, vec![csv])
}

/// Fractional perimeter scaling scan, classical perimeter and density table
/// of a lattice scene.
fn perimeter_scan(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    if cfg.trace.is_some() || cfg.trace_file.is_some() {
        return Err(Error::Config("perimeter-scan runs on a set, not a trace".into()));
    }
    let id = cfg.set.clone().unwrap_or_else(|| "disk".to_string());
    let bare = id.split(':').next().unwrap_or(&id);
    let item = catalog::catalog_item(bare)?;
    let cells = cfg.resolution.unwrap_or(item.default_resolution);
    let s_list = match (&cfg.s_list, cfg.s) {
        (Some(list), _) => list.clone(),
        (None, Some(s)) => vec![s],
        (None, None) => vec![0.8, 0.9, 0.95],
    };
    let scene = catalog::build_set(&id, cells)?;
    let grid = scene.set.grid().clone();
    let scan = bbm_scaling_scan(&scene.set, &scene.window, &s_list)?;
    let classical = classical_perimeter(&scene.set, &scene.window)?;
    let s_last = *s_list.last().expect("nonempty by construction");
    let frac = fractional_perimeter(&scene.set, &scene.window, s_last)?;
    let half = 0.5 * grid.extent()[0] as f64 * grid.h();
    let radii = [0.25 * half, 0.5 * half, half];
    let density = perimeter_density_scan(&scene.set, scene.center, &radii)?;

    let bbm_rows: Vec<Vec<String>> =
        scan.iter().map(|(s, v)| vec![num(*s), num(*v)]).collect();
    let bbm_csv = out_dir.join("perimeter_bbm.csv");
    write_csv(&bbm_csv, &["s", "bbm_value"], &bbm_rows)?;
    let density_rows: Vec<Vec<String>> =
        density.iter().map(|(r, q)| vec![num(*r), num(*q)]).collect();
    let density_csv = out_dir.join("perimeter_density.csv");
    write_csv(&density_csv, &["r", "density_quotient"], &density_rows)?;

    let root = report_skeleton(
        "perimeter-scan",
        &["perimeter", "catalog"],
        json!({
            "set": id,
            "resolution": cells,
            "s_list": s_list,
            "out_dir": out_dir.display().to_string(),
        }),
        json!({"count_rounding": 0.25}),
    );
    let results = json!({
        "cell_size": grid.h(),
        "dim": grid.dim(),
        "classical_perimeter": classical,
        "fractional_value_at_last_s": frac.value,
        "truncation_bound_at_last_s": frac.truncation_bound,
        "bbm_first": scan.first().map(|(_, v)| *v),
        "bbm_last": scan.last().map(|(_, v)| *v),
    });
    finish(out_dir, root, results, vec![bbm_csv, density_csv])
}

/// Band crossing measure of the double-loop construction.
fn crossing_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let b = cfg.tolerance.unwrap_or(0.01);
    let n = cfg.resolution.unwrap_or(6144);
    let band = CylinderBand::new(Vector3::z(), b)?;
    let (curve, window) = make_double_loop(&band, n)?;
    let measure = cylinder_crossing_measure(&curve, &band, window)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let csv = out_dir.join("crossing_diagnostic.csv");
    write_csv(
        &csv,
        &["band_half_height", "samples", "measure", "two_pi"],
        &[vec![num(b), n.to_string(), num(measure), num(two_pi)]],
    )?;
    let root = report_skeleton(
        "crossing-diagnostic",
        &["curves"],
        json!({
            "band_half_height": b,
            "resolution": n,
            "out_dir": out_dir.display().to_string(),
        }),
        json!({"measure_floor_share": 0.95}),
    );
    let results = json!({
        "measure": measure,
        "two_pi": two_pi,
        "measure_over_two_pi": measure / two_pi,
    });
    finish(out_dir, root, results, vec![csv])
}
