//! Command-line surface: `exact`, `mc`, `asymp`, `sweep` and `selftest`
//! subcommands with CSV/JSON output and optional SVG ratio plots. Every
//! record embeds the fully resolved configuration and the library version,
//! and all numeric output is deterministic for a fixed seed regardless of
//! the worker-pool size.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::asymptotics::{
    classify_regime, var_i_asymp_boundary,
    var_i_asymp_intensity, RegimeTag,
};
use crate::error::Error;
use crate::geometry::Params;
use crate::mc::{truncation_degree, variance_mc};
use crate::variance::{preferred_route, var_e, var_i, Route};
use crate::VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hypergaf",
    version,
    about = "Zero-set volume fluctuations of the hyperbolic GAF in the ball of C^n"
)]
pub struct Cli {
    /// Worker pool size for Monte Carlo samples and sweep points.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Disk,
    Polar,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LimitArg {
    L,
    R,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Var E and Var I by exact quadrature.
    Exact(ExactArgs),
    /// Var E and Var I by GAF simulation.
    Mc(McArgs),
    /// Exact values against the asymptotic laws on a grid.
    Asymp(AsympArgs),
    /// Quadrature sweep over a grid of radii or intensities.
    Sweep(SweepArgs),
    /// Run the identity and cross-validation suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long = "L")]
    pub intensity: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = RouteArg::Both)]
    pub route: RouteArg,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long = "L")]
    pub intensity: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: u32,
    #[arg(long, default_value_t = 1 << 14)]
    pub nodes: u32,
    #[arg(long = "trunc-tol", default_value_t = 1e-6)]
    pub trunc_tol: f64,
    /// Also compute the quadrature value for side-by-side comparison.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Args)]
pub struct AsympArgs {
    /// Which limit law to compare against: the intensity law (l) or the
    /// boundary law (r).
    #[arg(long, value_enum)]
    pub limit: LimitArg,
    #[arg(long)]
    pub n: u32,
    /// Fixed L (required for --limit r).
    #[arg(long = "L")]
    pub intensity: Option<f64>,
    /// Fixed r (required for --limit l).
    #[arg(long)]
    pub r: Option<f64>,
    /// Comma-separated grid of the limit variable.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Emit a ratio-vs-grid line plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: u32,
    /// Fixed L (when sweeping r) or ignored (when sweeping L).
    #[arg(long = "L")]
    pub intensity: Option<f64>,
    /// Fixed r (when sweeping L) or ignored (when sweeping r).
    #[arg(long)]
    pub r: Option<f64>,
    /// Comma-separated grid of radii.
    #[arg(long = "r-grid", value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
    /// Comma-separated grid of intensities.
    #[arg(long = "l-grid", value_delimiter = ',')]
    pub l_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Emit a Var I-vs-grid line plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Skip the slower cross-route and simulation suites.
    #[arg(long)]
    pub quick: bool,
}

/// Full double precision: 17 significant digits, '.' decimal separator.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// The JSON output contract every run record conforms to.
pub const JSON_OUTPUT_SCHEMA: &str = r#"{
  "$schema": "http://json-schema.org/draft-07/schema#",
  "type": "object",
  "required": ["config", "results", "provenance"],
  "properties": {
    "config": { "type": "object" },
    "results": { "type": "object" },
    "provenance": {
      "type": "object",
      "required": ["version", "timestamp"],
      "properties": {
        "version": { "type": "string" },
        "timestamp": { "type": "integer", "minimum": 0 }
      }
    }
  }
}"#;

/// Check a run record against [`JSON_OUTPUT_SCHEMA`]'s required structure.
pub fn validate_json_output(doc: &serde_json::Value) -> Result<(), String> {
    let obj = doc.as_object().ok_or("top level must be an object")?;
    for key in ["config", "results", "provenance"] {
        if !obj.get(key).map(|v| v.is_object()).unwrap_or(false) {
            return Err(format!("missing or non-object field '{key}'"));
        }
    }
    let prov = &obj["provenance"];
    if !prov["version"].is_string() {
        return Err("provenance.version must be a string".into());
    }
    if !prov["timestamp"].is_u64() {
        return Err("provenance.timestamp must be a non-negative integer".into());
    }
    Ok(())
}

fn render_json(doc: &serde_json::Value) -> String {
    debug_assert!(validate_json_output(doc).is_ok());
    format!("{}\n", serde_json::to_string_pretty(doc).expect("json"))
}

fn timestamp() -> u64 {
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(secs) = epoch.parse::<u64>() {
            return secs;
        }
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn provenance() -> serde_json::Value {
    json!({ "version": VERSION, "timestamp": timestamp() })
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| format!("write {path:?}: {e}")),
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| format!("stdout: {e}"))
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::QuadBudget { .. } => EXIT_BUDGET,
        Error::DegenerateSample { .. } => EXIT_DEGENERATE,
        _ => EXIT_INVALID,
    }
}

pub fn run_exact(args: &ExactArgs, format: Format, out: &Option<PathBuf>, threads: usize) -> i32 {
    let p = match Params::new(args.n, args.intensity, args.r) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    if !(args.tol > 0.0) {
        eprintln!("error: --tol must be positive");
        return EXIT_INVALID;
    }
    let routes: &[Route] = match args.route {
        RouteArg::Disk => &[Route::Disk],
        RouteArg::Polar => &[Route::Polar],
        RouteArg::Both => &[Route::Disk, Route::Polar],
    };
    let mut rows = Vec::new();
    for &route in routes {
        match var_e(&p, args.tol, route) {
            Ok(q) => rows.push((route, q)),
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code_for(&e);
            }
        }
    }
    let scale = p.one_minus_r2().powi(-(2 * p.n as i32 - 2));
    let rel_gap = if rows.len() == 2 {
        Some((rows[0].1.value - rows[1].1.value).abs() / rows[1].1.value.abs())
    } else {
        None
    };

    let content = match format {
        Format::Csv => {
            let mut s = String::from(
                "schema,version,command,n,L,r,tol,route,threads,var_e,var_i,abs_err_est,n_evals,rel_gap\n",
            );
            for (route, q) in &rows {
                let _ = writeln!(
                    s,
                    "exact-v1,{},exact,{},{},{},{},{},{},{},{},{},{},{}",
                    VERSION,
                    args.n,
                    fmt_g17(args.intensity),
                    fmt_g17(args.r),
                    fmt_g17(args.tol),
                    route,
                    threads,
                    fmt_g17(q.value),
                    fmt_g17(q.value * scale),
                    fmt_g17(q.abs_err_est),
                    q.n_evals,
                    rel_gap.map(fmt_g17).unwrap_or_default(),
                );
            }
            s
        }
        Format::Json => {
            let mut results = serde_json::Map::new();
            for (route, q) in &rows {
                results.insert(
                    route.to_string(),
                    json!({
                        "var_e": q.value,
                        "var_i": q.value * scale,
                        "abs_err_est": q.abs_err_est,
                        "n_evals": q.n_evals,
                    }),
                );
            }
            if let Some(gap) = rel_gap {
                results.insert("rel_gap".into(), json!(gap));
            }
            let doc = json!({
                "config": {
                    "command": "exact",
                    "n": args.n,
                    "L": args.intensity,
                    "r": args.r,
                    "tol": args.tol,
                    "route": rows.iter().map(|(r, _)| r.to_string()).collect::<Vec<_>>(),
                    "threads": threads,
                },
                "results": results,
                "provenance": provenance(),
            });
            render_json(&doc)
        }
    };
    match emit(out, &content) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

pub fn run_mc(args: &McArgs, seed: u64, format: Format, out: &Option<PathBuf>, threads: usize) -> i32 {
    let p = match Params::new(args.n, args.intensity, args.r) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    if args.samples < 100 {
        eprintln!("error: --samples must be at least 100");
        return EXIT_INVALID;
    }
    let degree = truncation_degree(&p, args.trunc_tol);
    let est = match variance_mc(&p, degree, args.samples, args.nodes, seed) {
        Ok(est) => est,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    if est.n_degenerate as f64 > 0.01 * args.samples as f64 {
        eprintln!(
            "error: {} of {} samples degenerate (> 1%)",
            est.n_degenerate, args.samples
        );
        return EXIT_DEGENERATE;
    }
    let compare = if args.compare {
        match var_e(&p, 1e-8, preferred_route(&p)) {
            Ok(q) => Some((q.value, (est.var_e - q.value).abs() / est.stderr)),
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code_for(&e);
            }
        }
    } else {
        None
    };

    let content = match format {
        Format::Csv => {
            let mut s = String::from(
                "schema,version,command,n,L,r,samples,nodes,seed,trunc_tol,degree,threads,\
                 var_e,stderr,var_i,mean_fluct,mean_stderr,imag_residual_max,n_samples,n_degenerate,\
                 exact_var_e,gap_sigmas\n",
            );
            let (cmp_v, cmp_s) = match compare {
                Some((v, sig)) => (fmt_g17(v), fmt_g17(sig)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(
                s,
                "mc-v1,{},mc,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                VERSION,
                args.n,
                fmt_g17(args.intensity),
                fmt_g17(args.r),
                args.samples,
                args.nodes,
                seed,
                fmt_g17(args.trunc_tol),
                est.degree,
                threads,
                fmt_g17(est.var_e),
                fmt_g17(est.stderr),
                fmt_g17(est.var_i),
                fmt_g17(est.mean_fluct),
                fmt_g17(est.mean_stderr),
                fmt_g17(est.imag_residual_max),
                est.n_samples,
                est.n_degenerate,
                cmp_v,
                cmp_s,
            );
            s
        }
        Format::Json => {
            let mut results = serde_json::to_value(est).expect("estimate");
            if let (Some((v, sig)), Some(obj)) = (compare, results.as_object_mut()) {
                obj.insert("exact_var_e".into(), json!(v));
                obj.insert("gap_sigmas".into(), json!(sig));
            }
            let doc = json!({
                "config": {
                    "command": "mc",
                    "n": args.n,
                    "L": args.intensity,
                    "r": args.r,
                    "samples": args.samples,
                    "nodes": args.nodes,
                    "seed": seed,
                    "trunc_tol": args.trunc_tol,
                    "degree": degree,
                    "threads": threads,
                },
                "results": results,
                "provenance": provenance(),
            });
            render_json(&doc)
        }
    };
    match emit(out, &content) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

struct AsympRow {
    grid_value: f64,
    exact: f64,
    asymp: f64,
    regime: Option<RegimeTag>,
}

pub fn run_asymp(args: &AsympArgs, format: Format, out: &Option<PathBuf>, threads: usize) -> i32 {
    if args.grid.is_empty() {
        eprintln!("error: --grid must be non-empty");
        return EXIT_INVALID;
    }
    let mut rows: Vec<AsympRow> = Vec::new();
    for &g in &args.grid {
        let (p, asymp, regime) = match args.limit {
            LimitArg::L => {
                let r = match args.r {
                    Some(r) => r,
                    None => {
                        eprintln!("error: --limit l requires a fixed --r");
                        return EXIT_INVALID;
                    }
                };
                let p = match Params::new(args.n, g, r) {
                    Ok(p) => p,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_INVALID;
                    }
                };
                (p, var_i_asymp_intensity(&p), None)
            }
            LimitArg::R => {
                let l = match args.intensity {
                    Some(l) => l,
                    None => {
                        eprintln!("error: --limit r requires a fixed --L");
                        return EXIT_INVALID;
                    }
                };
                let p = match Params::new(args.n, l, g) {
                    Ok(p) => p,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_INVALID;
                    }
                };
                let asymp = match var_i_asymp_boundary(&p) {
                    Ok(a) => a,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_INVALID;
                    }
                };
                (p, asymp, Some(classify_regime(&p).tag))
            }
        };
        // intensity law comparisons use the polar route: the disk integrand
        // peaks too sharply near w = 1 at large L
        let route = match args.limit {
            LimitArg::L => Route::Polar,
            LimitArg::R => preferred_route(&p),
        };
        let exact = match var_i(&p, args.tol, route) {
            Ok(q) => q.value,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code_for(&e);
            }
        };
        rows.push(AsympRow {
            grid_value: g,
            exact,
            asymp,
            regime,
        });
    }

    if let Some(svg_path) = &args.svg {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.grid_value, r.exact / r.asymp))
            .collect();
        let label = match args.limit {
            LimitArg::L => "ratio vs L",
            LimitArg::R => "ratio vs r",
        };
        if let Err(e) = emit(&Some(svg_path.clone()), &line_plot_svg(&pts, label)) {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    }

    let limit_name = match args.limit {
        LimitArg::L => "L",
        LimitArg::R => "r",
    };
    let content = match format {
        Format::Csv => {
            let mut s = String::from(
                "schema,version,command,limit,n,fixed_L,fixed_r,tol,threads,grid_value,exact_var_i,asymp_var_i,ratio,regime\n",
            );
            for row in &rows {
                let _ = writeln!(
                    s,
                    "asymp-v1,{},asymp,{},{},{},{},{},{},{},{},{},{},{}",
                    VERSION,
                    limit_name,
                    args.n,
                    args.intensity.map(fmt_g17).unwrap_or_default(),
                    args.r.map(fmt_g17).unwrap_or_default(),
                    fmt_g17(args.tol),
                    threads,
                    fmt_g17(row.grid_value),
                    fmt_g17(row.exact),
                    fmt_g17(row.asymp),
                    fmt_g17(row.exact / row.asymp),
                    row.regime.map(|t| t.to_string()).unwrap_or_default(),
                );
            }
            s
        }
        Format::Json => {
            let rows_json: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let mut v = json!({
                        "grid_value": row.grid_value,
                        "exact_var_i": row.exact,
                        "asymp_var_i": row.asymp,
                        "ratio": row.exact / row.asymp,
                    });
                    if let Some(tag) = row.regime {
                        v.as_object_mut()
                            .expect("object")
                            .insert("regime".into(), json!(tag.to_string()));
                    }
                    v
                })
                .collect();
            let doc = json!({
                "config": {
                    "command": "asymp",
                    "limit": limit_name,
                    "n": args.n,
                    "L": args.intensity,
                    "r": args.r,
                    "grid": args.grid,
                    "tol": args.tol,
                    "threads": threads,
                },
                "results": { "rows": rows_json },
                "provenance": provenance(),
            });
            render_json(&doc)
        }
    };
    match emit(out, &content) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

pub fn run_sweep(args: &SweepArgs, format: Format, out: &Option<PathBuf>, threads: usize) -> i32 {
    let points: Vec<(f64, f64)> = match (&args.r_grid, &args.l_grid) {
        (Some(rs), None) => {
            let l = match args.intensity {
                Some(l) => l,
                None => {
                    eprintln!("error: sweeping r requires a fixed --L");
                    return EXIT_INVALID;
                }
            };
            rs.iter().map(|&r| (l, r)).collect()
        }
        (None, Some(ls)) => {
            let r = match args.r {
                Some(r) => r,
                None => {
                    eprintln!("error: sweeping L requires a fixed --r");
                    return EXIT_INVALID;
                }
            };
            ls.iter().map(|&l| (l, r)).collect()
        }
        _ => {
            eprintln!("error: provide exactly one of --r-grid or --l-grid");
            return EXIT_INVALID;
        }
    };
    use rayon::prelude::*;
    let results: Vec<Result<(Params, Route, crate::QuadResult), Error>> = points
        .par_iter()
        .map(|&(l, r)| {
            let p = Params::new(args.n, l, r)?;
            let route = preferred_route(&p);
            let q = var_e(&p, args.tol, route)?;
            Ok((p, route, q))
        })
        .collect();
    let mut rows = Vec::new();
    for res in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code_for(&e);
            }
        }
    }

    if let Some(svg_path) = &args.svg {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|(p, _, q)| {
                let x = if args.r_grid.is_some() { p.radius } else { p.intensity };
                (x, q.value / p.one_minus_r2().powi(2 * p.n as i32 - 2))
            })
            .collect();
        if let Err(e) = emit(&Some(svg_path.clone()), &line_plot_svg(&pts, "var_i vs grid")) {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    }

    let content = match format {
        Format::Csv => {
            let mut s = String::from(
                "schema,version,command,n,L,r,tol,route,threads,var_e,var_i,abs_err_est,n_evals\n",
            );
            for (p, route, q) in &rows {
                let scale = p.one_minus_r2().powi(-(2 * p.n as i32 - 2));
                let _ = writeln!(
                    s,
                    "sweep-v1,{},sweep,{},{},{},{},{},{},{},{},{},{}",
                    VERSION,
                    p.n,
                    fmt_g17(p.intensity),
                    fmt_g17(p.radius),
                    fmt_g17(args.tol),
                    route,
                    threads,
                    fmt_g17(q.value),
                    fmt_g17(q.value * scale),
                    fmt_g17(q.abs_err_est),
                    q.n_evals,
                );
            }
            s
        }
        Format::Json => {
            let rows_json: Vec<serde_json::Value> = rows
                .iter()
                .map(|(p, route, q)| {
                    let scale = p.one_minus_r2().powi(-(2 * p.n as i32 - 2));
                    json!({
                        "L": p.intensity,
                        "r": p.radius,
                        "route": route.to_string(),
                        "var_e": q.value,
                        "var_i": q.value * scale,
                        "abs_err_est": q.abs_err_est,
                        "n_evals": q.n_evals,
                    })
                })
                .collect();
            let doc = json!({
                "config": {
                    "command": "sweep",
                    "n": args.n,
                    "L": args.intensity,
                    "r": args.r,
                    "r_grid": args.r_grid,
                    "l_grid": args.l_grid,
                    "tol": args.tol,
                    "threads": threads,
                },
                "results": { "rows": rows_json },
                "provenance": provenance(),
            });
            render_json(&doc)
        }
    };
    match emit(out, &content) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

/// Minimal standalone SVG line plot of (x, y) points.
fn line_plot_svg(points: &[(f64, f64)], label: &str) -> String {
    let (w, h, ml, mb) = (640.0, 420.0, 70.0, 50.0);
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (x0, x1) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let xspan = (x1 - x0).max(1e-300);
    let yspan = (y1 - y0).max(1e-300);
    let px = |x: f64| ml + (x - x0) / xspan * (w - ml - 20.0);
    let py = |y: f64| (h - mb) - (y - y0) / yspan * (h - mb - 20.0);
    let mut poly = String::new();
    for (x, y) in points {
        let _ = write!(poly, "{:.2},{:.2} ", px(*x), py(*y));
    }
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<line x1=\"{ml}\" y1=\"{ybase}\" x2=\"{xend}\" y2=\"{ybase}\" stroke=\"black\"/>\n",
            "<line x1=\"{ml}\" y1=\"{ybase}\" x2=\"{ml}\" y2=\"20\" stroke=\"black\"/>\n",
            "<polyline points=\"{poly}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n",
            "<text x=\"{ml}\" y=\"{h2}\" font-size=\"12\">{label}</text>\n",
            "<text x=\"{ml}\" y=\"{ylab}\" font-size=\"10\">x: [{x0:.6}, {x1:.6}]  y: [{y0:.6}, {y1:.6}]</text>\n",
            "</svg>\n"
        ),
        w = w,
        h = h,
        ml = ml,
        ybase = h - mb,
        xend = w - 20.0,
        poly = poly.trim_end(),
        h2 = 16.0,
        label = label,
        ylab = h - 14.0,
        x0 = x0,
        x1 = x1,
        y0 = y0,
        y1 = y1,
    )
}

pub fn run_selftest(args: &SelftestArgs) -> i32 {
    let (report, ok) = selftest_report(args.quick);
    print!("{report}");
    if ok {
        EXIT_OK
    } else {
        EXIT_SELFTEST
    }
}

/// Run the invariant suites and produce a human-readable report.
///
/// The HYPERGAF_SELFTEST_PERTURB environment variable injects an additive
/// perturbation into the duplication-identity evaluation; it exists so the
/// harness itself can be shown to catch a broken identity.
pub fn selftest_report(quick: bool) -> (String, bool) {
    use crate::bipotential::{mixed_derivative, mixed_derivative_sphere, PointPair};
    use crate::geometry::{
        covariance_kernel, gamma_form_weights, moebius, pseudo_hyperbolic_distance, sphere_param,
        theta, SpherePoint,
    };
    use crate::specfun::{
        binom_reciprocal_sum, cos_power_integral, dilog, gamma_ratio_combination, log_gamma,
    };
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    let perturb: f64 = std::env::var("HYPERGAF_SELFTEST_PERTURB")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0.0);

    let mut report = String::new();
    let mut all_ok = true;
    let mut run = |name: &str, result: Result<(), String>| {
        match result {
            Ok(()) => {
                let _ = writeln!(report, "ok   {name}");
            }
            Err(msg) => {
                all_ok = false;
                let _ = writeln!(report, "FAIL {name}: {msg}");
            }
        }
    };

    run("binomial-reciprocal-sum", {
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        let mut result = Ok(());
        'outer: for m in 0..=12u32 {
            for _ in 0..20 {
                let z: f64 = rng.gen_range(0.3..6.0);
                let mut direct = 0.0;
                let mut binom = 1.0;
                for j in 0..=m {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    direct += sign * binom / (z + j as f64);
                    binom = binom * (m - j) as f64 / (j + 1) as f64;
                }
                let closed = binom_reciprocal_sum(m, z).unwrap();
                if (closed - direct).abs() > 1e-11 * direct.abs().max(1.0) {
                    result = Err(format!("m={m} z={z}: {closed} vs {direct}"));
                    break 'outer;
                }
            }
        }
        result
    });

    run("cosine-power-recurrence", {
        let mut result = Ok(());
        for m in 2..=30u32 {
            let lhs = cos_power_integral(m);
            let rhs = (m as f64 - 1.0) / m as f64 * cos_power_integral(m - 2);
            if (lhs - rhs).abs() > 1e-13 {
                result = Err(format!("m = {m}: {lhs} vs {rhs}"));
                break;
            }
        }
        result
    });

    run("legendre-duplication", {
        let mut rng = ChaCha12Rng::seed_from_u64(102);
        let mut result = Ok(());
        for _ in 0..200 {
            let z: f64 = rng.gen_range(0.1..20.0);
            let lhs = log_gamma(2.0 * z).unwrap();
            let rhs = (2.0 * z - 1.0) * std::f64::consts::LN_2
                - 0.5 * std::f64::consts::PI.ln()
                + log_gamma(z).unwrap()
                + log_gamma(z + 0.5).unwrap()
                + perturb;
            if (lhs - rhs).exp_m1().abs() > 1e-11 {
                result = Err(format!("violated at z = {z}"));
                break;
            }
        }
        result
    });

    run("gamma-ratio-combination", {
        let mut rng = ChaCha12Rng::seed_from_u64(103);
        let mut result = Ok(());
        for _ in 0..50 {
            let n = rng.gen_range(2..=5u32);
            let m = n as f64 / 2.0 + 0.1 + rng.gen_range(0.0..10.0f64);
            let rhs = gamma_ratio_combination(m, n).unwrap();
            let term = |a: f64, b: f64, c: f64, d: f64| {
                (log_gamma(a).unwrap() - log_gamma(b).unwrap() + log_gamma(c).unwrap()
                    - log_gamma(d).unwrap())
                .exp()
            };
            let nf = n as f64;
            let lhs = term(m + 0.5, m + 1.0, 2.0 * m - nf + 2.0, 2.0 * m + 1.0)
                + term(m - 0.5, m, 2.0 * m - nf, 2.0 * m - 1.0)
                - 2.0 * term(m + 0.5, m + 1.0, 2.0 * m - nf + 1.0, 2.0 * m);
            if ((lhs - rhs) / rhs).abs() > 1e-11 {
                result = Err(format!("M={m} n={n}: {lhs} vs {rhs}"));
                break;
            }
        }
        result
    });

    run("dilog-branch-consistency", {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        let mut result = Ok(());
        for i in 0..=20 {
            let x = 0.4 + 0.01 * i as f64;
            let a = dilog(x).unwrap();
            let b = pi2_6 - x.ln() * (1.0 - x).ln() - dilog(1.0 - x).unwrap();
            if (a - b).abs() > 1e-12 {
                result = Err(format!("x = {x}: {a} vs {b}"));
                break;
            }
        }
        result
    });

    run("moebius-involution-and-distance", {
        let mut rng = ChaCha12Rng::seed_from_u64(104);
        let mut result = Ok(());
        for _ in 0..50 {
            let draw = |rng: &mut ChaCha12Rng| loop {
                let v: Vec<Complex64> = (0..2)
                    .map(|_| Complex64::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)))
                    .collect();
                if crate::geometry::norm_sq(&v) < 0.81 {
                    break v;
                }
            };
            let z = draw(&mut rng);
            let w = draw(&mut rng);
            let back = moebius(&w, &moebius(&w, &z).unwrap()).unwrap();
            let err: f64 = back
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if err > 1e-12 {
                result = Err(format!("involution error {err}"));
                break;
            }
            let rho = pseudo_hyperbolic_distance(&z, &w).unwrap();
            let th = theta(&z, &w).unwrap();
            if (1.0 - rho * rho - th).abs() > 1e-12 {
                result = Err("distance identity failed".into());
                break;
            }
        }
        result
    });

    run("normalised-kernel-modulus", {
        let mut rng = ChaCha12Rng::seed_from_u64(105);
        let mut result = Ok(());
        for _ in 0..50 {
            let draw = |rng: &mut ChaCha12Rng| loop {
                let v: Vec<Complex64> = (0..2)
                    .map(|_| Complex64::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)))
                    .collect();
                if crate::geometry::norm_sq(&v) < 0.81 {
                    break v;
                }
            };
            let z = draw(&mut rng);
            let w = draw(&mut rng);
            let l = 1.7;
            let th = theta(&z, &w).unwrap();
            let kzw = covariance_kernel(&z, &w, l).unwrap().norm();
            let kzz = covariance_kernel(&z, &z, l).unwrap().re;
            let kww = covariance_kernel(&w, &w, l).unwrap().re;
            if (th.powf(l / 2.0) - kzw / (kzz * kww).sqrt()).abs() > 1e-12 {
                result = Err("theta^{L/2} != |normalised kernel|".into());
                break;
            }
        }
        result
    });

    run("boundary-measure-normalisation", {
        // A_2 check: quadrature of sum_k alpha_k weight_k over (w, psi)
        let r: f64 = 0.7;
        let m = 48;
        let mut total = 0.0;
        for i in 0..m {
            let rho = (i as f64 + 0.5) / m as f64;
            for j in 0..m {
                let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                let sp = SpherePoint {
                    base: vec![Complex64::from_polar(rho, phi)],
                    psi: 0.3,
                };
                let alpha = sphere_param(&sp, 2).unwrap();
                let wts = gamma_form_weights(&sp, 2).unwrap();
                let integrand: Complex64 = alpha.iter().zip(&wts).map(|(a, b)| a * b).sum();
                total += r.powi(3) * integrand.re * rho;
            }
        }
        total *= (1.0 / m as f64) * (2.0 * std::f64::consts::PI / m as f64) / std::f64::consts::PI;
        if (total - r.powi(3)).abs() < 1e-6 {
            Ok(())
        } else {
            Err(format!("{total} vs {}", r.powi(3)))
        }
    });

    run("bipotential-sphere-form", {
        let mut rng = ChaCha12Rng::seed_from_u64(106);
        let mut result = Ok(());
        for _ in 0..20 {
            let p = Params::new(2, rng.gen_range(0.5..3.0), rng.gen_range(0.3..0.8)).unwrap();
            let unit = |rng: &mut ChaCha12Rng| {
                let v: Vec<Complex64> = (0..2)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let nrm = crate::geometry::norm_sq(&v).sqrt();
                v.into_iter().map(|x| x / nrm).collect::<Vec<_>>()
            };
            let xi = unit(&mut rng);
            let eta = unit(&mut rng);
            let pp = PointPair::new(
                xi.iter().map(|x| x * p.radius).collect(),
                eta.iter().map(|x| x * p.radius).collect(),
            )
            .unwrap();
            let general = mixed_derivative(&pp, p.intensity, 0, 1).unwrap();
            let sphere = mixed_derivative_sphere(&xi, &eta, &p, 0, 1).unwrap();
            if (general - sphere).norm() > 1e-12 * general.norm().max(1e-30) {
                result = Err(format!("{general} vs {sphere}"));
                break;
            }
        }
        result
    });

    if !quick {
        run("bipotential-fd-probe", {
            let mut rng = ChaCha12Rng::seed_from_u64(107);
            let mut result = Ok(());
            for _ in 0..10 {
                let draw = |rng: &mut ChaCha12Rng| loop {
                    let v: Vec<Complex64> = (0..2)
                        .map(|_| {
                            Complex64::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6))
                        })
                        .collect();
                    if crate::geometry::norm_sq(&v) < 0.56 {
                        break v;
                    }
                };
                let z = draw(&mut rng);
                let w = draw(&mut rng);
                let l = rng.gen_range(0.6..2.5);
                let pp = PointPair::new(z.clone(), w.clone()).unwrap();
                let closed = mixed_derivative(&pp, l, 0, 0).unwrap();
                let rho_at = |z: &[Complex64], w: &[Complex64]| {
                    crate::bipotential::rho(
                        &PointPair::new(z.to_vec(), w.to_vec()).unwrap(),
                        l,
                    )
                    .unwrap()
                };
                let second = |dz_im: bool, dw_im: bool, h: f64| {
                    let eval = |sz: f64, sw: f64| {
                        let mut zz = z.clone();
                        let mut ww = w.clone();
                        zz[0] += if dz_im {
                            Complex64::new(0.0, sz)
                        } else {
                            Complex64::new(sz, 0.0)
                        };
                        ww[0] += if dw_im {
                            Complex64::new(0.0, sw)
                        } else {
                            Complex64::new(sw, 0.0)
                        };
                        rho_at(&zz, &ww)
                    };
                    (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h)
                };
                let rich = |a: bool, b: bool| {
                    let h = 1e-4;
                    (4.0 * second(a, b, h / 2.0) - second(a, b, h)) / 3.0
                };
                let fd = 0.25
                    * Complex64::new(
                        rich(false, false) - rich(true, true),
                        rich(false, true) + rich(true, false),
                    );
                if (closed - fd).norm() > 1e-5 * closed.norm().max(1e-3) {
                    result = Err(format!("{closed} vs fd {fd}"));
                    break;
                }
            }
            result
        });

        run("route-agreement", (|| {
            let p = Params::new(2, 2.0, 0.5).unwrap();
            let disk = crate::variance::var_e_disk(&p, 1e-9).map_err(|e| e.to_string())?;
            let polar = crate::variance::var_e_polar(&p, 1e-9).map_err(|e| e.to_string())?;
            let gap = (disk.value - polar.value).abs() / polar.value;
            if gap <= 1e-8 {
                Ok(())
            } else {
                Err(format!("relative gap {gap}"))
            }
        })());

        run("estimator-cross-check", (|| {
            let p = Params::new(2, 2.0, 0.5).unwrap();
            let degree = crate::mc::truncation_degree(&p, 1e-6);
            let mut cs = crate::rng::derive_stream(1234, &[1]);
            let sample = crate::mc::sample_gaf(&p, degree, &mut cs);
            let mut s1 = crate::rng::derive_stream(1234, &[2]);
            let a = crate::mc::fluctuation_estimate(&sample, &p, 1 << 13, &mut s1)
                .map_err(|e| e.to_string())?;
            let mut s2 = crate::rng::derive_stream(1234, &[3]);
            let b = crate::mc::fluctuation_estimate_nodes(&sample, &p, 1 << 13, &mut s2)
                .map_err(|e| e.to_string())?;
            if (a.value - b.value).abs() < 0.05 {
                Ok(())
            } else {
                Err(format!("winding {} vs nodes {}", a.value, b.value))
            }
        })());
    }

    let _ = writeln!(
        report,
        "{}",
        if all_ok {
            "selftest: all suites passed"
        } else {
            "selftest: FAILURES above"
        }
    );
    (report, all_ok)
}

/// Parse arguments, configure the worker pool, and dispatch. Returns the
/// process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
    if let Some(t) = cli.threads {
        // ignore failure: the global pool can only be sized once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.command {
        Command::Exact(args) => run_exact(args, cli.format, &cli.out, threads),
        Command::Mc(args) => run_mc(args, cli.seed, cli.format, &cli.out, threads),
        Command::Asymp(args) => run_asymp(args, cli.format, &cli.out, threads),
        Command::Sweep(args) => run_sweep(args, cli.format, &cli.out, threads),
        Command::Selftest(args) => run_selftest(args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_roundtrips() {
        for x in [1.0 / 3.0, 1.567983087449e-2, 1e300, -2.5e-300] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), back.to_bits(), "{s}");
        }
    }

    #[test]
    fn selftest_quick_passes() {
        let (report, ok) = selftest_report(true);
        assert!(ok, "{report}");
    }

    #[test]
    fn svg_plot_is_wellformed() {
        let svg = line_plot_svg(&[(1.0, 1.1), (2.0, 1.05), (3.0, 1.01)], "ratio");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn error_to_exit_code_mapping() {
        assert_eq!(EXIT_OK, 0);
        assert_eq!(EXIT_SELFTEST, 1);
        assert_eq!(EXIT_INVALID, 2);
        assert_eq!(
            exit_code_for(&Error::QuadBudget {
                value: 1.0,
                abs_err_est: 0.1,
                n_evals: 10
            }),
            EXIT_BUDGET
        );
        assert_eq!(
            exit_code_for(&Error::DegenerateSample {
                resampled: 5,
                nodes: 100
            }),
            EXIT_DEGENERATE
        );
        assert_eq!(
            exit_code_for(&Error::Domain {
                op: "x",
                msg: String::new()
            }),
            EXIT_INVALID
        );
    }
}
