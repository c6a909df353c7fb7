//! The five batch commands.

use crate::methods::{resolve_method, solve, MethodKind, MethodSpec, SolvedLaw};
use crate::output::{csv_text, out_path, sig9, sig9_value, write_json, write_text};
use crate::params::{parse_percentiles, FileConfig, SimOpts, Slope, SlopeOpts, SolverOpts};
use anyhow::{bail, Result};
use clap::Args;
use ramplaw::{
    compare, grid_power, reduce_to_law, run_dispatch, synthesize_power, violation_rates,
    EvaluationGrid,
};
use serde_json::json;
use std::path::PathBuf;

fn solve_spec(
    spec: &MethodSpec,
    slope: Slope,
    sim: &SimOpts,
    file: &FileConfig,
    solver: &SolverOpts,
    replica: u64,
) -> Result<SolvedLaw> {
    solve(spec, slope, sim, file, solver, replica)
}

fn law_summary(slope: Slope, solved: &SolvedLaw, percentiles: &[f64]) -> Result<serde_json::Value> {
    let mut ps = serde_json::Map::new();
    for &q in percentiles {
        ps.insert(format!("{q}"), sig9_value(solved.law.percentile(q)?));
    }
    Ok(json!({
        "a_tilde": sig9_value(slope.a_tilde),
        "method": solved.method,
        "params": solved.params,
        "p0": sig9_value(solved.law.point_mass()),
        "omega": sig9_value(solved.law.omega()),
        "percentiles": ps,
        "runtime_seconds": sig9_value(solved.runtime_seconds),
    }))
}

// ============================================================================
// pdf
// ============================================================================

#[derive(Debug, Args)]
pub struct PdfArgs {
    #[command(flatten)]
    pub slope: SlopeOpts,
    /// Solver backing the law (default: analytic).
    #[arg(long, value_enum)]
    pub method: Option<MethodKind>,
    #[command(flatten)]
    pub solver: SolverOpts,
    #[command(flatten)]
    pub sim: SimOpts,
    /// Evaluation step of the emitted table.
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Upper end of the table (auto: covers all but 1e-9 of the mass).
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Density table path (default: pdf.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary path (default: pdf_summary.json).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

pub fn cmd_pdf(args: &PdfArgs) -> Result<()> {
    let file = FileConfig::load(args.slope.config.as_ref())?;
    let slope = args.slope.resolve(&file)?;
    let spec = MethodSpec {
        kind: resolve_method(args.method, &file)?,
        param: None,
    };
    let solved = solve_spec(&spec, slope, &args.sim, &file, &args.solver, 0)?;

    if args.grid_step <= 0.0 || args.grid_step.is_nan() {
        bail!("--grid-step must be positive");
    }
    let upper = match args.grid_max {
        Some(b) => b,
        None => solved.law.percentile(1.0 - 1e-9)?.max(args.grid_step),
    };
    // even panel count so the table re-integrates cleanly with Simpson
    let panels = ((upper / args.grid_step).ceil() as usize)
        .max(2)
        .div_ceil(2)
        * 2;

    let law = &solved.law;
    let rows = (0..=panels).map(|i| {
        let b = i as f64 * args.grid_step;
        let g = law.density(b);
        let cdf = law.cdf(b);
        format!("{},{},{},{}", sig9(b), sig9(g), sig9(cdf), sig9(1.0 - cdf))
    });
    let csv_path = out_path(args.out.as_ref(), "pdf.csv");
    write_text(&csv_path, &csv_text("b_tilde,g,G,S", rows))?;

    let summary = law_summary(slope, &solved, &[0.90, 0.95, 0.99])?;
    let summary_path = out_path(args.summary.as_ref(), "pdf_summary.json");
    write_json(&summary_path, &summary)?;

    println!(
        "pdf: {}({}) at a_tilde={} -> {} + {} (p0={})",
        solved.method,
        solved.params,
        sig9(slope.a_tilde),
        csv_path.display(),
        summary_path.display(),
        sig9(law.point_mass()),
    );
    Ok(())
}

// ============================================================================
// simulate
// ============================================================================

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub slope: SlopeOpts,
    #[command(flatten)]
    pub sim: SimOpts,
    /// Histogram path (default: law.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary path (default: simulate_summary.json).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Also export the full trace as CSV columns n,P,B,R (large!).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let file = FileConfig::load(args.slope.config.as_ref())?;
    let slope = args.slope.resolve(&file)?;
    let cfg = args.sim.build(slope, &file)?;

    // the staged pipeline is only materialized when the trace is wanted
    let (law, violations) = if let Some(trace_path) = &args.trace {
        let power = synthesize_power(&cfg)?;
        let battery = run_dispatch(&power, cfg.a);
        let grid = grid_power(&power, &battery);
        let rows = (0..power.len()).map(|n| {
            format!(
                "{n},{},{},{}",
                sig9(power[n]),
                sig9(battery[n]),
                sig9(grid[n])
            )
        });
        let path = out_path(Some(trace_path), "trace.csv");
        write_text(&path, &csv_text("n,P,B,R", rows))?;
        let rates = violation_rates(&power, &battery, cfg.a)?;
        let law = reduce_to_law(&battery, cfg.law.beta(), cfg.bin_width, cfg.burn_in)?;
        (law, Some(rates))
    } else {
        (ramplaw::simulate_law(&cfg)?, None)
    };

    let rows = law
        .densities()
        .iter()
        .enumerate()
        .map(|(i, d)| format!("{},{}", sig9(i as f64 * law.bin_width()), sig9(*d)));
    let csv_path = out_path(args.out.as_ref(), "law.csv");
    write_text(&csv_path, &csv_text("bin_left,density", rows))?;

    let mut percentiles = serde_json::Map::new();
    for q in [0.90, 0.95, 0.99] {
        let b = law.percentile(q)?;
        percentiles.insert(
            format!("{q}"),
            json!({ "b_tilde": sig9_value(b), "mw": sig9_value(b / slope.beta) }),
        );
    }
    let mut summary = json!({
        "a_tilde": sig9_value(slope.a_tilde),
        "zero_fraction": sig9_value(law.zero_fraction()),
        "n_effective": law.n_effective(),
        "bin_width": sig9_value(law.bin_width()),
        "percentiles": percentiles,
        "config": {
            "steps": cfg.n_steps,
            "seed": cfg.seed,
            "a_mw": sig9_value(cfg.a),
            "beta": sig9_value(slope.beta),
            "p_max_mw": cfg.p_max.map(sig9_value).unwrap_or(serde_json::Value::Null),
            "c": sig9_value(cfg.law.mixture_weight()),
            "zeta": sig9_value(cfg.law.zeta()),
            "burn_in": cfg.burn_in,
        },
    });
    if let Some(rates) = violations {
        summary["violation_rates"] = json!({
            "controlled": sig9_value(rates.controlled),
            "raw_increment": sig9_value(rates.raw),
        });
    }
    let summary_path = out_path(args.summary.as_ref(), "simulate_summary.json");
    write_json(&summary_path, &summary)?;

    println!(
        "simulate: {} steps at a_tilde={} -> {} + {} (zero fraction {})",
        cfg.n_steps,
        sig9(slope.a_tilde),
        csv_path.display(),
        summary_path.display(),
        sig9(law.zero_fraction()),
    );
    Ok(())
}

// ============================================================================
// size
// ============================================================================

#[derive(Debug, Args)]
pub struct SizeArgs {
    #[command(flatten)]
    pub slope: SlopeOpts,
    /// Solver backing the law (default: analytic).
    #[arg(long, value_enum)]
    pub method: Option<MethodKind>,
    #[command(flatten)]
    pub solver: SolverOpts,
    #[command(flatten)]
    pub sim: SimOpts,
    /// Comma-separated percentile levels (default 0.90,0.95,0.99).
    #[arg(long)]
    pub percentiles: Option<String>,
    /// Multiplier applied to the sized capacities (>= 1).
    #[arg(long)]
    pub safety_factor: Option<f64>,
    /// Sizing table path (CSV; printed to stdout regardless).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sizing report path (JSON).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

pub fn cmd_size(args: &SizeArgs) -> Result<()> {
    let file = FileConfig::load(args.slope.config.as_ref())?;
    let slope = args.slope.resolve(&file)?;
    let percentiles = parse_percentiles(args.percentiles.as_ref(), &file)?;
    let safety = args.safety_factor.or(file.safety_factor).unwrap_or(1.0);
    if safety < 1.0 || safety.is_nan() {
        bail!("safety factor must be >= 1, got {safety}");
    }
    let spec = MethodSpec {
        kind: resolve_method(args.method, &file)?,
        param: None,
    };
    let solved = solve_spec(&spec, slope, &args.sim, &file, &args.solver, 0)?;

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    println!(
        "sizing at a_tilde={} via {}({}), safety factor {}",
        sig9(slope.a_tilde),
        solved.method,
        solved.params,
        safety
    );
    println!("percentile  capacity_mw   with_safety_mw");
    for &q in &percentiles {
        let b_tilde = solved.law.percentile(q)?;
        let capacity = b_tilde / slope.beta;
        let with_safety = capacity * safety;
        let covered = b_tilde == 0.0;
        let note = if covered { "point mass covers q" } else { "" };
        println!(
            "{q:<11} {:<13} {:<14} {}",
            format!("{capacity:.3}"),
            format!("{with_safety:.3}"),
            note
        );
        rows.push(format!(
            "{},{},{},{},{}",
            q,
            sig9(b_tilde),
            sig9(capacity),
            sig9(with_safety),
            note
        ));
        json_rows.push(json!({
            "q": q,
            "b_tilde": sig9_value(b_tilde),
            "capacity_mw": sig9_value(capacity),
            "capacity_with_safety_mw": sig9_value(with_safety),
            "point_mass_covers_q": covered,
        }));
    }

    if args.out.is_some() {
        let path = out_path(args.out.as_ref(), "size.csv");
        write_text(
            &path,
            &csv_text(
                "percentile,b_tilde,capacity_mw,capacity_with_safety_mw,note",
                rows,
            ),
        )?;
        println!("table -> {}", path.display());
    }
    if args.summary.is_some() {
        let path = out_path(args.summary.as_ref(), "size.json");
        write_json(
            &path,
            &json!({
                "a_tilde": sig9_value(slope.a_tilde),
                "beta": sig9_value(slope.beta),
                "method": solved.method,
                "params": solved.params,
                "safety_factor": safety,
                "p0": sig9_value(solved.law.point_mass()),
                "rows": json_rows,
            }),
        )?;
        println!("report -> {}", path.display());
    }
    Ok(())
}

// ============================================================================
// compare
// ============================================================================

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub slope: SlopeOpts,
    /// At least two method specs, e.g. `analytic:100,nystrom:1000,simulate`.
    #[arg(long)]
    pub methods: String,
    #[command(flatten)]
    pub solver: SolverOpts,
    #[command(flatten)]
    pub sim: SimOpts,
    /// Comma-separated percentile levels for the delta report.
    #[arg(long)]
    pub percentiles: Option<String>,
    /// Report path (default: compare.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let file = FileConfig::load(args.slope.config.as_ref())?;
    let slope = args.slope.resolve(&file)?;
    let specs = MethodSpec::parse_list(&args.methods)?;
    if specs.len() < 2 {
        bail!("compare needs at least two methods");
    }
    let percentiles = parse_percentiles(args.percentiles.as_ref(), &file)?;

    let solved: Vec<SolvedLaw> = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| solve_spec(spec, slope, &args.sim, &file, &args.solver, i as u64))
        .collect::<Result<_>>()?;

    // the grid must match any histogram-backed law; simulations inherit the
    // shared bin-width flag, so one width fits all
    let bin_width = solved
        .iter()
        .find_map(|s| s.law.bin_width_hint())
        .unwrap_or(0.05);
    let upper = solved
        .iter()
        .map(|s| s.law.percentile(1.0 - 1e-9).unwrap_or(30.0))
        .fold(1.0_f64, f64::max);
    let grid = EvaluationGrid::spanning(bin_width, upper)?;

    let runs: Vec<serde_json::Value> = solved
        .iter()
        .map(|s| law_summary(slope, s, &percentiles))
        .collect::<Result<_>>()?;

    let mut comparisons = Vec::new();
    for i in 0..solved.len() {
        for j in (i + 1)..solved.len() {
            let report = compare(
                solved[i].law.as_ref(),
                solved[j].law.as_ref(),
                &grid,
                &percentiles,
            )?;
            println!(
                "{}({}) vs {}({}): d_l1={} d_l1_conditional={} [{}s vs {}s]",
                solved[i].method,
                solved[i].params,
                solved[j].method,
                solved[j].params,
                sig9(report.d_l1),
                sig9(report.d_l1_conditional),
                sig9(solved[i].runtime_seconds),
                sig9(solved[j].runtime_seconds),
            );
            comparisons.push(json!({
                "first": { "method": solved[i].method, "params": solved[i].params },
                "second": { "method": solved[j].method, "params": solved[j].params },
                "report": report,
            }));
        }
    }

    let path = out_path(args.out.as_ref(), "compare.json");
    write_json(
        &path,
        &json!({
            "a_tilde": sig9_value(slope.a_tilde),
            "grid": { "bin_width": sig9_value(grid.bin_width), "n_bins": grid.n_bins },
            "runs": runs,
            "comparisons": comparisons,
        }),
    )?;
    println!("report -> {}", path.display());
    Ok(())
}

// ============================================================================
// sweep
// ============================================================================

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Slopes: a comma list `0.3,0.9,2.0` or a range `start:stop:step`.
    #[arg(long, value_name = "LIST")]
    pub a_tilde_list: String,
    /// Method specs to sweep, e.g. `analytic:100,simulate`.
    #[arg(long)]
    pub methods: String,
    /// Percentile level per sweep point.
    #[arg(long, default_value_t = 0.99)]
    pub q: f64,
    /// Worker threads (default: one per core).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// TOML config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverOpts,
    #[command(flatten)]
    pub sim: SimOpts,
    /// Sweep table path (default: sweep.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_slope_list(text: &str) -> Result<Vec<f64>> {
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            bail!("range form is start:stop:step");
        };
        if step <= 0.0 || step.is_nan() || stop < start {
            bail!("range needs start <= stop and a positive step");
        }
        let mut values = Vec::new();
        let mut v = start;
        while v <= stop + 1e-12 {
            values.push(v);
            v += step;
        }
        Ok(values)
    } else {
        Ok(text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()?)
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_ref())?;
    let slopes = parse_slope_list(&args.a_tilde_list)?;
    if !slopes.iter().all(|a| *a > 0.0) {
        bail!("swept slopes must be positive");
    }
    let specs = MethodSpec::parse_list(&args.methods)?;
    if specs.is_empty() {
        bail!("sweep needs at least one method");
    }
    if !(args.q > 0.0 && args.q < 1.0) {
        bail!("percentile level must lie in (0, 1)");
    }

    let jobs = args.jobs.or(file.jobs);
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            builder = builder.num_threads(n);
        }
        builder.build()?
    };

    let tasks: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|m| (0..slopes.len()).map(move |s| (m, s)))
        .collect();
    let results: Vec<Result<String>> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(m, s)| {
                let slope = Slope {
                    a: slopes[s],
                    beta: 1.0,
                    a_tilde: slopes[s],
                };
                let solved =
                    solve_spec(&specs[m], slope, &args.sim, &file, &args.solver, s as u64)?;
                let b_q = solved.law.percentile(args.q)?;
                Ok(format!(
                    "{},{},{},{}",
                    sig9(slopes[s]),
                    sig9(b_q),
                    solved.method,
                    solved.params.replace(',', ";"),
                ))
            })
            .collect()
    });
    let rows: Vec<String> = results.into_iter().collect::<Result<_>>()?;

    let path = out_path(args.out.as_ref(), "sweep.csv");
    write_text(&path, &csv_text("a_tilde,b99,method,params", rows))?;
    println!(
        "sweep: {} points x {} methods at q={} -> {}",
        slopes.len(),
        specs.len(),
        args.q,
        path.display()
    );
    Ok(())
}
