//! Method selection: turn a `name[:param]` spec into a solved law.

use crate::params::{FileConfig, SimOpts, Slope, SolverOpts};
use anyhow::{bail, Result};
use ramplaw::{
    simulate_law, solve_resolvent, NeumannSolution, QuadratureGrid, StationaryLaw,
    ToeplitzOperator, DEFAULT_MAX_TERMS,
};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodKind {
    Analytic,
    Nystrom,
    Simulate,
}

#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub kind: MethodKind,
    /// Series terms or grid point count, depending on the kind.
    pub param: Option<usize>,
}

impl MethodKind {
    fn from_name(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "analytic" => MethodKind::Analytic,
            "nystrom" => MethodKind::Nystrom,
            "simulate" => MethodKind::Simulate,
            other => bail!("unknown method {other:?} (use analytic|nystrom|simulate)"),
        })
    }
}

/// Flag value if given, else the config file's `method`, else analytic.
pub fn resolve_method(flag: Option<MethodKind>, file: &FileConfig) -> Result<MethodKind> {
    match (flag, file.method.as_deref()) {
        (Some(kind), _) => Ok(kind),
        (None, Some(name)) => MethodKind::from_name(name),
        (None, None) => Ok(MethodKind::Analytic),
    }
}

impl MethodSpec {
    /// Parse `analytic`, `analytic:100`, `nystrom:1000`, `simulate`, ...
    pub fn parse(text: &str) -> Result<Self> {
        let (name, param) = match text.split_once(':') {
            Some((n, p)) => (n, Some(p.parse::<usize>()?)),
            None => (text, None),
        };
        Ok(Self {
            kind: MethodKind::from_name(name)?,
            param,
        })
    }

    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        text.split(',').map(Self::parse).collect()
    }
}

/// A solved law with its provenance and wall time.
pub struct SolvedLaw {
    pub law: Box<dyn StationaryLaw>,
    pub method: &'static str,
    pub params: String,
    pub runtime_seconds: f64,
}

/// Solve one method spec at the given slope. `replica` offsets the
/// simulation seed so sweep points use independent streams.
pub fn solve(
    spec: &MethodSpec,
    slope: Slope,
    sim: &SimOpts,
    file: &FileConfig,
    solver: &SolverOpts,
    replica: u64,
) -> Result<SolvedLaw> {
    let start = Instant::now();
    match spec.kind {
        MethodKind::Analytic => {
            let terms = spec.param.or(solver.terms).or(file.terms);
            let solution = match terms {
                Some(m) => NeumannSolution::solve(slope.a_tilde, m)?,
                None => NeumannSolution::solve_adaptive(slope.a_tilde, DEFAULT_MAX_TERMS)?,
            };
            let params = format!("M={}", solution.order());
            Ok(SolvedLaw {
                law: Box::new(solution),
                method: "analytic",
                params,
                runtime_seconds: start.elapsed().as_secs_f64(),
            })
        }
        MethodKind::Nystrom => {
            let n_points = spec
                .param
                .or(solver.n_points)
                .or(file.n_points)
                .unwrap_or(1001);
            let grid = match solver.b_max.or(file.b_max) {
                Some(b_max) => QuadratureGrid::new(n_points, b_max)?,
                None => QuadratureGrid::with_default_truncation(n_points, slope.a_tilde)?,
            };
            let params = format!("N={},b_max={:.2}", n_points, grid.b_max());
            let solution = solve_resolvent(&ToeplitzOperator::build(grid, slope.a_tilde)?)?;
            Ok(SolvedLaw {
                law: Box::new(solution),
                method: "nystrom",
                params,
                runtime_seconds: start.elapsed().as_secs_f64(),
            })
        }
        MethodKind::Simulate => {
            let mut cfg = sim.build(slope, file)?;
            if let Some(steps) = spec.param {
                cfg.n_steps = steps;
            }
            cfg.seed = cfg.seed.wrapping_add(replica);
            let params = format!(
                "steps={},seed={},p_max={}",
                cfg.n_steps,
                cfg.seed,
                cfg.p_max.map_or("inf".into(), |p| format!("{p}")),
            );
            let law = simulate_law(&cfg)?;
            Ok(SolvedLaw {
                law: Box::new(law),
                method: "simulate",
                params,
                runtime_seconds: start.elapsed().as_secs_f64(),
            })
        }
    }
}
