//! Shared option groups and config-file merging.
//!
//! Every run parameter can come from a TOML config file (`--config`) or a
//! flag; flags win. The file schema mirrors the long flag names:
//!
//! ```toml
//! a_tilde = 0.9018        # or: a = 1.503 and beta = 0.6
//! method = "analytic"     # analytic | nystrom | simulate
//! terms = 100
//! n_points = 1000
//! b_max = 80.0
//! steps = 5000000
//! seed = 1
//! p_max = 150.0           # MW; or finite_capacity = true for the default
//! c = 0.25
//! zeta = 10.0
//! bin_width = 0.05
//! burn_in = 10000
//! percentiles = [0.90, 0.95, 0.99]
//! safety_factor = 1.2
//! jobs = 4
//! ```

use anyhow::{bail, Context, Result};
use ramplaw::{IncrementLaw, SimulationConfig, DEFAULT_NORMALIZED_CAPACITY};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub a_tilde: Option<f64>,
    pub a: Option<f64>,
    pub beta: Option<f64>,
    pub method: Option<String>,
    pub terms: Option<usize>,
    pub n_points: Option<usize>,
    pub b_max: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub p_max: Option<f64>,
    pub finite_capacity: Option<bool>,
    pub p_init: Option<f64>,
    pub c: Option<f64>,
    pub zeta: Option<f64>,
    pub bin_width: Option<f64>,
    pub burn_in: Option<usize>,
    pub percentiles: Option<Vec<f64>>,
    pub safety_factor: Option<f64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }
}

/// Slope given either normalized or as a physical pair.
#[derive(Debug, clap::Args)]
pub struct SlopeOpts {
    /// Normalized tolerable slope `a_tilde = beta * a`.
    #[arg(long, value_name = "A_TILDE")]
    pub a_tilde: Option<f64>,
    /// Tolerable step change in MW (requires --beta).
    #[arg(long, value_name = "MW")]
    pub a: Option<f64>,
    /// Inverse power scale of the increments in 1/MW (requires --a).
    #[arg(long, value_name = "PER_MW")]
    pub beta: Option<f64>,
    /// TOML config file; flags override its entries.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Resolved slope: physical pair plus the normalized product.
#[derive(Debug, Clone, Copy)]
pub struct Slope {
    pub a: f64,
    pub beta: f64,
    pub a_tilde: f64,
}

impl SlopeOpts {
    pub fn resolve(&self, file: &FileConfig) -> Result<Slope> {
        let a_tilde = self.a_tilde.or(file.a_tilde);
        let a = self.a.or(file.a);
        let beta = self.beta.or(file.beta);
        match (a_tilde, a, beta) {
            (Some(at), None, None) => Ok(Slope {
                a: at,
                beta: 1.0,
                a_tilde: at,
            }),
            (None, Some(a), Some(beta)) => Ok(Slope {
                a,
                beta,
                a_tilde: a * beta,
            }),
            (None, None, None) => bail!("missing slope: give --a-tilde, or --a with --beta"),
            _ => bail!("give exactly one of --a-tilde or the pair --a/--beta"),
        }
    }
}

/// Monte Carlo knobs shared by `simulate`, `compare`, `sweep` and `size`.
#[derive(Debug, clap::Args)]
pub struct SimOpts {
    /// Number of dispatch steps (default 5,000,000).
    #[arg(long)]
    pub steps: Option<usize>,
    /// RNG stream seed (default 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Plant capacity in MW (upper clamp of the primary power).
    #[arg(long, value_name = "MW")]
    pub p_max: Option<f64>,
    /// Clamp the plant at the default normalized capacity (90 / beta MW).
    #[arg(long)]
    pub finite_capacity: bool,
    /// Initial primary power in MW; defaults to half the capacity.
    #[arg(long, value_name = "MW")]
    pub p_init: Option<f64>,
    /// Mixture weight of the narrow increment component; 0 = simple Laplace.
    #[arg(long)]
    pub c: Option<f64>,
    /// Narrow-component scale ratio.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Histogram bin width in normalized units.
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Leading steps discarded before statistics.
    #[arg(long)]
    pub burn_in: Option<usize>,
}

impl SimOpts {
    /// Build the increment law: generalized when a positive mixture weight
    /// is configured, simple Laplace otherwise.
    pub fn law(&self, slope: Slope, file: &FileConfig) -> Result<IncrementLaw> {
        let c = self.c.or(file.c).unwrap_or(0.0);
        let zeta = self.zeta.or(file.zeta).unwrap_or(10.0);
        let law = if c > 0.0 {
            IncrementLaw::generalized(slope.beta, c, zeta)?
        } else {
            IncrementLaw::simple_laplace(slope.beta)?
        };
        Ok(law)
    }

    pub fn build(&self, slope: Slope, file: &FileConfig) -> Result<SimulationConfig> {
        let mut cfg = SimulationConfig::new(
            self.law(slope, file)?,
            slope.a,
            self.steps.or(file.steps).unwrap_or(5_000_000),
            self.seed.or(file.seed).unwrap_or(1),
        );
        let finite = self.finite_capacity || file.finite_capacity.unwrap_or(false);
        cfg.p_max = self.p_max.or(file.p_max).or(if finite {
            Some(DEFAULT_NORMALIZED_CAPACITY / slope.beta)
        } else {
            None
        });
        cfg.p_init = self.p_init.or(file.p_init);
        if let Some(w) = self.bin_width.or(file.bin_width) {
            cfg.bin_width = w;
        }
        if let Some(b) = self.burn_in.or(file.burn_in) {
            cfg.burn_in = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Truncation-order / grid-resolution flags shared by the solver-backed
/// commands.
#[derive(Debug, clap::Args)]
pub struct SolverOpts {
    /// Series terms for the analytic method (adaptive when omitted).
    #[arg(long)]
    pub terms: Option<usize>,
    /// Grid point count for the Nystrom method.
    #[arg(long)]
    pub n_points: Option<usize>,
    /// Truncation point for the Nystrom grid (auto when omitted).
    #[arg(long)]
    pub b_max: Option<f64>,
}

/// Percentile list with validation.
pub fn parse_percentiles(arg: Option<&String>, file: &FileConfig) -> Result<Vec<f64>> {
    let values: Vec<f64> = match arg {
        Some(text) => text
            .split(',')
            .map(|t| t.trim().parse::<f64>().context("parsing percentile list"))
            .collect::<Result<_>>()?,
        None => file
            .percentiles
            .clone()
            .unwrap_or_else(|| vec![0.90, 0.95, 0.99]),
    };
    if values.is_empty() || values.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        bail!("percentiles must lie strictly inside (0, 1)");
    }
    Ok(values)
}
