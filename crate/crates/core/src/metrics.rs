//! Quantitative comparison between stationary laws.
//!
//! Any two laws (analytic, quadrature, empirical) are compared through their
//! continuous densities on a shared bin-center grid. Two L1 readings are
//! reported: `d_l1` between the sub-probability densities (each of total
//! mass `1 - p0`, the point masses excluded) and `d_l1_conditional` between
//! the unit-normalized conditional densities `g / (1 - p0)`. Convergence
//! ladders against a simulation reference are stated in the conditional
//! reading; solver-vs-solver accuracy in the plain one.

use crate::error::{Error, Result};
use crate::neumann::{CoefficientTable, NeumannSolution};
use crate::nystrom::{solve_resolvent, QuadratureGrid, QuadratureSolution, ToeplitzOperator};
use crate::simulate::{simulate_law, EmpiricalLaw, SimulationConfig};
use serde::Serialize;

/// Common read-only view of a stationary battery-power law in normalized
/// units.
pub trait StationaryLaw {
    /// Probability of exactly zero battery power.
    fn point_mass(&self) -> f64;
    /// Continuous density at `b_tilde > 0`.
    fn density(&self, b_tilde: f64) -> f64;
    /// Cumulative distribution including the point mass.
    fn cdf(&self, b_tilde: f64) -> f64;
    /// Normalized percentile `b_q`.
    fn percentile(&self, q: f64) -> Result<f64>;
    /// Integral of the rescaled density; `p0 = 1/(1 + omega)`.
    fn omega(&self) -> f64 {
        (1.0 - self.point_mass()) / self.point_mass()
    }
    /// Native bin width for histogram-backed laws; grids must match it.
    fn bin_width_hint(&self) -> Option<f64> {
        None
    }
}

impl StationaryLaw for NeumannSolution {
    fn point_mass(&self) -> f64 {
        self.p0()
    }
    fn density(&self, b_tilde: f64) -> f64 {
        self.density(b_tilde)
            .expect("grid centers are non-negative")
    }
    fn cdf(&self, b_tilde: f64) -> f64 {
        NeumannSolution::cdf(self, b_tilde).expect("grid centers are non-negative")
    }
    fn percentile(&self, q: f64) -> Result<f64> {
        NeumannSolution::percentile(self, q)
    }
    fn omega(&self) -> f64 {
        NeumannSolution::omega(self)
    }
}

impl StationaryLaw for QuadratureSolution {
    fn point_mass(&self) -> f64 {
        self.p0()
    }
    fn density(&self, b_tilde: f64) -> f64 {
        QuadratureSolution::density(self, b_tilde)
    }
    fn cdf(&self, b_tilde: f64) -> f64 {
        QuadratureSolution::cdf(self, b_tilde)
    }
    fn percentile(&self, q: f64) -> Result<f64> {
        QuadratureSolution::percentile(self, q)
    }
    fn omega(&self) -> f64 {
        QuadratureSolution::omega(self)
    }
}

impl StationaryLaw for EmpiricalLaw {
    fn point_mass(&self) -> f64 {
        self.zero_fraction()
    }
    fn density(&self, b_tilde: f64) -> f64 {
        EmpiricalLaw::density(self, b_tilde)
    }
    fn cdf(&self, b_tilde: f64) -> f64 {
        EmpiricalLaw::cdf(self, b_tilde)
    }
    fn percentile(&self, q: f64) -> Result<f64> {
        EmpiricalLaw::percentile(self, q)
    }
    fn bin_width_hint(&self) -> Option<f64> {
        Some(self.bin_width())
    }
}

/// Shared evaluation grid: `n_bins` bins of width `bin_width`, densities
/// compared at bin centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaluationGrid {
    pub bin_width: f64,
    pub n_bins: usize,
}

impl EvaluationGrid {
    pub fn new(bin_width: f64, n_bins: usize) -> Result<Self> {
        if !(bin_width > 0.0 && n_bins > 0) {
            return Err(Error::GridMismatch(
                "grid needs a positive bin width and at least one bin".into(),
            ));
        }
        Ok(Self { bin_width, n_bins })
    }

    /// Grid covering `[0, upper]`.
    pub fn spanning(bin_width: f64, upper: f64) -> Result<Self> {
        Self::new(bin_width, (upper / bin_width).ceil().max(1.0) as usize)
    }

    /// Grid matching an empirical law's own bins.
    pub fn from_empirical(law: &EmpiricalLaw) -> Self {
        Self {
            bin_width: law.bin_width(),
            n_bins: law.densities().len().max(1),
        }
    }

    pub fn upper(&self) -> f64 {
        self.bin_width * self.n_bins as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_bins).map(move |i| (i as f64 + 0.5) * self.bin_width)
    }

    fn check_compatible(&self, law: &dyn StationaryLaw) -> Result<()> {
        if let Some(w) = law.bin_width_hint() {
            if (w - self.bin_width).abs() > 1e-12 * w.max(self.bin_width) {
                return Err(Error::GridMismatch(format!(
                    "histogram-backed law uses bin width {w}, grid uses {}",
                    self.bin_width
                )));
            }
        }
        Ok(())
    }
}

/// L1 distance between the continuous parts on the grid; point masses
/// excluded.
pub fn l1_distance(
    a: &dyn StationaryLaw,
    b: &dyn StationaryLaw,
    grid: &EvaluationGrid,
) -> Result<f64> {
    grid.check_compatible(a)?;
    grid.check_compatible(b)?;
    Ok(grid
        .centers()
        .map(|c| (a.density(c) - b.density(c)).abs())
        .sum::<f64>()
        * grid.bin_width)
}

/// L1 distance between the unit-normalized conditional densities
/// `g / (1 - p0)`.
pub fn l1_distance_conditional(
    a: &dyn StationaryLaw,
    b: &dyn StationaryLaw,
    grid: &EvaluationGrid,
) -> Result<f64> {
    grid.check_compatible(a)?;
    grid.check_compatible(b)?;
    let (na, nb) = (1.0 - a.point_mass(), 1.0 - b.point_mass());
    if na <= 0.0 || nb <= 0.0 {
        return Err(Error::Domain(
            "conditional density undefined for a pure point mass".into(),
        ));
    }
    Ok(grid
        .centers()
        .map(|c| (a.density(c) / na - b.density(c) / nb).abs())
        .sum::<f64>()
        * grid.bin_width)
}

/// One percentile discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PercentileDelta {
    pub q: f64,
    pub delta: f64,
}

/// Side-by-side comparison of two laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// L1 distance of the sub-probability continuous densities.
    pub d_l1: f64,
    /// L1 distance of the unit-normalized conditional densities.
    pub d_l1_conditional: f64,
    /// Signed point-mass difference `p0_a - p0_b`.
    pub p0_delta: f64,
    /// Absolute percentile gaps `|b_q^a - b_q^b|`.
    pub percentile_deltas: Vec<PercentileDelta>,
    /// Grid the densities were compared on.
    pub grid: EvaluationGrid,
}

/// Full comparison at the given percentile levels.
pub fn compare(
    a: &dyn StationaryLaw,
    b: &dyn StationaryLaw,
    grid: &EvaluationGrid,
    percentiles: &[f64],
) -> Result<ComparisonReport> {
    let d_l1 = l1_distance(a, b, grid)?;
    let d_l1_conditional = l1_distance_conditional(a, b, grid)?;
    let mut percentile_deltas = Vec::with_capacity(percentiles.len());
    for &q in percentiles {
        percentile_deltas.push(PercentileDelta {
            q,
            delta: (a.percentile(q)? - b.percentile(q)?).abs(),
        });
    }
    Ok(ComparisonReport {
        d_l1,
        d_l1_conditional,
        p0_delta: a.point_mass() - b.point_mass(),
        percentile_deltas,
        grid: *grid,
    })
}

/// Smallest truncation order `M` whose analytic law comes within `tol` of
/// the reference in `d_l1`, extending one shared coefficient table row by
/// row.
pub fn terms_for_tolerance(
    a_tilde: f64,
    reference: &dyn StationaryLaw,
    grid: &EvaluationGrid,
    tol: f64,
    max_terms: usize,
) -> Result<usize> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    grid.check_compatible(reference)?;
    let centers: Vec<f64> = grid.centers().collect();
    let ref_density: Vec<f64> = centers.iter().map(|&c| reference.density(c)).collect();
    let mut table = CoefficientTable::build(a_tilde, 0)?;
    let mut u_partial = vec![0.0_f64; centers.len()];
    let mut omega = 0.0;
    let mut best = f64::INFINITY;
    for order in 0..=max_terms {
        table.extend_to(order);
        for (u, &c) in u_partial.iter_mut().zip(&centers) {
            *u += table.term_density(order, c);
        }
        omega += table.omega_terms()[order];
        let p0 = 1.0 / (1.0 + omega);
        let d: f64 = u_partial
            .iter()
            .zip(&ref_density)
            .map(|(&u, &r)| (p0 * u - r).abs())
            .sum::<f64>()
            * grid.bin_width;
        if d <= tol {
            return Ok(order);
        }
        best = best.min(d);
    }
    Err(Error::NoConvergence {
        tolerance: tol,
        max_terms,
        best,
    })
}

// ============================================================================
// Sweep harness
// ============================================================================

/// Solver selection for percentile sweeps.
#[derive(Debug, Clone)]
pub enum SweepMethod {
    /// Neumann series truncated at `terms`.
    Analytic { terms: usize },
    /// Nystrom resolvent on `n_points` nodes with the default truncation.
    Nystrom { n_points: usize },
    /// Monte Carlo with the template's law kind, step count and capacity;
    /// the tolerable change is re-derived from each swept slope and trace
    /// `i` runs on stream `seed + i`.
    Simulate { template: SimulationConfig },
}

/// One sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub a_tilde: f64,
    pub b_q: f64,
}

/// Percentile level `q` across slopes, by the chosen method.
pub fn percentile_curve(a_tildes: &[f64], method: &SweepMethod, q: f64) -> Result<Vec<SweepPoint>> {
    a_tildes
        .iter()
        .enumerate()
        .map(|(i, &a_tilde)| {
            let b_q = percentile_for(a_tilde, method, q, i as u64)?;
            Ok(SweepPoint { a_tilde, b_q })
        })
        .collect()
}

/// Evaluate one sweep point; `replica` offsets the simulation stream.
pub fn percentile_for(a_tilde: f64, method: &SweepMethod, q: f64, replica: u64) -> Result<f64> {
    match method {
        SweepMethod::Analytic { terms } => NeumannSolution::solve(a_tilde, *terms)?.percentile(q),
        SweepMethod::Nystrom { n_points } => {
            let grid = QuadratureGrid::with_default_truncation(*n_points, a_tilde)?;
            solve_resolvent(&ToeplitzOperator::build(grid, a_tilde)?)?.percentile(q)
        }
        SweepMethod::Simulate { template } => {
            let mut config = template.clone();
            config.a = a_tilde / config.law.beta();
            config.seed = template.seed.wrapping_add(replica);
            simulate_law(&config)?.percentile(q)
        }
    }
}
