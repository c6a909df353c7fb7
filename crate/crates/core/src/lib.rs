//! Stationary law of battery power under negative ramp-rate control.
//!
//! A storage system that tops up every grid-power drop steeper than a
//! tolerable slope `a` evolves as a reflected random walk. This crate
//! computes the stationary law of that walk — a point mass `p0` at zero
//! plus a continuous density — by three independent routes, and derives
//! inverter sizing percentiles from it:
//!
//! * [`neumann`]: analytical series solution of the stationary integral
//!   equation for simple-Laplace increments,
//! * [`nystrom`]: direct numerical resolvent of the same equation on a
//!   truncated grid,
//! * [`simulate`]: Monte Carlo dispatch over synthetic power series,
//!   including generalized-Laplace increments and finite plant capacity,
//!
//! with [`metrics`] quantifying the agreement between any two of them.
//!
//! All laws are expressed in normalized units: powers scale with the
//! increment scale `beta`, and the single free parameter is the normalized
//! tolerable slope `a_tilde = beta * a`.

pub mod distributions;
pub mod error;
pub mod integrate;
pub mod metrics;
pub mod neumann;
pub mod nystrom;
pub mod simulate;

pub use distributions::{
    equivalent_gamma, mgf, optimal_decay, shifted_kernel, DecayEstimate, IncrementLaw, LawKind,
    NormalizedSlope,
};
pub use error::{Error, Result};
pub use metrics::{
    compare, l1_distance, l1_distance_conditional, percentile_curve, terms_for_tolerance,
    ComparisonReport, EvaluationGrid, StationaryLaw, SweepMethod, SweepPoint,
};
pub use neumann::{
    closed_form_m2, lower_transfer, upper_incomplete_gamma_int, upper_transfer, CoefficientTable,
    NeumannSolution, DEFAULT_MAX_TERMS,
};
pub use nystrom::{
    default_truncation, solve_picard, solve_resolvent, QuadratureGrid, QuadratureSolution,
    ToeplitzOperator, DEFAULT_PICARD_STEPS,
};
pub use simulate::{
    grid_power, reduce_to_law, run_dispatch, run_dispatch_delta_form, simulate_law,
    synthesize_power, violation_rates, EmpiricalLaw, SimulationConfig, ViolationRates,
    DEFAULT_BIN_WIDTH, DEFAULT_BURN_IN, DEFAULT_NORMALIZED_CAPACITY,
};
