//! Monte Carlo reference for the stationary law.
//!
//! A primary power series is integrated from IID increments (optionally
//! clipped to the plant range `[0, p_max]`), the dispatch recursion
//! `B_n = max(-Delta_n - a, 0)` is run over it, and the battery trace is
//! reduced to a point-mass estimate plus a histogram density in normalized
//! units `b_tilde = beta * B`.
//!
//! Reproducibility contract: one ChaCha8 stream per trace, seeded from the
//! 64-bit config seed. Each step consumes one uniform variate for an SL law
//! and two (value, then component pick) for a GL law, in trace order.
//! Replicas should use `seed + replica_index`.

use crate::distributions::IncrementLaw;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default histogram bin width in normalized units.
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Default number of leading steps discarded before statistics.
pub const DEFAULT_BURN_IN: usize = 10_000;

/// Default normalized plant capacity `beta * P_max` when finite-capacity
/// mode is requested without an explicit value.
pub const DEFAULT_NORMALIZED_CAPACITY: f64 = 90.0;

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Increment law of the primary power changes.
    pub law: IncrementLaw,
    /// Number of dispatch steps.
    pub n_steps: usize,
    /// Tolerable step change \[MW\].
    pub a: f64,
    /// Plant capacity \[MW\]; `None` removes both clamps.
    pub p_max: Option<f64>,
    /// Initial primary power \[MW\]; defaults to `p_max / 2` (0 when
    /// unbounded, where the battery trace does not depend on it).
    pub p_init: Option<f64>,
    /// RNG stream seed.
    pub seed: u64,
    /// Histogram bin width in normalized units.
    pub bin_width: f64,
    /// Leading steps excluded from the law estimate.
    pub burn_in: usize,
}

impl SimulationConfig {
    pub fn new(law: IncrementLaw, a: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            law,
            n_steps,
            a,
            p_max: None,
            p_init: None,
            seed,
            bin_width: DEFAULT_BIN_WIDTH,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn with_capacity(mut self, p_max: f64) -> Self {
        self.p_max = Some(p_max);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 1 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerable step change must be positive, got {}",
                self.a
            )));
        }
        if let Some(p_max) = self.p_max {
            if !(p_max.is_finite() && p_max > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "plant capacity must be positive, got {p_max}"
                )));
            }
            if let Some(p_init) = self.p_init {
                if !(0.0..=p_max).contains(&p_init) {
                    return Err(Error::InvalidParameter(format!(
                        "initial power {p_init} outside [0, {p_max}]"
                    )));
                }
            }
        }
        if self.bin_width <= 0.0 || self.bin_width.is_nan() {
            return Err(Error::InvalidParameter("bin width must be positive".into()));
        }
        if self.burn_in >= self.n_steps {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} swallows the whole trace of {} steps",
                self.burn_in, self.n_steps
            )));
        }
        Ok(())
    }

    fn initial_power(&self) -> f64 {
        self.p_init
            .unwrap_or_else(|| self.p_max.map_or(0.0, |p| 0.5 * p))
    }
}

/// Integrate the increment stream into the primary power series
/// `P_0, .., P_N` with both plant clamps applied.
pub fn synthesize_power(config: &SimulationConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cap = config.p_max.unwrap_or(f64::INFINITY);
    let mut series = Vec::with_capacity(config.n_steps + 1);
    let mut p = config.initial_power();
    series.push(p);
    for _ in 0..config.n_steps {
        p = (p + config.law.sample(&mut rng)).clamp(0.0, cap);
        series.push(p);
    }
    Ok(series)
}

/// Run the dispatch recursion over a power series; `B_0 = 0`.
///
/// Uses the reflected-walk form `B_n = max(B_{n-1} - Y_n - a, 0)` with the
/// realized (post-clamp) increments `Y_n = P_n - P_{n-1}`.
pub fn run_dispatch(power: &[f64], a: f64) -> Vec<f64> {
    let mut battery = Vec::with_capacity(power.len());
    let mut b = 0.0;
    battery.push(b);
    for step in power.windows(2) {
        b = (b - (step[1] - step[0]) - a).max(0.0);
        battery.push(b);
    }
    battery
}

/// Dispatch through the grid-power deficit `Delta_n = P_n - R_{n-1}`,
/// carrying `R = P + B` explicitly. Algebraically identical to
/// [`run_dispatch`]; kept as the cross-check route for the recursion
/// rewrite.
pub fn run_dispatch_delta_form(power: &[f64], a: f64) -> Vec<f64> {
    let mut battery = Vec::with_capacity(power.len());
    let mut b = 0.0;
    let mut r_prev = power[0] + b;
    battery.push(b);
    for &p in &power[1..] {
        let delta = p - r_prev;
        b = (-delta - a).max(0.0);
        r_prev = p + b;
        battery.push(b);
    }
    battery
}

/// Grid power `R = P + B`.
pub fn grid_power(power: &[f64], battery: &[f64]) -> Vec<f64> {
    power.iter().zip(battery).map(|(p, b)| p + b).collect()
}

/// Fractions of steps violating the ramp limit, reported under both
/// interpretations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationRates {
    /// Steps with a controlled-system deficit `Delta_n < -a`; exactly the
    /// steps on which the battery fires.
    pub controlled: f64,
    /// Steps whose realized primary increment alone breaches the limit,
    /// `Y_n < -a`.
    pub raw: f64,
}

/// Count ramp violations over a dispatched trace.
pub fn violation_rates(power: &[f64], battery: &[f64], a: f64) -> Result<ViolationRates> {
    if power.len() < 2 || battery.len() != power.len() {
        return Err(Error::EmptySeries);
    }
    let n = power.len() - 1;
    let mut controlled = 0usize;
    let mut raw = 0usize;
    for i in 1..=n {
        let r_prev = power[i - 1] + battery[i - 1];
        if power[i] - r_prev < -a {
            controlled += 1;
        }
        if power[i] - power[i - 1] < -a {
            raw += 1;
        }
    }
    Ok(ViolationRates {
        controlled: controlled as f64 / n as f64,
        raw: raw as f64 / n as f64,
    })
}

// ============================================================================
// Empirical law
// ============================================================================

/// Battery-power law estimated from a trace: an atom at zero plus a
/// histogram density over `b_tilde > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    zero_fraction: f64,
    bin_width: f64,
    densities: Vec<f64>,
    n_effective: usize,
}

impl EmpiricalLaw {
    /// Estimated point mass at zero.
    pub fn zero_fraction(&self) -> f64 {
        self.zero_fraction
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Histogram densities per bin, normalized so that
    /// `zero_fraction + sum(density) * bin_width = 1`.
    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn n_effective(&self) -> usize {
        self.n_effective
    }

    /// Upper edge of the populated support.
    pub fn support_end(&self) -> f64 {
        self.densities.len() as f64 * self.bin_width
    }

    pub fn total_mass(&self) -> f64 {
        self.zero_fraction + self.densities.iter().sum::<f64>() * self.bin_width
    }

    /// Piecewise-constant density lookup.
    pub fn density(&self, b_tilde: f64) -> f64 {
        if b_tilde < 0.0 {
            return 0.0;
        }
        let idx = (b_tilde / self.bin_width) as usize;
        self.densities.get(idx).copied().unwrap_or(0.0)
    }

    /// Cumulative distribution including the atom at zero.
    pub fn cdf(&self, b_tilde: f64) -> f64 {
        if b_tilde < 0.0 {
            return 0.0;
        }
        let idx = (b_tilde / self.bin_width) as usize;
        let full: f64 = self.densities.iter().take(idx).sum();
        let partial = self
            .densities
            .get(idx)
            .map_or(0.0, |d| d * (b_tilde - idx as f64 * self.bin_width));
        (self.zero_fraction + full * self.bin_width + partial).min(1.0)
    }

    /// Percentile with linear interpolation inside the containing bin.
    pub fn percentile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "percentile level must lie in (0, 1), got {q}"
            )));
        }
        if q <= self.zero_fraction {
            return Ok(0.0);
        }
        let mut cum = self.zero_fraction;
        for (i, &d) in self.densities.iter().enumerate() {
            let bin_mass = d * self.bin_width;
            if cum + bin_mass >= q {
                let t = if bin_mass > 0.0 {
                    (q - cum) / bin_mass
                } else {
                    0.0
                };
                return Ok((i as f64 + t) * self.bin_width);
            }
            cum += bin_mass;
        }
        Ok(self.support_end())
    }
}

/// Bin a battery trace into an [`EmpiricalLaw`] in normalized units.
///
/// Samples with index `< burn_in` are discarded; `beta` converts MW values
/// to `b_tilde`.
pub fn reduce_to_law(
    battery: &[f64],
    beta: f64,
    bin_width: f64,
    burn_in: usize,
) -> Result<EmpiricalLaw> {
    if battery.len() <= burn_in {
        return Err(Error::EmptySeries);
    }
    if !(beta > 0.0 && bin_width > 0.0) {
        return Err(Error::InvalidParameter(
            "beta and bin width must be positive".into(),
        ));
    }
    let mut counts: Vec<u64> = Vec::new();
    let mut zeros = 0u64;
    let mut n_eff = 0usize;
    for &b in &battery[burn_in..] {
        n_eff += 1;
        if b == 0.0 {
            zeros += 1;
        } else {
            let idx = (beta * b / bin_width) as usize;
            if idx >= counts.len() {
                counts.resize(idx + 1, 0);
            }
            counts[idx] += 1;
        }
    }
    let scale = 1.0 / (n_eff as f64 * bin_width);
    Ok(EmpiricalLaw {
        zero_fraction: zeros as f64 / n_eff as f64,
        bin_width,
        densities: counts.iter().map(|&c| c as f64 * scale).collect(),
        n_effective: n_eff,
    })
}

/// Run a whole configured trace and reduce it, without materializing the
/// series. Bit-identical to `synthesize_power` + `run_dispatch` +
/// `reduce_to_law` under the same config.
pub fn simulate_law(config: &SimulationConfig) -> Result<EmpiricalLaw> {
    config.validate()?;
    let beta = config.law.beta();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cap = config.p_max.unwrap_or(f64::INFINITY);
    let mut counts: Vec<u64> = Vec::new();
    let mut zeros = 0u64;
    let mut n_eff = 0usize;
    let mut p_prev = config.initial_power();
    let mut b = 0.0_f64;
    // step index 0 is the initial state; dispatch steps are 1..=n_steps
    if config.burn_in == 0 {
        n_eff += 1;
        zeros += 1; // B_0 = 0
    }
    for step in 1..=config.n_steps {
        let p = (p_prev + config.law.sample(&mut rng)).clamp(0.0, cap);
        b = (b - (p - p_prev) - config.a).max(0.0);
        p_prev = p;
        if step >= config.burn_in {
            n_eff += 1;
            if b == 0.0 {
                zeros += 1;
            } else {
                let idx = (beta * b / config.bin_width) as usize;
                if idx >= counts.len() {
                    counts.resize(idx + 1, 0);
                }
                counts[idx] += 1;
            }
        }
    }
    let scale = 1.0 / (n_eff as f64 * config.bin_width);
    Ok(EmpiricalLaw {
        zero_fraction: zeros as f64 / n_eff as f64,
        bin_width: config.bin_width,
        densities: counts.iter().map(|&c| c as f64 * scale).collect(),
        n_effective: n_eff,
    })
}
