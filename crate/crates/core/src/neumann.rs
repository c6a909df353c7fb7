//! Analytical stationary law through the Neumann series.
//!
//! The stationary density of the reflected walk solves `(I - K)u = f` with
//! the SL kernel `f(x) = 0.5 exp(-|x + a_tilde|)`. Repeated application of
//! the kernel keeps the iterates inside the family
//!
//! ```text
//! v_n(b) = exp(-(b + (n+1) a)) * sum_k  Lam[n][k] * (b + a)^k
//! ```
//!
//! so the whole series reduces to a triangular coefficient recursion. Rows
//! are propagated by two transfer families: `upper_transfer` from the kernel
//! branch above the kink and `lower_transfer` from the branch below it.
//!
//! Internally the rows are stored in a factorially scaled basis
//! `Lam'[n][k] = Lam[n][k] * k!`, i.e. the polynomial part is expanded in
//! `w^k / k!`. In that basis both transfer kernels collapse to bounded
//! one-dimensional sequences in `k - r`, which keeps every intermediate
//! quantity inside f64 range for arbitrary truncation orders (the raw
//! transfers overflow near row 170). Evaluation pairs the scaled rows with
//! Poisson weights `e^{-w} w^k / k!`, which is the same algebra expressed
//! stably.

use crate::distributions::optimal_decay;
use crate::error::{Error, Result};

/// Truncation cap for the adaptive series builder.
pub const DEFAULT_MAX_TERMS: usize = 200;

/// Relative term-size threshold for the adaptive builder.
const ADAPTIVE_REL_TOL: f64 = 1e-10;

/// Arguments beyond this shifted coordinate evaluate to an exact zero: the
/// Poisson weight `e^{-w}` underflows and the true value is far below any
/// representable density.
const POISSON_UNDERFLOW_W: f64 = 700.0;

// ============================================================================
// Transfer coefficients (direct formulas)
// ============================================================================

/// Upper-branch transfer `U_{k->r}`, defined for `0 <= r <= k`:
///
/// ```text
/// U_{k->r} = sum_{m=r}^{k} (1/2) (k!/m!) C(m,r) a^(m-r) (1/2)^(k-m+1)
/// ```
///
/// Terms are accumulated through the exact ratio
/// `term_{m+1}/term_m = 2a/(m+1-r)`, so no standalone factorial or binomial
/// is ever formed. Overflows to infinity near `k ~ 170` like the quantity
/// itself; the table recursion does not route through this function.
pub fn upper_transfer(k: usize, r: usize, a_tilde: f64) -> Result<f64> {
    if r > k {
        return Err(Error::IndexOutOfRange(format!(
            "upper transfer needs r <= k, got k={k}, r={r}"
        )));
    }
    // term at m = r:  (1/2) * (k!/r!) * (1/2)^(k-r+1)
    let mut term = 0.5 * 0.5_f64.powi((k - r + 1) as i32);
    for j in (r + 1)..=k {
        term *= j as f64;
    }
    let mut acc = term;
    for m in r..k {
        term *= 2.0 * a_tilde / (m + 1 - r) as f64;
        acc += term;
    }
    Ok(acc)
}

/// Lower-branch transfer `L_{k->r}`, defined for `0 <= r <= k+1`:
///
/// ```text
/// L_{k->r} = (1/2) (1/(k+1)) C(k+1,r) a^(k+1-r),    L_{k->0} = 0
/// ```
pub fn lower_transfer(k: usize, r: usize, a_tilde: f64) -> Result<f64> {
    if r > k + 1 {
        return Err(Error::IndexOutOfRange(format!(
            "lower transfer needs r <= k+1, got k={k}, r={r}"
        )));
    }
    if r == 0 {
        return Ok(0.0);
    }
    let mut binom = 1.0;
    for i in 1..=r {
        binom *= (k + 2 - i) as f64 / i as f64;
    }
    Ok(0.5 / (k + 1) as f64 * binom * a_tilde.powi((k + 1 - r) as i32))
}

// ============================================================================
// Coefficient table
// ============================================================================

/// Triangular table of series coefficients for one normalized slope.
///
/// Row `n` holds the polynomial of the `n`-th Neumann term; the table can be
/// extended in place because each row depends only on its predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    a_tilde: f64,
    /// Scaled rows `Lam'[n][k] = Lam[n][k] * k!`.
    scaled_rows: Vec<Vec<f64>>,
    /// `a^j / j!`, extended on demand.
    poisson_a: Vec<f64>,
    /// Scaled upper transfer by difference `d = k - r`.
    up_kernel: Vec<f64>,
    /// Scaled lower transfer by difference `e = k + 1 - r` (`0.5 a^e / e!`).
    low_kernel: Vec<f64>,
}

impl CoefficientTable {
    /// Build rows `0..=order` for the slope `a_tilde > 0`.
    ///
    /// Rejects non-positive slopes: the effective increment then has
    /// non-negative drift and no stationary law exists.
    pub fn build(a_tilde: f64, order: usize) -> Result<Self> {
        if !(a_tilde.is_finite() && a_tilde > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalized slope must be positive and finite, got {a_tilde}"
            )));
        }
        let mut table = Self {
            a_tilde,
            scaled_rows: vec![vec![0.5]],
            poisson_a: vec![1.0],
            up_kernel: Vec::new(),
            low_kernel: Vec::new(),
        };
        table.extend_kernels(order + 1);
        table.extend_to(order);
        Ok(table)
    }

    fn extend_kernels(&mut self, needed: usize) {
        while self.poisson_a.len() <= needed + 1 {
            let j = self.poisson_a.len();
            let prev = self.poisson_a[j - 1];
            self.poisson_a.push(prev * self.a_tilde / j as f64);
        }
        // up_kernel[d] = 0.25 * s_d,  s_d = s_{d-1}/2 + a^d/d!
        let mut s = if self.up_kernel.is_empty() {
            0.0
        } else {
            4.0 * self.up_kernel[self.up_kernel.len() - 1]
        };
        while self.up_kernel.len() <= needed {
            let d = self.up_kernel.len();
            s = s / 2.0 + self.poisson_a[d];
            self.up_kernel.push(0.25 * s);
        }
        while self.low_kernel.len() <= needed + 1 {
            let e = self.low_kernel.len();
            self.low_kernel.push(0.5 * self.poisson_a[e]);
        }
    }

    /// Grow the table so that rows `0..=order` exist.
    pub fn extend_to(&mut self, order: usize) {
        self.extend_kernels(order + 1);
        while self.scaled_rows.len() <= order {
            let prev = &self.scaled_rows[self.scaled_rows.len() - 1];
            let len = prev.len();
            let mut next = vec![0.0; len + 1];
            for (r, slot) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, &lam) in prev.iter().enumerate().skip(r.saturating_sub(1)) {
                    let mut t = 0.0;
                    if k >= r {
                        t += self.up_kernel[k - r];
                    }
                    if r >= 1 {
                        t += self.low_kernel[k + 1 - r];
                    }
                    acc += lam * t;
                }
                *slot = acc;
            }
            self.scaled_rows.push(next);
        }
    }

    /// Highest built row index `M`.
    pub fn order(&self) -> usize {
        self.scaled_rows.len() - 1
    }

    pub fn a_tilde(&self) -> f64 {
        self.a_tilde
    }

    /// Raw coefficient `Lam[n][k]` as it appears in the polynomial basis
    /// `(b+a)^k`. Exact for the small indices where the raw value is
    /// representable; underflows to zero where `k!` exceeds f64 range.
    pub fn coefficient(&self, n: usize, k: usize) -> f64 {
        let mut factorial = 1.0_f64;
        for j in 2..=k {
            factorial *= j as f64;
        }
        self.scaled_rows[n][k] / factorial
    }

    /// Number of entries in row `n` (always `n + 1`).
    pub fn row_len(&self, n: usize) -> usize {
        self.scaled_rows[n].len()
    }

    /// Poisson weights `e^{-w} w^k / k!` for `k = 0..=len-1`; cumulative
    /// prefix sums when `cumulative` is set.
    fn poisson_weights(&self, w: f64, cumulative: bool) -> Option<Vec<f64>> {
        if w > POISSON_UNDERFLOW_W {
            return None;
        }
        let len = self.scaled_rows.last().map_or(1, Vec::len);
        let mut weights = Vec::with_capacity(len);
        let mut t = (-w).exp();
        let mut run = 0.0;
        for k in 0..len {
            if k > 0 {
                t *= w / k as f64;
            }
            run += t;
            weights.push(if cumulative { run } else { t });
        }
        Some(weights)
    }

    /// Sum `e^{-n a} * dot(scaled_row_n, weights)` over rows `0..=m`,
    /// compensated across `n`.
    fn weighted_series(&self, weights: &[f64], m: usize) -> f64 {
        let damp = (-self.a_tilde).exp();
        let mut factor = 1.0;
        let mut sum = 0.0;
        let mut comp = 0.0; // Kahan correction
        for row in &self.scaled_rows[..=m] {
            let dot: f64 = row.iter().zip(weights).map(|(l, w)| l * w).sum();
            let y = factor * dot - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            factor *= damp;
        }
        sum
    }

    /// Truncated rescaled density `u_M(b_tilde)` for `M = self.order()`.
    pub fn rescaled_density(&self, b_tilde: f64) -> Result<f64> {
        self.rescaled_density_at_order(b_tilde, self.order())
    }

    /// `u_M` for any `M <= self.order()`; lets one table serve a whole
    /// convergence study.
    pub fn rescaled_density_at_order(&self, b_tilde: f64, order: usize) -> Result<f64> {
        if b_tilde < 0.0 {
            return Err(Error::Domain(format!(
                "battery power is non-negative, got b_tilde = {b_tilde}"
            )));
        }
        let w = b_tilde + self.a_tilde;
        match self.poisson_weights(w, false) {
            Some(weights) => Ok(self.weighted_series(&weights, order)),
            None => Ok(0.0),
        }
    }

    /// Single series term `v_n(b_tilde)`.
    pub fn term_density(&self, n: usize, b_tilde: f64) -> f64 {
        let w = b_tilde + self.a_tilde;
        match self.poisson_weights(w, false) {
            Some(weights) => {
                let dot: f64 = self.scaled_rows[n]
                    .iter()
                    .zip(&weights)
                    .map(|(l, t)| l * t)
                    .sum();
                (-(n as f64) * self.a_tilde).exp() * dot
            }
            None => 0.0,
        }
    }

    /// Term-wise contributions `omega_n` to the normalization series.
    pub fn omega_terms(&self) -> Vec<f64> {
        let weights = self
            .poisson_weights(self.a_tilde, true)
            .expect("a_tilde is finite and moderate");
        let damp = (-self.a_tilde).exp();
        let mut factor = 1.0;
        self.scaled_rows
            .iter()
            .map(|row| {
                let dot: f64 = row.iter().zip(&weights).map(|(l, w)| l * w).sum();
                let v = factor * dot;
                factor *= damp;
                v
            })
            .collect()
    }

    /// Truncated normalization integral `Omega_M = sum_n omega_n`.
    pub fn omega(&self) -> f64 {
        self.omega_at_order(self.order())
    }

    fn omega_at_order(&self, order: usize) -> f64 {
        let weights = self
            .poisson_weights(self.a_tilde, true)
            .expect("a_tilde is finite and moderate");
        self.weighted_series(&weights, order)
    }

    /// Truncated survival sum `S(b_tilde)/p0` (the point mass factors out).
    fn survival_series(&self, b_tilde: f64, order: usize) -> f64 {
        let w = b_tilde + self.a_tilde;
        match self.poisson_weights(w, true) {
            Some(weights) => self.weighted_series(&weights, order),
            None => 0.0,
        }
    }
}

// ============================================================================
// Assembled stationary law
// ============================================================================

/// Stationary law assembled from a coefficient table: point mass `p0`,
/// normalization `Omega`, and the continuous density `g = p0 * u`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSolution {
    table: CoefficientTable,
    omega: f64,
    p0: f64,
}

impl NeumannSolution {
    /// Normalize a finished table into a law.
    pub fn from_table(table: CoefficientTable) -> Self {
        let omega = table.omega();
        Self {
            table,
            omega,
            p0: 1.0 / (1.0 + omega),
        }
    }

    /// Build and normalize at a fixed truncation order.
    pub fn solve(a_tilde: f64, order: usize) -> Result<Self> {
        Ok(Self::from_table(CoefficientTable::build(a_tilde, order)?))
    }

    /// Build with the adaptive stopping rule: extend until the relative term
    /// contribution `omega_n / Omega_n` drops below 1e-10, capped at
    /// `max_terms` (the practical default is [`DEFAULT_MAX_TERMS`]).
    pub fn solve_adaptive(a_tilde: f64, max_terms: usize) -> Result<Self> {
        let mut table = CoefficientTable::build(a_tilde, 0)?;
        let mut omega = table.omega_terms()[0];
        let mut order = 0;
        while order < max_terms {
            order += 1;
            table.extend_to(order);
            let term = table.omega_terms()[order];
            omega += term;
            if term / omega < ADAPTIVE_REL_TOL {
                break;
            }
        }
        Ok(Self::from_table(table))
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn a_tilde(&self) -> f64 {
        self.table.a_tilde()
    }

    pub fn order(&self) -> usize {
        self.table.order()
    }

    /// Stationary probability of zero battery power.
    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Truncated integral of the rescaled density.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Relative size of the last included normalization term; a convergence
    /// diagnostic for the truncation.
    pub fn tail_ratio(&self) -> f64 {
        let terms = self.table.omega_terms();
        terms.last().copied().unwrap_or(0.0) / self.omega
    }

    /// Rescaled density `u`.
    pub fn rescaled_density(&self, b_tilde: f64) -> Result<f64> {
        self.table.rescaled_density(b_tilde)
    }

    /// Continuous stationary density `g = p0 * u`.
    pub fn density(&self, b_tilde: f64) -> Result<f64> {
        Ok(self.p0 * self.table.rescaled_density(b_tilde)?)
    }

    /// Survival function `S(b_tilde) = 1 - G(b_tilde)`; equals `1 - p0` at
    /// zero and decreases to zero.
    pub fn survival(&self, b_tilde: f64) -> Result<f64> {
        if b_tilde < 0.0 {
            return Err(Error::Domain(format!(
                "battery power is non-negative, got b_tilde = {b_tilde}"
            )));
        }
        Ok(self.p0 * self.table.survival_series(b_tilde, self.table.order()))
    }

    /// Cumulative distribution including the point mass.
    pub fn cdf(&self, b_tilde: f64) -> Result<f64> {
        Ok(1.0 - self.survival(b_tilde)?)
    }

    /// Normalized percentile `b_q`: the smallest level with `G(b) >= q`.
    ///
    /// Returns 0 when the point mass alone covers `q`. Otherwise brackets the
    /// root of `S(b) = 1 - q` geometrically and bisects; `S` is continuous
    /// and strictly decreasing on the support, so bisection cannot fail.
    pub fn percentile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "percentile level must lie in (0, 1), got {q}"
            )));
        }
        if q <= self.p0 {
            return Ok(0.0);
        }
        let target = 1.0 - q;
        let mut hi = 1.0;
        while self.survival(hi)? > target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

// ============================================================================
// Closed forms and special functions
// ============================================================================

/// Upper incomplete gamma at positive integer order:
/// `Gamma(s, x) = (s-1)! e^{-x} sum_{j=0}^{s-1} x^j / j!`.
pub fn upper_incomplete_gamma_int(order: u32, x: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::Domain(
            "integer-order incomplete gamma needs order >= 1".into(),
        ));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!(
            "incomplete gamma argument must be >= 0, got {x}"
        )));
    }
    let mut term = 1.0_f64;
    let mut acc = 1.0_f64;
    for j in 1..order {
        term *= x / j as f64;
        acc += term;
    }
    let mut factorial = 1.0_f64;
    for j in 2..order {
        factorial *= j as f64;
    }
    Ok(factorial * (-x).exp() * acc)
}

/// Three-term (`M = 2`) closed form: returns `(u, p0)` at `(a_tilde, b_tilde)`.
///
/// ```text
/// u  = (1/16) e^(-3a - b) [ b^2 + (2 + 4e^a + 4a) b
///        + 1 + 3a^2 + 3a + e^a (2 + 8 e^a + 4a) ]
/// p0 = 16 e^(3a) / (5 + 7a + 3a^2 + 6e^a + 4a e^a + 8 e^(2a) + 16 e^(3a))
/// ```
///
/// This is the independent oracle for the coefficient recursion truncated at
/// `M = 2`.
pub fn closed_form_m2(a_tilde: f64, b_tilde: f64) -> (f64, f64) {
    let ea = a_tilde.exp();
    let poly = b_tilde * b_tilde
        + (2.0 + 4.0 * ea + 4.0 * a_tilde) * b_tilde
        + 1.0
        + 3.0 * a_tilde * a_tilde
        + 3.0 * a_tilde
        + ea * (2.0 + 8.0 * ea + 4.0 * a_tilde);
    let u = poly / 16.0 * (-3.0 * a_tilde - b_tilde).exp();
    let e3 = (3.0 * a_tilde).exp();
    let p0 = 16.0 * e3
        / (5.0
            + 7.0 * a_tilde
            + 3.0 * a_tilde * a_tilde
            + 6.0 * ea
            + 4.0 * a_tilde * ea
            + 8.0 * (2.0 * a_tilde).exp()
            + 16.0 * e3);
    (u, p0)
}

/// Default truncation point for tail-complete quadrature over a truncated
/// series: beyond it the density holds less than ~1e-12 of mass.
pub fn support_bound(a_tilde: f64, order: usize) -> f64 {
    let theta = optimal_decay(a_tilde).theta;
    let poly_tail = order as f64 + 10.0 * (order as f64).sqrt() + 60.0;
    (30.0 / theta).max(30.0).max(poly_tail)
}
