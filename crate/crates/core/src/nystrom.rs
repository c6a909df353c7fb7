//! Numerical stationary law by quadrature discretization.
//!
//! The half-line integral operator is truncated at `b_max`, discretized on a
//! uniform grid with trapezoid weights, and the resolvent system
//! `(I - K) u = f` is solved directly. The kernel depends only on the node
//! difference, so the operator is stored as one strip of `2N + 1` samples.
//! Picard iteration (`u <- f + K u`) is available as the fixed-point
//! alternative; its `K`-step iterate equals the discrete Neumann partial sum
//! with `K + 1` terms.

use crate::distributions::{optimal_decay, shifted_kernel};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default Picard step budget.
pub const DEFAULT_PICARD_STEPS: usize = 200;

/// Successive-iterate max-norm for Picard early exit.
const PICARD_EXIT_TOL: f64 = 1e-12;

/// Uniform grid on `[0, b_max]` with trapezoid weights `(1/2, 1, .., 1, 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    h: f64,
    b_max: f64,
}

impl QuadratureGrid {
    /// `n_points` nodes (`N + 1` for `N` panels) spanning `[0, b_max]`.
    pub fn new(n_points: usize, b_max: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "quadrature grid needs at least 2 nodes, got {n_points}"
            )));
        }
        if !(b_max.is_finite() && b_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation point must be positive and finite, got {b_max}"
            )));
        }
        let h = b_max / (n_points - 1) as f64;
        let nodes = (0..n_points).map(|i| i as f64 * h).collect();
        Ok(Self { nodes, h, b_max })
    }

    /// Grid with the default truncation for the slope: `max(30, 30/theta*)`,
    /// placing the dropped tail mass below `e^{-30}`.
    pub fn with_default_truncation(n_points: usize, a_tilde: f64) -> Result<Self> {
        Self::new(n_points, default_truncation(a_tilde))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// Trapezoid weight of node `i` (without the `h` factor).
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.nodes.len() - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Weighted sum `h * sum_i w_i v_i`, the discrete integral.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let interior: f64 = values[1..n - 1].iter().sum();
        self.h * (0.5 * values[0] + interior + 0.5 * values[n - 1])
    }
}

/// Default truncation point `max(30, 30 / theta*)` in normalized units.
pub fn default_truncation(a_tilde: f64) -> f64 {
    (30.0 / optimal_decay(a_tilde).theta).max(30.0)
}

/// Discretized stationary operator `K[i][j] = h * k((i-j) h) * w_j` with the
/// kernel strip precomputed over all node differences.
#[derive(Debug, Clone)]
pub struct ToeplitzOperator {
    grid: QuadratureGrid,
    a_tilde: f64,
    /// `k(d * h)` for `d = -(N) ..= N`, stored at offset `d + N`.
    kernel: Vec<f64>,
}

impl ToeplitzOperator {
    pub fn build(grid: QuadratureGrid, a_tilde: f64) -> Result<Self> {
        if !(a_tilde.is_finite() && a_tilde > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalized slope must be positive and finite, got {a_tilde}"
            )));
        }
        let n = grid.len();
        let kernel = (0..2 * n - 1)
            .map(|idx| {
                let d = idx as isize - (n as isize - 1);
                shifted_kernel(a_tilde, d as f64 * grid.spacing())
            })
            .collect();
        Ok(Self {
            grid,
            a_tilde,
            kernel,
        })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn a_tilde(&self) -> f64 {
        self.a_tilde
    }

    /// Matrix entry `K[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.grid.len();
        let idx = (i as isize - j as isize + n as isize - 1) as usize;
        self.grid.spacing() * self.kernel[idx] * self.grid.weight(j)
    }

    /// Apply the discrete operator to a grid function.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let h = self.grid.spacing();
        (0..n)
            .map(|i| {
                // kernel[(i - j) + n - 1] for j = 0..n, i.e. the reversed
                // strip window starting at i
                let window = &self.kernel[i..i + n];
                let mut acc: f64 = window.iter().rev().zip(g).map(|(k, gj)| k * gj).sum();
                acc -= 0.5 * (window[n - 1] * g[0] + window[0] * g[n - 1]);
                h * acc
            })
            .collect()
    }

    /// Kernel sample vector `f_i = k(b_i)`, the right-hand side of the
    /// resolvent system.
    pub fn rhs(&self) -> Vec<f64> {
        self.grid
            .nodes()
            .iter()
            .map(|&b| shifted_kernel(self.a_tilde, b))
            .collect()
    }

    /// Largest weighted row sum; estimates the discrete operator norm.
    pub fn norm_estimate(&self) -> f64 {
        let n = self.grid.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j)).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Discrete stationary law: rescaled density values on the grid, discrete
/// normalization `Omega`, and the point mass `p0 = 1/(1 + Omega)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSolution {
    grid: QuadratureGrid,
    u: Vec<f64>,
    omega: f64,
    p0: f64,
    /// Cumulative continuous mass up to each node.
    cumulative: Vec<f64>,
}

impl QuadratureSolution {
    fn assemble(grid: QuadratureGrid, mut u: Vec<f64>) -> Result<Self> {
        // round-off can leave tiny negative values near the tail; clamp and
        // keep the total clamped magnitude accountable
        let mut clamped = 0.0;
        for v in &mut u {
            if *v < 0.0 {
                clamped += -*v;
                *v = 0.0;
            }
        }
        assert!(
            clamped < 1e-8,
            "negative density mass {clamped} exceeds round-off scale"
        );
        let omega = grid.integrate(&u);
        let p0 = 1.0 / (1.0 + omega);
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..grid.len() {
            acc += 0.5 * grid.spacing() * (u[i - 1] + u[i]) * p0;
            cumulative.push(acc);
        }
        Ok(Self {
            grid,
            u,
            omega,
            p0,
            cumulative,
        })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    /// Rescaled density values at the nodes.
    pub fn rescaled_values(&self) -> &[f64] {
        &self.u
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Continuous density `g = p0 * u`, linearly interpolated between nodes;
    /// zero beyond the truncation point.
    pub fn density(&self, b_tilde: f64) -> f64 {
        if b_tilde < 0.0 || b_tilde > self.grid.b_max() {
            return 0.0;
        }
        let h = self.grid.spacing();
        let pos = b_tilde / h;
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let t = pos - i as f64;
        self.p0 * ((1.0 - t) * self.u[i] + t * self.u[i + 1])
    }

    /// CDF including the point mass.
    pub fn cdf(&self, b_tilde: f64) -> f64 {
        if b_tilde < 0.0 {
            return 0.0;
        }
        if b_tilde >= self.grid.b_max() {
            return 1.0;
        }
        let h = self.grid.spacing();
        let pos = b_tilde / h;
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let t = pos - i as f64;
        self.p0 + (1.0 - t) * self.cumulative[i] + t * self.cumulative[i + 1]
    }

    pub fn survival(&self, b_tilde: f64) -> f64 {
        1.0 - self.cdf(b_tilde)
    }

    /// Percentile by inverse interpolation of the cumulative mass.
    pub fn percentile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "percentile level must lie in (0, 1), got {q}"
            )));
        }
        if q <= self.p0 {
            return Ok(0.0);
        }
        let target = q - self.p0;
        match self.cumulative.iter().position(|&c| c >= target) {
            Some(0) => Ok(0.0),
            Some(i) => {
                let lo = self.cumulative[i - 1];
                let hi = self.cumulative[i];
                let t = if hi > lo {
                    (target - lo) / (hi - lo)
                } else {
                    0.0
                };
                Ok(self.grid.spacing() * ((i - 1) as f64 + t))
            }
            None => Ok(self.grid.b_max()),
        }
    }
}

/// Solve the resolvent system `(I - K) u = f` by dense LU with partial
/// pivoting.
pub fn solve_resolvent(op: &ToeplitzOperator) -> Result<QuadratureSolution> {
    let n = op.grid().len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let k = op.entry(i, j);
            m[(i, j)] = if i == j { 1.0 - k } else { -k };
        }
    }
    let f = DVector::from_vec(op.rhs());
    let u = m.lu().solve(&f).ok_or_else(|| Error::SingularSystem {
        norm_estimate: op.norm_estimate(),
    })?;
    QuadratureSolution::assemble(op.grid().clone(), u.data.into())
}

/// Picard fixed-point iteration `u <- f + K u`, starting from `u = f`.
///
/// Runs at most `max_steps` applications of the operator (so `max_steps = 0`
/// returns `f` itself, the zeroth Neumann iterate) with early exit once the
/// successive-iterate max-norm falls below 1e-12. Aborts if that norm grows
/// for three consecutive steps, which certifies a non-contractive operator.
///
/// Returns the solution together with the number of operator applications.
pub fn solve_picard(
    op: &ToeplitzOperator,
    max_steps: usize,
) -> Result<(QuadratureSolution, usize)> {
    let f = op.rhs();
    let mut u = f.clone();
    let mut prev_diff = f64::INFINITY;
    let mut growth_streak = 0usize;
    let mut steps = 0usize;
    for _ in 0..max_steps {
        let ku = op.apply(&u);
        let mut next: Vec<f64> = f.iter().zip(&ku).map(|(a, b)| a + b).collect();
        let diff = u
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut u, &mut next);
        steps += 1;
        if diff > prev_diff {
            growth_streak += 1;
            if growth_streak >= 3 {
                return Err(Error::NonContractive {
                    iterations: steps,
                    residual: diff,
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_diff = diff;
        if diff < PICARD_EXIT_TOL {
            break;
        }
    }
    Ok((QuadratureSolution::assemble(op.grid().clone(), u)?, steps))
}
