//! Increment laws for the primary power changes.
//!
//! The primary power change per step, `Y`, follows either a simple Laplace
//! (SL) law with inverse scale `beta` or a two-scale generalized Laplace (GL)
//! mixture with weight `c` and ratio `zeta`:
//!
//! ```text
//! f_Y(y) = (gamma/2) * ( c * zeta * exp(-zeta*gamma*|y|) + (1-c) * exp(-gamma*|y|) )
//! ```
//!
//! The dispatch recursion sees the shifted effective increment `X = -Y - a`;
//! in units normalized by `beta` its SL density is `0.5 * exp(-|x + a_tilde|)`,
//! which is the kernel of the stationary integral equation.

use crate::error::{Error, Result};
use rand::Rng;

/// Which increment family a law belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    SimpleLaplace,
    GeneralizedLaplace,
}

/// Distribution of the primary power change `Y` \[MW\].
///
/// Both the SL inverse scale `beta` and the GL inverse scale `gamma` are kept
/// consistent at all times: `gamma = beta * sqrt(c/zeta^2 + (1-c))`, so the GL
/// law always has the variance `2/beta^2` of its equivalent SL law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementLaw {
    kind: LawKind,
    beta: f64,
    gamma: f64,
    c: f64,
    zeta: f64,
}

/// Equivalent GL inverse scale for a target SL scale `beta`:
/// `gamma = beta * sqrt(c/zeta^2 + (1-c))`.
///
/// Guarantees the GL variance `(2/gamma^2)(c/zeta^2 + (1-c))` equals the SL
/// variance `2/beta^2`.
pub fn equivalent_gamma(beta: f64, c: f64, zeta: f64) -> Result<f64> {
    check_params(beta, c, zeta)?;
    Ok(beta * (c / (zeta * zeta) + (1.0 - c)).sqrt())
}

fn check_params(scale: f64, c: f64, zeta: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse power scale must be positive and finite, got {scale}"
        )));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "mixture weight c must lie in [0, 1], got {c}"
        )));
    }
    if !(zeta.is_finite() && zeta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "narrow-component ratio zeta must be >= 1, got {zeta}"
        )));
    }
    Ok(())
}

impl IncrementLaw {
    /// Simple Laplace law with inverse power scale `beta` \[1/MW\].
    pub fn simple_laplace(beta: f64) -> Result<Self> {
        check_params(beta, 0.0, 1.0)?;
        Ok(Self {
            kind: LawKind::SimpleLaplace,
            beta,
            gamma: beta,
            c: 0.0,
            zeta: 1.0,
        })
    }

    /// Generalized Laplace law at the same variance as `SL(beta)`.
    ///
    /// The GL inverse scale is derived through [`equivalent_gamma`], which is
    /// how mixed-law sweeps stay comparable across `c`.
    pub fn generalized(beta: f64, c: f64, zeta: f64) -> Result<Self> {
        let gamma = equivalent_gamma(beta, c, zeta)?;
        Ok(Self {
            kind: LawKind::GeneralizedLaplace,
            beta,
            gamma,
            c,
            zeta,
        })
    }

    /// Generalized Laplace law from its own inverse scale `gamma`.
    pub fn from_gamma(gamma: f64, c: f64, zeta: f64) -> Result<Self> {
        check_params(gamma, c, zeta)?;
        let beta = gamma / (c / (zeta * zeta) + (1.0 - c)).sqrt();
        Ok(Self {
            kind: LawKind::GeneralizedLaplace,
            beta,
            gamma,
            c,
            zeta,
        })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    /// Inverse power scale of the equivalent SL law \[1/MW\].
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// GL inverse power scale \[1/MW\]; equals `beta` for SL laws.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mixture_weight(&self) -> f64 {
        self.c
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Variance of `Y`; `2/beta^2` by the equivalent-scale construction.
    pub fn variance(&self) -> f64 {
        2.0 / (self.beta * self.beta)
    }

    /// Density of `Y` at `y` \[1/MW\].
    pub fn pdf(&self, y: f64) -> f64 {
        match self.kind {
            LawKind::SimpleLaplace => 0.5 * self.beta * (-self.beta * y.abs()).exp(),
            LawKind::GeneralizedLaplace => {
                let g = self.gamma;
                0.5 * g
                    * (self.c * self.zeta * (-self.zeta * g * y.abs()).exp()
                        + (1.0 - self.c) * (-g * y.abs()).exp())
            }
        }
    }

    /// Cumulative distribution of `Y` at `y`.
    pub fn cdf(&self, y: f64) -> f64 {
        match self.kind {
            LawKind::SimpleLaplace => laplace_cdf(self.beta, y),
            LawKind::GeneralizedLaplace => {
                self.c * laplace_cdf(self.zeta * self.gamma, y)
                    + (1.0 - self.c) * laplace_cdf(self.gamma, y)
            }
        }
    }

    /// Density of the effective increment `X = -Y - a` at `x` \[1/MW\].
    pub fn shifted_pdf(&self, a: f64, x: f64) -> f64 {
        self.pdf(-x - a)
    }

    /// Map `(u, aux)` in `(0,1)^2` to an increment value.
    ///
    /// SL inverts the Laplace CDF directly; GL first picks the mixture
    /// component by `aux < c` and then inverts that component, which
    /// reproduces the mixture law exactly (the GL CDF itself has no closed
    /// inverse). `aux` is ignored for SL laws.
    pub fn inverse_cdf(&self, u: f64, aux: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!(
                "uniform variate must lie strictly inside (0, 1), got {u}"
            )));
        }
        if !(aux > 0.0 && aux < 1.0) {
            return Err(Error::Domain(format!(
                "auxiliary variate must lie strictly inside (0, 1), got {aux}"
            )));
        }
        let inv_scale = match self.kind {
            LawKind::SimpleLaplace => self.beta,
            LawKind::GeneralizedLaplace => {
                if aux < self.c {
                    self.zeta * self.gamma
                } else {
                    self.gamma
                }
            }
        };
        Ok(laplace_quantile(inv_scale, u))
    }

    /// Draw one increment. SL consumes one uniform variate per call, GL two
    /// (`u` first, then the component pick `aux`); both are rejected and
    /// redrawn if the generator returns an exact 0 or 1.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        let aux = match self.kind {
            LawKind::SimpleLaplace => 0.5,
            LawKind::GeneralizedLaplace => open_unit(rng),
        };
        self.inverse_cdf(u, aux)
            .expect("open-interval draws are always in domain")
    }
}

fn laplace_cdf(inv_scale: f64, y: f64) -> f64 {
    if y < 0.0 {
        0.5 * (inv_scale * y).exp()
    } else {
        1.0 - 0.5 * (-inv_scale * y).exp()
    }
}

fn laplace_quantile(inv_scale: f64, u: f64) -> f64 {
    if u < 0.5 {
        (2.0 * u).ln() / inv_scale
    } else {
        -(2.0 * (1.0 - u)).ln() / inv_scale
    }
}

/// Uniform draw from the open interval `(0, 1)`; exact endpoints are redrawn
/// so `ln` never sees 0.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

// ============================================================================
// Normalized slope and the stationary kernel
// ============================================================================

/// Tolerable step change expressed in normalized units: `a_tilde = beta * a`.
///
/// The stationary law depends on the pair `(a, beta)` only through this
/// product, so all analytic machinery keys on `a_tilde` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedSlope {
    a_tilde: f64,
    a: f64,
    beta: f64,
}

impl NormalizedSlope {
    /// From the tolerable change `a` \[MW\] and inverse scale `beta` \[1/MW\].
    pub fn new(a: f64, beta: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerable step change a must be positive and finite, got {a}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inverse power scale beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self {
            a_tilde: a * beta,
            a,
            beta,
        })
    }

    /// Directly from the dimensionless slope; `a = a_tilde`, `beta = 1`.
    pub fn from_a_tilde(a_tilde: f64) -> Result<Self> {
        Self::new(a_tilde, 1.0)
    }

    pub fn a_tilde(&self) -> f64 {
        self.a_tilde
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Normalized kernel density `0.5 * exp(-|x + a_tilde|)` of the effective
    /// increment under an SL law.
    pub fn kernel(&self, x_tilde: f64) -> f64 {
        shifted_kernel(self.a_tilde, x_tilde)
    }

    /// Moment generating function of the normalized effective increment,
    /// `exp(-a_tilde * theta) / (1 - theta^2)` for `|theta| < 1`.
    pub fn mgf(&self, theta: f64) -> Result<f64> {
        mgf(self.a_tilde, theta)
    }

    /// Decay rate `theta*` minimizing the MGF on `(0, 1)`, found by
    /// golden-section search. `norm_bound = M_X(theta*)` bounds the operator
    /// norm of the stationary kernel on the matching weighted space.
    pub fn optimal_decay(&self) -> DecayEstimate {
        optimal_decay(self.a_tilde)
    }
}

/// Normalized shifted-increment density `0.5 * exp(-|x + a_tilde|)`.
pub fn shifted_kernel(a_tilde: f64, x_tilde: f64) -> f64 {
    0.5 * (-(x_tilde + a_tilde).abs()).exp()
}

/// MGF of the normalized effective increment; domain `|theta| < 1`.
pub fn mgf(a_tilde: f64, theta: f64) -> Result<f64> {
    if theta.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "MGF of the SL effective increment only exists for |theta| < 1, got {theta}"
        )));
    }
    Ok((-a_tilde * theta).exp() / (1.0 - theta * theta))
}

/// Result of the MGF minimization over `theta in (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// Argmin `theta*`.
    pub theta: f64,
    /// `M_X(theta*)`, the contraction bound at the optimum.
    pub norm_bound: f64,
    /// Whether `M_X(theta*) < 1`, certifying Neumann-series convergence.
    pub contractive: bool,
}

/// Golden-section minimization of `mgf(a_tilde, .)` on `(0, 1)`.
///
/// The log-MGF is strictly convex, so the minimum is unique.
pub fn optimal_decay(a_tilde: f64) -> DecayEstimate {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let eval = |t: f64| (-a_tilde * t).exp() / (1.0 - t * t);
    let (mut lo, mut hi) = (0.0_f64, 1.0 - 1e-12);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    while hi - lo > 1e-13 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
        }
    }
    let theta = 0.5 * (lo + hi);
    let norm_bound = eval(theta);
    DecayEstimate {
        theta,
        norm_bound,
        contractive: norm_bound < 1.0,
    }
}
