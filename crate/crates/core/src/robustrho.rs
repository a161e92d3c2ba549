//! Convex ρ functions for M-regression.
//!
//! The default family is
//!
//! ```text
//! ρ_c(u) = |u|                              if |c u| >= 15
//!        = 2 log(0.5 + 0.5 exp(c u)) / c - u   otherwise
//! ```
//!
//! On the smooth branch this equals `(2/c) log cosh(c u / 2)`, whose
//! derivative is `tanh(c u / 2)` and whose second derivative is
//! `(c/2) sech²(c u / 2)`. The two branches do not meet: at `|c u| = 15` the
//! smooth branch sits `2 ln 2 / c` below `|u|` (1.3863 for c = 1), while the
//! first derivatives agree to within `1 - tanh(7.5) ≈ 6.1e-7`. Only the
//! objective value sees the jump; IRLS weights and the gate's derivative sums
//! are continuous to that precision.
//!
//! Huber's function is available as an alternative with the same tuning
//! field: `u²/2` inside `[-c, c]`, `c(|u| - c/2)` outside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the default family switches to `|u|`.
pub const BRANCH_POINT: f64 = 15.0;

/// Below this |u| the IRLS weight ψ(u)/u is replaced by its limit ρ''(0).
pub const WEIGHT_ORIGIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoFamily {
    LogCosh,
    Huber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoFunction {
    pub family: RhoFamily,
    pub c: f64,
}

impl Default for RhoFunction {
    fn default() -> Self {
        Self { family: RhoFamily::LogCosh, c: 1.0 }
    }
}

/// ln(0.5 + 0.5 exp(t)) without overflow for large t.
fn log_half_one_plus_exp(t: f64) -> f64 {
    if t > 30.0 {
        t + (0.5 + 0.5 * (-t).exp()).ln()
    } else {
        (0.5 + 0.5 * t.exp()).ln()
    }
}

impl RhoFunction {
    pub fn new(family: RhoFamily, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("tuning constant must be positive, got {c}")));
        }
        Ok(Self { family, c })
    }

    pub fn log_cosh(c: f64) -> Result<Self> {
        Self::new(RhoFamily::LogCosh, c)
    }

    pub fn huber(c: f64) -> Result<Self> {
        Self::new(RhoFamily::Huber, c)
    }

    pub fn rho(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            RhoFamily::LogCosh => {
                let t = c * u;
                if t.abs() >= BRANCH_POINT {
                    u.abs()
                } else {
                    (2.0 * log_half_one_plus_exp(t) / c - u).max(0.0)
                }
            }
            RhoFamily::Huber => {
                if u.abs() <= c {
                    0.5 * u * u
                } else {
                    c * (u.abs() - 0.5 * c)
                }
            }
        }
    }

    /// First derivative ψ = ρ'.
    pub fn d1(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            RhoFamily::LogCosh => {
                let t = c * u;
                if t.abs() >= BRANCH_POINT {
                    u.signum()
                } else {
                    (0.5 * t).tanh()
                }
            }
            RhoFamily::Huber => u.clamp(-c, c),
        }
    }

    /// Second derivative ρ''.
    pub fn d2(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            RhoFamily::LogCosh => {
                let t = c * u;
                if t.abs() >= BRANCH_POINT {
                    0.0
                } else {
                    let th = (0.5 * t).tanh();
                    0.5 * c * (1.0 - th * th)
                }
            }
            RhoFamily::Huber => {
                if u.abs() <= c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// IRLS weight ψ(u)/u.
    pub fn weight(&self, u: f64) -> f64 {
        if u.abs() < WEIGHT_ORIGIN {
            return self.d2(0.0);
        }
        self.d1(u) / u
    }

    /// Size of the step in ρ at the branch point, `|u| - smooth(u)` at
    /// `|c u| = 15`. Zero for Huber.
    pub fn branch_jump(&self) -> f64 {
        match self.family {
            RhoFamily::LogCosh => {
                let u = BRANCH_POINT / self.c;
                u - (2.0 * log_half_one_plus_exp(BRANCH_POINT) / self.c - u)
            }
            RhoFamily::Huber => 0.0,
        }
    }
}

pub fn rho(f: &RhoFunction, u: f64) -> f64 {
    f.rho(u)
}

pub fn rho_d1(f: &RhoFunction, u: f64) -> f64 {
    f.d1(u)
}

pub fn rho_d2(f: &RhoFunction, u: f64) -> f64 {
    f.d2(u)
}
