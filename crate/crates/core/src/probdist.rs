//! χ² distribution functions and the law of the maximum of independent χ²₁
//! variables.
//!
//! The CDF is the regularized lower incomplete gamma function P(ν/2, x/2),
//! evaluated by its power series below `a + 1` and by a Lentz continued
//! fraction for the upper tail above it. Both tails are available so that
//! small P-values never go through `1 - F`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 10_000;

/// A probability in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TailProbability(f64);

impl TailProbability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!("{value} is not a probability")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<TailProbability> for f64 {
    fn from(p: TailProbability) -> f64 {
        p.0
    }
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x == 0.5 {
        return 0.5 * PI.ln();
    }
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

fn upper_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete gamma functions (P, Q) = (lower, upper).
fn incomplete_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x < a + 1.0 {
        let p = lower_series(a, x).min(1.0);
        (p, 1.0 - p)
    } else {
        let q = upper_fraction(a, x).clamp(0.0, 1.0);
        (1.0 - q, q)
    }
}

fn check_args(x: f64, df: u32) -> Result<()> {
    if df == 0 {
        return Err(Error::InvalidInput("degrees of freedom must be at least 1".into()));
    }
    if x.is_nan() {
        return Err(Error::InvalidInput("x is NaN".into()));
    }
    Ok(())
}

/// P(χ²_df ≤ x).
pub fn pchisq(x: f64, df: u32) -> Result<f64> {
    check_args(x, df)?;
    Ok(incomplete_gamma(0.5 * df as f64, 0.5 * x).0)
}

/// P(χ²_df > x), computed directly rather than as `1 - pchisq`.
pub fn pchisq_upper(x: f64, df: u32) -> Result<f64> {
    check_args(x, df)?;
    Ok(incomplete_gamma(0.5 * df as f64, 0.5 * x).1)
}

pub fn dchisq(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * df as f64;
    ((a - 1.0) * x.ln() - 0.5 * x - a * 2f64.ln() - ln_gamma(a)).exp()
}

/// Inverse of [`pchisq`]: bisection on [0, 200] (widened if needed), with a
/// Newton step taken whenever it stays inside the bracket.
pub fn qchisq(p: f64, df: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("qchisq needs 0 <= p < 1, got {p}")));
    }
    if df == 0 {
        return Err(Error::InvalidInput("degrees of freedom must be at least 1".into()));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 200.0;
    while pchisq(hi, df)? < p {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let f = pchisq(x, df)? - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = dchisq(x, df);
        let newton = if density > 0.0 { x - f / density } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// P(E > x) where E is the maximum of `k0` independent χ²₁ variables,
/// i.e. `1 - pchisq(x, 1)^k0`.
pub fn max_chisq_tail(x: f64, k0: usize) -> Result<TailProbability> {
    if k0 == 0 {
        return Err(Error::InvalidInput("k0 must be at least 1".into()));
    }
    let lower = pchisq(x, 1)?;
    if lower <= 0.0 {
        return Ok(TailProbability(1.0));
    }
    let upper = pchisq_upper(x, 1)?;
    // ln F computed from whichever tail is small
    let ln_lower = if upper < 0.5 { (-upper).ln_1p() } else { lower.ln() };
    let tail = -(k0 as f64 * ln_lower).exp_m1();
    Ok(TailProbability(tail.clamp(0.0, 1.0)))
}

/// Inclusion threshold `qchisq((1 - alpha)^(1/k0), 1)`.
pub fn gate_threshold(alpha: f64, k0: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if k0 == 0 {
        return Err(Error::InvalidInput("k0 must be at least 1".into()));
    }
    let p = ((-alpha).ln_1p() / k0 as f64).exp();
    qchisq(p, 1)
}
