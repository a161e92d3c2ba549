//! Fixed-scale M-regression by iteratively reweighted least squares, the MAD
//! scale update and the L1 single-covariate start.

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{fit_least_squares, fit_weighted_least_squares, RealMatrix};
use crate::robustrho::RhoFunction;

/// Consistency factor applied to the raw median absolute deviation.
pub const MAD_CONSISTENCY: f64 = 1.4826;

pub const MAX_IRLS_ITERATIONS: usize = 200;
const WEIGHT_FLOOR: f64 = 1e-12;
const L1_MAX_ITERATIONS: usize = 50;
const L1_RESIDUAL_FLOOR: f64 = 1e-8;
/// A start scale this small relative to max |y| means the start fit is exact.
const EXACT_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MFitSummary {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sigma: f64,
    /// Σ ρ(rᵢ/σ) at the fitted coefficients.
    pub objective: f64,
    /// Σ ρ'(rᵢ/σ)².
    pub s1: f64,
    /// Σ ρ''(rᵢ/σ).
    pub s2: f64,
    pub iterations: usize,
    /// Objective after each iteration, starting with the start value.
    pub objective_path: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleSource {
    L1Init,
    MadUpdate,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleState {
    pub sigma: f64,
    pub source: ScaleSource,
}

impl ScaleState {
    pub fn new(sigma: f64, source: ScaleSource) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {sigma}")));
        }
        Ok(Self { sigma, source })
    }
}

fn objective(rho: &RhoFunction, residuals: &[f64], sigma: f64) -> f64 {
    residuals.iter().map(|r| rho.rho(r / sigma)).sum()
}

fn residuals_of(design: &RealMatrix, response: &[f64], beta: &[f64]) -> Vec<f64> {
    let fitted = design.mul_vec(beta);
    response.iter().zip(fitted).map(|(y, f)| y - f).collect()
}

/// max_j |Σᵢ ψ(rᵢ/σ) xᵢⱼ|.
pub fn stationarity(design: &RealMatrix, rho: &RhoFunction, residuals: &[f64], sigma: f64) -> f64 {
    let psi: Vec<f64> = residuals.iter().map(|r| rho.d1(r / sigma)).collect();
    design.tr_mul_vec(&psi).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes Σ ρ((yᵢ − xᵢᵗβ)/σ) over β for a fixed σ.
///
/// Each iteration solves a weighted least-squares problem with weights
/// ψ(u)/u (floored at 1e-12). With `start` absent the iteration starts from
/// the least-squares fit.
pub fn m_fit_fixed_scale(
    design: &RealMatrix,
    response: &[f64],
    rho: &RhoFunction,
    sigma: f64,
    start: Option<&[f64]>,
) -> Result<MFitSummary> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    if design.rows() != response.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows but the response has {} entries",
            design.rows(),
            response.len()
        )));
    }
    let n = response.len() as f64;
    let mut beta = match start {
        Some(s) if s.len() == design.cols() => s.to_vec(),
        Some(s) => {
            return Err(Error::Dimension(format!(
                "start has {} coefficients, design has {} columns",
                s.len(),
                design.cols()
            )))
        }
        None => fit_least_squares(design, response)?.coefficients,
    };
    let mut residuals = residuals_of(design, response, &beta);
    let mut current = objective(rho, &residuals, sigma);
    let mut path = vec![current];
    let target = 1e-10 * n;
    let mut iterations = 0;

    if design.cols() > 0 {
        while iterations < MAX_IRLS_ITERATIONS {
            if stationarity(design, rho, &residuals, sigma) <= target {
                break;
            }
            iterations += 1;
            let weights: Vec<f64> = residuals.iter().map(|r| rho.weight(r / sigma).max(WEIGHT_FLOOR)).collect();
            let next = fit_weighted_least_squares(design, response, &weights)?;
            let step =
                beta.iter().zip(&next.coefficients).fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / (1.0 + a.abs())));
            beta = next.coefficients;
            residuals = next.residuals;
            current = objective(rho, &residuals, sigma);
            path.push(current);
            if step <= 1e-14 {
                break;
            }
        }
        if stationarity(design, rho, &residuals, sigma) > 1e-6 * n {
            return Err(Error::Convergence { iterations, last: beta });
        }
    }

    let s1 = residuals.iter().map(|r| rho.d1(r / sigma).powi(2)).sum();
    let s2 = residuals.iter().map(|r| rho.d2(r / sigma)).sum();
    Ok(MFitSummary {
        coefficients: beta,
        residuals,
        sigma,
        objective: current,
        s1,
        s2,
        iterations,
        objective_path: path,
    })
}

/// Median of a nonempty slice; even lengths take the midpoint of the two
/// central order statistics.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `1.4826 · median(|rᵢ − median(r)|)`.
pub fn mad_scale(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(Error::InvalidInput("MAD needs at least two residuals".into()));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidInput("residuals must be finite".into()));
    }
    let centre = median(residuals);
    let deviations: Vec<f64> = residuals.iter().map(|r| (r - centre).abs()).collect();
    let mad = MAD_CONSISTENCY * median(&deviations);
    if mad > 0.0 {
        Ok(mad)
    } else {
        Err(Error::DegenerateScale)
    }
}

/// Least absolute deviations fit by IRLS with weights 1/max(|rᵢ|, δ).
/// Returns the coefficients, residuals and the L1 objective Σ|rᵢ|.
///
/// A fixed tiny δ lets IRLS lock onto whichever data point it first
/// interpolates, so δ starts at the mean absolute least-squares residual and
/// shrinks tenfold per stage down to `1e-8` times that value. Each stage runs
/// at most 50 iterations. The result is then snapped to the exact fit through
/// the p observations with the smallest residuals when that is no worse.
pub fn fit_least_absolute(design: &RealMatrix, response: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let start = fit_least_squares(design, response)?;
    let mut beta = start.coefficients;
    let mut residuals = start.residuals;
    let mut best = residuals.iter().map(|r| r.abs()).sum::<f64>();
    let mut best_fit = (beta.clone(), residuals.clone());
    let typical = best / response.len().max(1) as f64;
    if typical == 0.0 {
        return Ok((best_fit.0, best_fit.1, best));
    }
    let final_floor = L1_RESIDUAL_FLOOR * typical;
    let mut floor = typical;
    loop {
        for _ in 0..L1_MAX_ITERATIONS {
            let weights: Vec<f64> = residuals.iter().map(|r| 1.0 / r.abs().max(floor)).collect();
            let next = fit_weighted_least_squares(design, response, &weights)?;
            let value = next.residuals.iter().map(|r| r.abs()).sum::<f64>();
            // measured on the residuals so the rule does not depend on the units of y or x
            let moved = residuals.iter().zip(&next.residuals).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / typical;
            beta = next.coefficients;
            residuals = next.residuals;
            if value < best {
                best = value;
                best_fit = (beta.clone(), residuals.clone());
            }
            if moved < 1e-12 {
                break;
            }
        }
        if floor <= final_floor {
            break;
        }
        floor = (floor * 0.1).max(final_floor);
    }
    // IRLS only creeps up on the optimum, which sits at a fit interpolating p
    // observations. Try the one through the p smallest residuals.
    let p = design.cols();
    if p > 0 && p < response.len() {
        let mut order: Vec<usize> = (0..response.len()).collect();
        order.sort_by(|&a, &b| best_fit.1[a].abs().total_cmp(&best_fit.1[b].abs()));
        let rows: Vec<f64> = order[..p].iter().flat_map(|&i| design.row(i).to_vec()).collect();
        let ys: Vec<f64> = order[..p].iter().map(|&i| response[i]).collect();
        if let Ok(vertex) = fit_least_squares(&RealMatrix::from_row_major(p, p, rows)?, &ys) {
            if vertex.rank == p {
                let fitted = design.mul_vec(&vertex.coefficients);
                let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
                let value = residuals.iter().map(|r| r.abs()).sum::<f64>();
                if value <= best * (1.0 + 1e-12) {
                    return Ok((vertex.coefficients, residuals, value));
                }
            }
        }
    }
    Ok((best_fit.0, best_fit.1, best))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Start {
    /// Zero-based covariate index.
    pub column: usize,
    pub residuals: Vec<f64>,
    pub l1_objective: f64,
    pub scale: ScaleState,
}

/// Fits y on each covariate separately in L1 (with an intercept when asked)
/// and keeps the covariate with the smallest sum of absolute residuals. The
/// MAD of its residuals is the initial scale.
pub fn l1_single_covariate_init(dataset: &Dataset, intercept: bool) -> Result<L1Start> {
    if dataset.k() == 0 {
        return Err(Error::InvalidInput("no covariates to start from".into()));
    }
    if dataset.n() < 3 {
        return Err(Error::InvalidInput("need at least three observations".into()));
    }
    let n = dataset.n();
    let ones = vec![1.0; n];
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for j in 0..dataset.k() {
        let col = dataset.column(j);
        let design =
            if intercept { RealMatrix::from_columns(n, &[&ones, col])? } else { RealMatrix::from_columns(n, &[col])? };
        let (_, residuals, value) = fit_least_absolute(&design, dataset.response())?;
        if best.as_ref().is_none_or(|b| value < b.2) {
            best = Some((j, residuals, value));
        }
    }
    let (column, residuals, l1_objective) = best.expect("at least one covariate");
    let sigma = mad_scale(&residuals)?;
    // an exact fit leaves rounding-level residuals rather than zeros
    let spread = dataset.response().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sigma <= EXACT_SCALE * spread {
        return Err(Error::DegenerateScale);
    }
    Ok(L1Start { column, residuals, l1_objective, scale: ScaleState { sigma, source: ScaleSource::L1Init } })
}
