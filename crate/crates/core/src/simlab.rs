//! Monte Carlo checks of the gate under pure noise.
//!
//! Every replication owns a ChaCha20 stream: the key comes from the 64-bit
//! seed and the stream number is the replication index, so results do not
//! depend on how replications are scheduled across threads. Normal deviates
//! come from `rand_distr::StandardNormal` (ziggurat).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{Column, Dataset};
use crate::error::{Error, Result};
use crate::numkit::{fit_least_squares, RealMatrix};
use crate::probdist::{max_chisq_tail, pchisq};
use crate::stepper::{run_stepwise, GateConfig, Method};

pub const HISTOGRAM_BINS: usize = 20;

/// Stream reserved for the fixed response of the noise-reduction experiment.
const RESPONSE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub method: Method,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("replications must be at least 1".into()));
        }
        if self.n <= self.k + 2 {
            return Err(Error::InvalidInput(format!("need n > k + 2, got n = {}, k = {}", self.n, self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Fraction of replications whose recorded P-value fell below alpha.
    pub inclusion_rate: f64,
    /// Counts of recorded P-values in `HISTOGRAM_BINS` equal bins of [0, 1].
    pub p_value_histogram: Vec<usize>,
    /// Kolmogorov–Smirnov distance between the recorded statistics and
    /// their reference law: the maximum of `k` χ²₁ variables for the null
    /// calibration, χ²₁ for the noise-reduction experiment.
    pub ks_distance_chisq: f64,
    pub replication_count: usize,
    pub statistics: Vec<f64>,
    pub p_values: Vec<f64>,
}

pub fn replication_rng(seed: u64, replication: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

pub fn standard_normals(rng: &mut ChaCha20Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// sup |F_n − F| for a sample against a continuous CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

fn histogram(p_values: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; HISTOGRAM_BINS];
    for &p in p_values {
        let b = ((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

/// Draws y and k covariates as independent standard normals, runs one gate
/// step with an intercept and records the first-step P-value.
pub fn null_calibration(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    if config.k == 0 {
        return Err(Error::InvalidInput("null calibration needs at least one covariate".into()));
    }
    let gate = GateConfig { alpha: config.alpha, method: config.method, max_steps: Some(1), ..GateConfig::default() };
    let outcomes: Vec<(f64, f64)> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(config.seed, rep);
            let y = standard_normals(&mut rng, config.n);
            let columns = (0..config.k)
                .map(|j| Column { name: format!("z{}", j + 1), values: standard_normals(&mut rng, config.n) })
                .collect();
            let data = Dataset::new("null", "y", y, columns)?;
            let trace = run_stepwise(&data, &gate)?;
            let first = trace
                .evaluations
                .first()
                .ok_or_else(|| Error::DegenerateFit(trace.note.clone().unwrap_or_default()))?;
            Ok((first.statistic, first.p_value))
        })
        .collect::<Result<_>>()?;
    let (statistics, p_values): (Vec<f64>, Vec<f64>) = outcomes.into_iter().unzip();
    let included = p_values.iter().filter(|&&p| p < config.alpha).count();
    let k = config.k;
    let ks = ks_distance(&statistics, |x| 1.0 - max_chisq_tail(x, k).map(|t| t.value()).unwrap_or(1.0));
    Ok(SimReport {
        inclusion_rate: included as f64 / config.replications as f64,
        p_value_histogram: histogram(&p_values),
        ks_distance_chisq: ks,
        replication_count: config.replications,
        statistics,
        p_values,
    })
}

/// Like [`noise_reduction_distribution`] with a caller-supplied response.
pub fn noise_reduction_with_response(config: &SimConfig, base: &RealMatrix, response: &[f64]) -> Result<SimReport> {
    config.validate()?;
    if base.rows() != config.n || response.len() != config.n {
        return Err(Error::Dimension(format!(
            "design has {} rows and response {} entries, config says n = {}",
            base.rows(),
            response.len(),
            config.n
        )));
    }
    let start = fit_least_squares(base, response)?;
    if start.rank < base.cols() {
        return Err(Error::InvalidInput("the base design must have full column rank".into()));
    }
    if start.ss <= 0.0 {
        return Err(Error::DegenerateFit("the response lies in the span of the base design".into()));
    }
    let n = config.n as f64;
    let statistics: Vec<f64> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(config.seed, rep);
            let noise = standard_normals(&mut rng, config.n);
            let fit = fit_least_squares(&base.with_column(&noise)?, response)?;
            Ok(n * (start.ss - fit.ss) / start.ss)
        })
        .collect::<Result<_>>()?;
    let p_values: Vec<f64> =
        statistics.iter().map(|&s| max_chisq_tail(s, 1).map(|t| t.value())).collect::<Result<_>>()?;
    let included = p_values.iter().filter(|&&p| p < config.alpha).count();
    let ks = ks_distance(&statistics, |x| pchisq(x, 1).unwrap_or(0.0));
    Ok(SimReport {
        inclusion_rate: included as f64 / config.replications as f64,
        p_value_histogram: histogram(&p_values),
        ks_distance_chisq: ks,
        replication_count: config.replications,
        statistics,
        p_values,
    })
}

/// Appends one fresh standard normal column to `base` per replication and
/// records `n (ss_before − ss_after) / ss_before`, which should be close to
/// χ²₁. The response is a standard normal vector drawn once from the seed and
/// held fixed across replications.
pub fn noise_reduction_distribution(config: &SimConfig, base: &RealMatrix) -> Result<SimReport> {
    let mut rng = replication_rng(config.seed, RESPONSE_STREAM);
    let response = standard_normals(&mut rng, config.n);
    noise_reduction_with_response(config, base, &response)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(replications: usize, alpha: f64) -> SimConfig {
        SimConfig { n: 30, k: 4, replications, alpha, seed: 11, method: Method::L2 }
    }

    #[test]
    fn single_replication() {
        let r = null_calibration(&cfg(1, 0.05)).unwrap();
        assert!(r.inclusion_rate == 0.0 || r.inclusion_rate == 1.0);
        let ones = RealMatrix::from_columns(30, &[&[1.0; 30]]).unwrap();
        let r = noise_reduction_distribution(&cfg(1, 0.05), &ones).unwrap();
        assert!(r.ks_distance_chisq < 1.0);
    }

    #[test]
    fn alpha_near_one_always_includes() {
        let r = null_calibration(&cfg(50, 0.999_999)).unwrap();
        assert_eq!(r.inclusion_rate, 1.0);
    }

    #[test]
    fn deterministic() {
        let a = null_calibration(&cfg(40, 0.05)).unwrap();
        let b = null_calibration(&cfg(40, 0.05)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.p_value_histogram.iter().sum::<usize>(), 40);
    }

    #[test]
    fn response_scale_free() {
        let c = SimConfig { replications: 25, ..cfg(1, 0.05) };
        let ones = RealMatrix::from_columns(30, &[&[1.0; 30]]).unwrap();
        let y: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64 - 4.0).collect();
        let y10: Vec<f64> = y.iter().map(|v| v * 10.0).collect();
        let a = noise_reduction_with_response(&c, &ones, &y).unwrap();
        let b = noise_reduction_with_response(&c, &ones, &y10).unwrap();
        for (s, t) in a.statistics.iter().zip(&b.statistics) {
            assert!((s - t).abs() < 1e-9 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn ks_against_known_sample() {
        // uniform grid midpoints against the uniform CDF: distance 1/(2m)
        let sample: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_distance(&sample, |x| x) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs() {
        assert!(null_calibration(&cfg(0, 0.05)).is_err());
        assert!(null_calibration(&SimConfig { n: 6, ..cfg(5, 0.05) }).is_err());
        assert!(null_calibration(&cfg(5, 1.5)).is_err());
    }
}
