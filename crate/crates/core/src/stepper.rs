//! Forward stepwise selection with the noise gate.
//!
//! At every step the remaining covariate giving the largest reduction of the
//! fit criterion is found. Replacing each of the `k0` remaining covariates by
//! standard normal noise, the best noise column reduces the criterion by about
//! `criterion / n · E(k0)` with `E(k0)` the maximum of `k0` independent χ²₁
//! variables. The candidate's own reduction is put on the same scale (the gate
//! statistic) and its P-value is `P(E(k0) > statistic)`. The candidate enters
//! when the P-value is below `alpha`; otherwise the procedure stops.
//!
//! L2 statistic: `n · (1 − ss_after / ss_before)`.
//!
//! M statistic, with `s1 = Σ ψ(rᵢ/σ)²`, `s2 = Σ ψ'(rᵢ/σ)` at the incumbent
//! fit: a noise column lowers `Σ ρ(rᵢ/σ)` by about `s1 / (2 s2) · χ²₁`, so
//! the statistic is `2 (s2 / s1) (objective_before − objective_after)`. For
//! ρ(u) = u²/2 this reduces exactly to the L2 statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{standardize_columns, Dataset};
use crate::error::{Error, Result};
use crate::mfit::{l1_single_covariate_init, m_fit_fixed_scale, mad_scale, ScaleSource, ScaleState};
use crate::numkit::{fit_least_squares, sum_of_squares, RealMatrix};
use crate::probdist::{max_chisq_tail, TailProbability};
use crate::robustrho::RhoFunction;

/// Fits whose criterion falls below this fraction of the starting criterion
/// are treated as exact.
const EXACT_FIT: f64 = 1e-20;

/// Reductions smaller than this fraction of the incumbent criterion are
/// rounding noise and count as zero.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    L2,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub alpha: f64,
    pub method: Method,
    pub rho: RhoFunction,
    pub intercept: bool,
    pub standardize: bool,
    /// Maximum number of evaluations; `None` means all covariates.
    pub max_steps: Option<usize>,
    pub exhaustive: bool,
    /// Fixed scale for the M method, bypassing the L1 start and MAD updates.
    pub sigma: Option<f64>,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            method: Method::L2,
            rho: RhoFunction::default(),
            intercept: true,
            standardize: false,
            max_steps: None,
            exhaustive: false,
            sigma: None,
        }
    }
}

impl GateConfig {
    pub fn l2() -> Self {
        Self::default()
    }

    pub fn m() -> Self {
        Self { method: Method::M, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        RhoFunction::new(self.rho.family, self.rho.c)?;
        if let Some(s) = self.sigma {
            ScaleState::new(s, ScaleSource::Fixed)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvaluation {
    /// 1-based.
    pub step_index: usize,
    pub chosen_covariate: String,
    /// Zero-based column index of the chosen covariate.
    pub covariate_index: usize,
    /// Covariates included before this step.
    pub k1: usize,
    /// Candidates scanned at this step.
    pub k0: usize,
    pub ss_before: f64,
    pub ss_after: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub sigma: Option<f64>,
    pub included: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    GateFailed,
    Exhausted,
    MaxSteps,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub dataset: String,
    pub n: usize,
    pub k: usize,
    pub config: GateConfig,
    pub evaluations: Vec<StepEvaluation>,
    pub selected: Vec<String>,
    pub termination_reason: TerminationReason,
    /// Diagnostic for a degenerate termination.
    pub note: Option<String>,
}

impl StepTrace {
    pub fn order(&self) -> Vec<&str> {
        self.evaluations.iter().map(|e| e.chosen_covariate.as_str()).collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.evaluations.iter().map(|e| e.p_value).collect()
    }
}

/// `n · (1 − ss_after / ss_before)`.
pub fn l2_gate_statistic(ss_before: f64, ss_after: f64, n: usize) -> Result<f64> {
    if ss_before == 0.0 {
        return Err(Error::DegenerateFit("residual sum of squares is already zero".into()));
    }
    if ss_before.is_nan() || ss_before <= 0.0 || ss_after < 0.0 || ss_after.is_nan() {
        return Err(Error::InvalidInput("sums of squares must be nonnegative".into()));
    }
    if ss_after > ss_before {
        return Err(Error::InvalidInput(format!("ss_after {ss_after} exceeds ss_before {ss_before}")));
    }
    Ok(n as f64 * (1.0 - ss_after / ss_before))
}

/// `2 (s2 / s1) (objective − objective_after)`.
///
/// The stepper passes the ψ sums of the chosen candidate's fit, all at the
/// incumbent's σ. For ρ(u) = u²/2 this is the L2 statistic.
pub fn m_gate_statistic(s1: f64, s2: f64, objective: f64, objective_after: f64) -> Result<f64> {
    if s2 <= 0.0 {
        return Err(Error::DegenerateFit("no residual on the curved part of rho".into()));
    }
    if s1 <= 0.0 || objective <= 0.0 {
        return Err(Error::DegenerateFit("M objective is already zero".into()));
    }
    if objective_after < 0.0 || objective_after.is_nan() {
        return Err(Error::InvalidInput("objective must be nonnegative".into()));
    }
    if objective_after > objective {
        return Err(Error::InvalidInput(format!(
            "objective after {objective_after} exceeds objective before {objective}"
        )));
    }
    Ok(2.0 * (s2 / s1) * (objective - objective_after))
}

/// `1 − pchisq(statistic, 1)^k0`.
pub fn step_p_value(statistic: f64, k0: usize) -> Result<TailProbability> {
    max_chisq_tail(statistic, k0)
}

fn design_for(dataset: &Dataset, columns: &[usize], intercept: bool) -> Result<RealMatrix> {
    let n = dataset.n();
    let ones = vec![1.0; n];
    let mut cols: Vec<&[f64]> = Vec::with_capacity(columns.len() + 1);
    if intercept {
        cols.push(&ones);
    }
    cols.extend(columns.iter().map(|&j| dataset.column(j)));
    RealMatrix::from_columns(n, &cols)
}

struct Incumbent {
    value: f64,
    coefficients: Vec<f64>,
}

/// `s1`, `s2` are the ψ sums of an M candidate fit (zero for L2).
struct Candidate {
    index: usize,
    value: f64,
    coefficients: Vec<f64>,
    residuals: Vec<f64>,
    s1: f64,
    s2: f64,
}

struct ScanOutcome {
    evaluation: StepEvaluation,
    chosen: Candidate,
}

fn incumbent_fit(
    dataset: &Dataset,
    included: &[usize],
    config: &GateConfig,
    sigma: Option<f64>,
    warm: Option<&[f64]>,
) -> Result<Incumbent> {
    let design = design_for(dataset, included, config.intercept)?;
    match config.method {
        Method::L2 => {
            let fit = fit_least_squares(&design, dataset.response())?;
            Ok(Incumbent { value: fit.ss, coefficients: fit.coefficients })
        }
        Method::M => {
            let sigma = sigma.ok_or_else(|| Error::InvalidInput("the M method needs a scale".into()))?;
            let fit = m_fit_fixed_scale(&design, dataset.response(), &config.rho, sigma, warm)?;
            Ok(Incumbent { value: fit.objective, coefficients: fit.coefficients })
        }
    }
}

fn fit_candidate(
    dataset: &Dataset,
    included: &[usize],
    j: usize,
    config: &GateConfig,
    sigma: Option<f64>,
    incumbent: &Incumbent,
) -> Result<Candidate> {
    let mut cols = included.to_vec();
    cols.push(j);
    let design = design_for(dataset, &cols, config.intercept)?;
    match config.method {
        Method::L2 => {
            let fit = fit_least_squares(&design, dataset.response())?;
            Ok(Candidate {
                index: j,
                value: fit.ss,
                coefficients: fit.coefficients,
                residuals: fit.residuals,
                s1: 0.0,
                s2: 0.0,
            })
        }
        Method::M => {
            let mut start = incumbent.coefficients.clone();
            start.push(0.0);
            let sigma = sigma.ok_or_else(|| Error::InvalidInput("the M method needs a scale".into()))?;
            let fit = m_fit_fixed_scale(&design, dataset.response(), &config.rho, sigma, Some(&start))?;
            Ok(Candidate {
                index: j,
                value: fit.objective,
                coefficients: fit.coefficients,
                residuals: fit.residuals,
                s1: fit.s1,
                s2: fit.s2,
            })
        }
    }
}

fn scan(
    dataset: &Dataset,
    included: &[usize],
    config: &GateConfig,
    sigma: Option<f64>,
    incumbent: &Incumbent,
    baseline: f64,
) -> Result<ScanOutcome> {
    let remaining: Vec<usize> = (0..dataset.k()).filter(|j| !included.contains(j)).collect();
    if remaining.is_empty() {
        return Err(Error::InvalidInput("no covariates left to scan".into()));
    }
    if incumbent.value <= EXACT_FIT * baseline {
        return Err(Error::DegenerateFit("the incumbent fit is already exact".into()));
    }
    let candidates: Vec<Candidate> = remaining
        .par_iter()
        .map(|&j| fit_candidate(dataset, included, j, config, sigma, incumbent))
        .collect::<Vec<_>>()
        .into_iter()
        .filter_map(|c| c.ok())
        .collect();
    // lowest criterion, ties to the lowest column index
    let chosen = candidates
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)))
        .ok_or_else(|| Error::DegenerateFit("every candidate fit failed".into()))?;

    let before = incumbent.value;
    let mut after = chosen.value.min(before);
    if before - after <= ROUNDING_FLOOR * before {
        after = before;
    }
    let k0 = remaining.len();
    let statistic = match config.method {
        Method::L2 => l2_gate_statistic(before, after, dataset.n())?,
        Method::M => m_gate_statistic(chosen.s1, chosen.s2, before, after)?,
    };
    let p_value = step_p_value(statistic, k0)?.value();
    let evaluation = StepEvaluation {
        step_index: included.len() + 1,
        chosen_covariate: dataset.column_name(chosen.index).to_string(),
        covariate_index: chosen.index,
        k1: included.len(),
        k0,
        ss_before: before,
        ss_after: after,
        statistic,
        p_value,
        sigma,
        included: p_value < config.alpha,
    };
    Ok(ScanOutcome { evaluation, chosen })
}

fn baseline_criterion(dataset: &Dataset, config: &GateConfig, sigma: Option<f64>) -> f64 {
    let y = dataset.response();
    match config.method {
        Method::L2 => sum_of_squares(y).max(f64::MIN_POSITIVE),
        Method::M => {
            let s = sigma.unwrap_or(1.0);
            y.iter().map(|v| config.rho.rho(v / s)).sum::<f64>().max(f64::MIN_POSITIVE)
        }
    }
}

/// Evaluates one step: fits every excluded covariate together with
/// `included` and returns the evaluation of the best one. The M method needs
/// `scale`.
pub fn scan_candidates(
    dataset: &Dataset,
    included: &[usize],
    config: &GateConfig,
    scale: Option<&ScaleState>,
) -> Result<StepEvaluation> {
    config.validate()?;
    let sigma = scale.map(|s| s.sigma);
    let incumbent = incumbent_fit(dataset, included, config, sigma, None)?;
    let baseline = baseline_criterion(dataset, config, sigma);
    Ok(scan(dataset, included, config, sigma, &incumbent, baseline)?.evaluation)
}

/// Runs the forward procedure. Degenerate fits (an exact incumbent, a zero
/// scale) end the trace with [`TerminationReason::Degenerate`] and a note;
/// other failures are returned as errors.
pub fn run_stepwise(dataset: &Dataset, config: &GateConfig) -> Result<StepTrace> {
    config.validate()?;
    let data = if config.standardize { standardize_columns(dataset)? } else { dataset.clone() };
    let k = data.k();
    let mut trace = StepTrace {
        dataset: data.name.clone(),
        n: data.n(),
        k,
        config: *config,
        evaluations: Vec::new(),
        selected: Vec::new(),
        termination_reason: TerminationReason::Exhausted,
        note: None,
    };
    if k == 0 {
        return Ok(trace);
    }
    let max_steps = config.max_steps.unwrap_or(k).min(k);

    let degenerate = |mut trace: StepTrace, e: Error| -> Result<StepTrace> {
        if e.is_degenerate() {
            trace.termination_reason = TerminationReason::Degenerate;
            trace.note = Some(format!("{}: {e}", e.class()));
            Ok(trace)
        } else {
            Err(e)
        }
    };

    let mut scale = match (config.method, config.sigma) {
        (Method::L2, _) => None,
        (Method::M, Some(s)) => Some(ScaleState::new(s, ScaleSource::Fixed)?),
        (Method::M, None) => match l1_single_covariate_init(&data, config.intercept) {
            Ok(start) => Some(start.scale),
            Err(e) => return degenerate(trace, e),
        },
    };
    let baseline = baseline_criterion(&data, config, scale.map(|s| s.sigma));

    let mut included: Vec<usize> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut selecting = true;
    while included.len() < k {
        if trace.evaluations.len() == max_steps {
            trace.termination_reason = TerminationReason::MaxSteps;
            return Ok(trace);
        }
        let sigma = scale.map(|s| s.sigma);
        let outcome = incumbent_fit(&data, &included, config, sigma, warm.as_deref())
            .and_then(|inc| scan(&data, &included, config, sigma, &inc, baseline));
        let ScanOutcome { evaluation, chosen } = match outcome {
            Ok(o) => o,
            Err(e) => return degenerate(trace, e),
        };
        let passed = evaluation.included;
        trace.evaluations.push(evaluation);
        if selecting && passed {
            trace.selected.push(data.column_name(chosen.index).to_string());
        } else if selecting {
            selecting = false;
            if !config.exhaustive {
                trace.termination_reason = TerminationReason::GateFailed;
                return Ok(trace);
            }
        }
        included.push(chosen.index);
        if let Some(state) = scale.as_mut() {
            if state.source != ScaleSource::Fixed {
                match mad_scale(&chosen.residuals) {
                    Ok(sigma) => *state = ScaleState { sigma, source: ScaleSource::MadUpdate },
                    Err(e) => return degenerate(trace, e),
                }
            }
        }
        warm = Some(chosen.coefficients);
    }
    trace.termination_reason = TerminationReason::Exhausted;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Column;
    use crate::probdist::gate_threshold;

    fn dataset(y: Vec<f64>, cols: Vec<Vec<f64>>) -> Dataset {
        let columns =
            cols.into_iter().enumerate().map(|(i, values)| Column { name: format!("x{}", i + 1), values }).collect();
        Dataset::new("t", "y", y, columns).unwrap()
    }

    #[test]
    fn l2_statistic() {
        assert_eq!(l2_gate_statistic(5.0, 5.0, 10).unwrap(), 0.0);
        assert!((l2_gate_statistic(100.0, 96.0, 50).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(l2_gate_statistic(0.0, 0.0, 3), Err(Error::DegenerateFit(_))));
        assert!(matches!(l2_gate_statistic(1.0, 2.0, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn m_statistic() {
        assert_eq!(m_gate_statistic(40.0, 20.0, 100.0, 100.0).unwrap(), 0.0);
        // 2 · (20/40) · (100 − 96)
        assert!((m_gate_statistic(40.0, 20.0, 100.0, 96.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(m_gate_statistic(1.0, 0.0, 1.0, 0.5), Err(Error::DegenerateFit(_))));
        assert!(matches!(m_gate_statistic(1.0, 1.0, 0.0, 0.0), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn m_statistic_matches_l2_for_quadratic_rho() {
        // ρ(u) = u²/2 ⇒ s1 = ss/σ², s2 = n, objective = ss/(2σ²)
        let (ss0, ss1, n, sigma) = (37.0, 31.5, 40usize, 0.8f64);
        let s1 = ss0 / (sigma * sigma);
        let m = m_gate_statistic(s1, n as f64, ss0 / (2.0 * sigma * sigma), ss1 / (2.0 * sigma * sigma)).unwrap();
        assert!((m - l2_gate_statistic(ss0, ss1, n).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn p_values() {
        assert_eq!(step_p_value(0.0, 4).unwrap().value(), 1.0);
        assert!((step_p_value(3.841_458_821, 1).unwrap().value() - 0.05).abs() < 1e-8);
        let t = gate_threshold(0.05, 8).unwrap();
        assert!((step_p_value(t, 8).unwrap().value() - 0.05).abs() < 1e-8);
    }

    #[test]
    fn single_candidate() {
        let d = dataset(vec![1.0, 2.5, 2.9, 4.2, 5.1], vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]]);
        let e = scan_candidates(&d, &[], &GateConfig::l2(), None).unwrap();
        assert_eq!((e.k0, e.covariate_index, e.k1), (1, 0, 0));
        assert!(e.included);
    }

    #[test]
    fn duplicate_column_adds_nothing() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let d = dataset(vec![1.3, 1.9, 3.4, 3.8, 5.5, 5.7], vec![x.clone(), x]);
        let e = scan_candidates(&d, &[0], &GateConfig::l2(), None).unwrap();
        assert_eq!(e.statistic, 0.0);
        assert_eq!(e.p_value, 1.0);
        assert!(!e.included);
    }

    #[test]
    fn no_covariates() {
        let d = dataset(vec![1.0, 2.0, 3.0], vec![]);
        let t = run_stepwise(&d, &GateConfig::l2()).unwrap();
        assert!(t.evaluations.is_empty());
        assert_eq!(t.termination_reason, TerminationReason::Exhausted);
    }

    #[test]
    fn exact_fit_terminates_degenerate() {
        let x1 = vec![0.3, -1.2, 2.2, 0.9, -0.4, 1.7, 0.1, -0.8];
        let x2 = vec![1.0, 0.2, -0.5, 0.7, -1.1, 0.4, 0.9, -0.3];
        let x3 = vec![-0.6, 0.8, 0.3, -0.2, 1.4, -0.9, 0.5, 0.0];
        let d = dataset(x1.clone(), vec![x1, x2, x3]);
        let t = run_stepwise(&d, &GateConfig::l2()).unwrap();
        assert_eq!(t.selected, vec!["x1"]);
        assert_eq!(t.evaluations.len(), 1);
        assert_eq!(t.termination_reason, TerminationReason::Degenerate);
        assert!(t.note.is_some());
    }

    #[test]
    fn max_steps_and_gate_failure() {
        let x1: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..30).map(|i| ((i * 7919) % 13) as f64).collect();
        let x3: Vec<f64> = (0..30).map(|i| ((i * 104_729) % 17) as f64).collect();
        let y: Vec<f64> = x1.iter().zip(&x3).map(|(a, b)| 2.0 * a + 0.01 * b).collect();
        let d = dataset(y, vec![x1, x2, x3]);
        let cfg = GateConfig { max_steps: Some(1), ..GateConfig::l2() };
        let t = run_stepwise(&d, &cfg).unwrap();
        assert_eq!(t.termination_reason, TerminationReason::MaxSteps);
        assert_eq!(t.order(), vec!["x1"]);
    }

    #[test]
    fn config_validation() {
        let d = dataset(vec![1.0, 2.0, 3.0], vec![vec![1.0, 0.0, 2.0]]);
        let cfg = GateConfig { alpha: 1.0, ..GateConfig::l2() };
        assert!(run_stepwise(&d, &cfg).is_err());
        let cfg = GateConfig { sigma: Some(-1.0), ..GateConfig::m() };
        assert!(run_stepwise(&d, &cfg).is_err());
        assert!(scan_candidates(&d, &[], &GateConfig::m(), None).is_err());
    }
}
