//! Forward stepwise regression in which a covariate enters only if it reduces
//! the fit criterion by more than the best of equally many pure-noise
//! covariates would, at a chosen level `alpha`.
//!
//! Both least squares ([`Method::L2`]) and fixed-scale M-regression
//! ([`Method::M`]) are supported. P-values come in closed form from the law
//! of the maximum of independent χ²₁ variables.
//!
//! ```no_run
//! use stepgate::{load_with_manifest, run_stepwise, GateConfig};
//!
//! let (data, _) = load_with_manifest("crates/core/data/prostate.manifest").unwrap();
//! let trace = run_stepwise(&data, &GateConfig::l2()).unwrap();
//! println!("{:?}", trace.selected);
//! ```

pub mod cli;
pub mod dataio;
pub mod error;
pub mod mfit;
pub mod numkit;
pub mod probdist;
pub mod robustrho;
pub mod simlab;
pub mod stepper;

pub use dataio::{
    load_csv, load_with_manifest, perturb_response, standardize_columns, Column, Dataset, DatasetManifest,
};
pub use error::{Error, Result};
pub use mfit::{l1_single_covariate_init, m_fit_fixed_scale, mad_scale, MFitSummary, ScaleSource, ScaleState};
pub use numkit::{fit_least_squares, fit_weighted_least_squares, LsFit, RealMatrix};
pub use probdist::{gate_threshold, max_chisq_tail, pchisq, qchisq, TailProbability};
pub use robustrho::{RhoFamily, RhoFunction};
pub use simlab::{noise_reduction_distribution, null_calibration, SimConfig, SimReport};
pub use stepper::{
    l2_gate_statistic, m_gate_statistic, run_stepwise, scan_candidates, step_p_value, GateConfig, Method,
    StepEvaluation, StepTrace, TerminationReason,
};
