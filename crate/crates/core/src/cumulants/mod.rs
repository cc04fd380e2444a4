//! Cumulants of the Sine-Gordon martingale: exact quadrature of the
//! log-gas integrals, Monte Carlo k-statistics, renormalization thresholds
//! and the renormalized partition function.

mod bracket;
mod curve;
mod engine;
mod kstat;
mod moments;
mod renorm;
mod threshold;
mod transform;

pub use bracket::{bracket12_bound, bracket12_bound_scan, BracketScan};
pub use curve::{
    cumulant_curve, mc_cumulants, sample_report, CumulantEntry, CumulantReport, GrowthFit, Method,
    MIN_MC_REPLICAS,
};
pub use engine::{GradedRule, Quadrature, EVALUATION_BUDGET, MAX_POINTS};
pub use kstat::{k_statistics, sample_cumulants, sample_cumulants_default, MAX_KSTAT_ORDER};
pub use moments::{
    cumulant_quadrature, cumulant_quadrature_with, moment_quadrature, moment_quadrature_with,
    SignSum,
};
pub use renorm::{
    counterterm, renormalize_samples, renormalized_flow, renormalized_partition,
    MonteCarloConfig, RenormPoint,
};
pub use threshold::{beta_threshold, threshold_index, threshold_table, ThresholdIndex};
pub use transform::{cumulants_to_moments, moments_to_cumulants};
