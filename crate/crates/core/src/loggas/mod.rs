//! Grand-canonical two-component log-gas at finite cutoff: truncated
//! partition series, Metropolis sampler, charge observables and
//! fractional-charge correlation ratios.

mod chain;
mod clusters;
mod observables;
mod partition;

pub use chain::{
    reflect, reflected_step_density, summarize, write_record, ChainRecord, ChainSettings, ChainSummary, GasChain,
    Move, MoveCounters,
};
pub use clusters::{neutral_fractions, NeutralFractions};
pub use observables::{
    charge_fourier, correlation_ratio, correlation_ratio_sampled, ratio_estimate, sg_ratio, sg_ratio_response, sg_ratio_sampled,
    ComplexEstimate, CorrelationRatio, Insertions, TestFunction, MAX_THETA_POINTS,
};
pub use partition::{order_quadrature, truncated_partition, PartitionTerm, TruncatedPartition};
