//! Kernel families, quadrature grids, layered Gaussian field samples and
//! the Sine-Gordon martingale evaluated on them.

mod ensemble;
mod grid;
mod kernel;
mod martingale;

pub use ensemble::{
    sample_ensemble, slab_covariance, FieldEnsemble, FieldSampler, ReplicaView, SlabCovariance,
    REPLICA_CHUNK,
};
pub use grid::Grid;
pub use kernel::{
    validate_kernel_assumptions, AssumptionCheck, AssumptionReport, AssumptionScan, Density,
    Interval, KernelFamily, KernelTable, SeedProfile,
};
pub use martingale::{evaluate_martingale, martingale_value};
