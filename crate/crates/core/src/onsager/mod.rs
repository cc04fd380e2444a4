//! Electrostatic (Onsager-type) lower bounds for charge configurations:
//! one-dimensional matching, regularized potential increments, cluster
//! partitions and the randomized slack audit.

mod audit;
mod cluster;
mod config;
mod matching;

pub use audit::{onsager_audit, slack, AuditReport, AuditRow, ConfigSampler, Inequality, Neutrality};
pub use cluster::{cluster_partition, verify_partition, ClusterPartition};
pub use config::ChargeConfig;
pub use matching::{potential_increment, wasserstein_matching, Matching};
