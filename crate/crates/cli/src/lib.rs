//! Harness around the cache engine: synthetic workloads, policy-vs-reference
//! decode simulations, the needle-retention experiment, budget sweeps and
//! trace analysis. The `sagekv` binary is a thin argument parser over the
//! functions here.

pub mod analyze;
pub mod runner;
pub mod workload;

use thiserror::Error;

use sage_core::accounting::AccountingError;
use sage_core::analysis::AnalysisError;
use sage_core::attention::AttentionError;
use sage_core::cache::CacheError;
use sage_core::config::ConfigError;
use sage_core::policies::PolicyError;
use sage_core::trace::TraceError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Attention(#[from] AttentionError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("needle position {position} lies outside the {seq_len}-token prompt")]
    NeedleOutsideEvictable { position: usize, seq_len: usize },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

pub use runner::{
    resolve_plan, run_needle, run_simulate, run_simulate_traced, run_sweep, NeedleSpec,
    NeedleVerdict, SimReport, SimSpec, StepErrorRow, SweepRow, SweepSpec,
};
pub use workload::{generate_workload, Workload, WorkloadData};
