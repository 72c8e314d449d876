//! Side-channel leakage assessment driven by two-level factorial experiments.
//!
//! The crate covers trace simulation and storage ([`trace`]), trace
//! conditioning ([`preprocess`]), leakage statistics and profiled attacks
//! ([`analysis`]), the 2^3 design engine with its iteration ledger ([`doe`]),
//! pipelines that connect plans to analyses ([`pipeline`]) and rendering
//! ([`report`]).

pub mod analysis;
pub mod doe;
pub mod error;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod trace;

pub use error::{Error, Result};
