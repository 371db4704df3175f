//! Impulse response identification and estimation with external instruments.
//!
//! The library is organised around a structural moving-average data generating
//! process in which an observed aggregate is driven by several latent shocks.
//! An instrument correlated with a subset of those shocks ("composite" shocks)
//! identifies a weighted combination of the per-shock impulse responses.  The
//! modules below provide, in order: the data generating process and simulator,
//! population identification results, sample estimators with HAC standard
//! errors, set identification under sign restrictions, and Monte Carlo
//! verification harnesses.

pub mod bounds;
pub mod config;
pub mod error;
pub mod estimation;
pub mod identification;
pub mod rng;
pub mod svma;
pub mod verify;

pub(crate) mod linalg;

pub use error::{Error, Result};
