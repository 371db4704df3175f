//! Sample estimators: local projections with external instruments,
//! multi-instrument sectoral systems, the multiplier decomposition of a
//! cumulative estimate, and the contemporaneous-impact specification test.

mod controls;
mod decompose;
mod gmm;
mod hac;
mod lpiv;
mod sectoral;

pub use controls::{residualize, ControlSpec};
pub use decompose::{decompose_multiplier, Decomposition};
pub use gmm::{gmm_test_no_intersectoral, GmmTestResult};
pub use hac::newey_west;
pub use lpiv::{lpiv_estimate, IrfEstimate, LpivOptions, RELEVANCE_FLOOR};
pub use sectoral::{sectoral_irf_estimate, MomentDiagnostics, SectoralOptions, Weighting};
