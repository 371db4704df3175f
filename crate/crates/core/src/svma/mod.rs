//! Structural moving-average data generating processes and simulation.

mod lag;
mod model;
mod panel;
mod simulate;

pub use lag::LagPolynomial;
pub use model::{
    AugmentedSvmaModel, InstrumentKind, InstrumentSpec, Model, ShockDistribution, SupportPoint,
    SvmaModel, STRUCTURAL_TOL,
};
pub use panel::{Panel, PanelNames, SECTOR_SUM_TOL};
pub use simulate::{binary_threshold, convolve, draw_shock_matrix};
