//! Instrumental-variable local projection for the aggregate regressor.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimation::controls::{
    control_matrix, effective_window, forward_cumulative, forward_shift, ControlSpec, Residualizer,
};
use crate::estimation::hac::newey_west;
use crate::svma::Panel;

/// Relative floor below which the instrument-regressor covariance is
/// treated as zero and the ratio is refused.
pub const RELEVANCE_FLOOR: f64 = 1e-12;

/// Point estimate with sampling-noise diagnostics at one horizon.
#[derive(Debug, Clone)]
pub struct IrfEstimate {
    pub horizon: usize,
    /// One entry for the aggregate estimand, or one per sector.
    pub point: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Asymptotic covariance of `sqrt(N) * (estimate - target)`.
    pub covariance: Option<DMatrix<f64>>,
    pub nobs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LpivOptions {
    /// Estimate the ratio of cumulative responses instead of levels.
    pub cumulative: bool,
    /// Newey-West bandwidth; defaults to `h + 1`.
    pub bandwidth: Option<usize>,
}

/// Ratio-of-covariances estimate of the horizon-`h` response of the
/// outcome, using one instrument and per-regression residualization on
/// the control set.
pub fn lpiv_estimate(
    panel: &Panel,
    instrument: usize,
    h: usize,
    controls: &ControlSpec,
    opts: &LpivOptions,
) -> Result<IrfEstimate> {
    if instrument >= panel.n_instruments() {
        return Err(Error::InvalidArgument(format!(
            "instrument index {} out of range ({} instruments)",
            instrument,
            panel.n_instruments()
        )));
    }
    let window = effective_window(panel.len(), controls.lag_order, h)?;
    let (r, labels) = control_matrix(panel, controls, instrument, window);
    let proj = Residualizer::new(r, &labels)?;
    let n = window.len;

    let z_w: Vec<f64> = panel.instrument(instrument)[window.start..window.start + n].to_vec();
    let (x_w, y_w) = if opts.cumulative {
        (
            forward_cumulative(panel.x(), window.start, n, h),
            forward_cumulative(panel.y(), window.start, n, h),
        )
    } else {
        (
            panel.x()[window.start..window.start + n].to_vec(),
            forward_shift(panel.y(), window.start, n, h),
        )
    };

    let z_perp = proj.residualize(&z_w)?;
    let x_perp = proj.residualize(&x_w)?;
    let y_perp = proj.residualize(&y_w)?;

    let nf = n as f64;
    let c_zx: f64 = dot(&z_perp, &x_perp) / nf;
    let c_zy: f64 = dot(&z_perp, &y_perp) / nf;
    let scale = rms(&z_perp) * rms(&x_perp);
    if c_zx.abs() <= RELEVANCE_FLOOR * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::WeakDenominator {
            value: c_zx,
            scale,
        });
    }
    let beta = c_zy / c_zx;

    let bandwidth = opts.bandwidth.unwrap_or(h + 1);
    let mut moments = DMatrix::zeros(n, 1);
    for t in 0..n {
        moments[(t, 0)] = z_perp[t] * (y_perp[t] - beta * x_perp[t]);
    }
    let omega = newey_west(&moments, bandwidth)?;
    let variance = (omega[(0, 0)] / (c_zx * c_zx)).max(0.0);
    let se = (variance / nf).sqrt();

    Ok(IrfEstimate {
        horizon: h,
        point: vec![beta],
        std_errors: vec![se],
        covariance: Some(DMatrix::from_element(1, 1, variance)),
        nobs: n,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub(crate) fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|u| u * u).sum::<f64>() / v.len() as f64).sqrt()
}
