//! Componentwise decomposition of a cumulative instrument estimate.
//!
//! The cumulative ratio estimate for one instrument equals a weighted sum
//! of sector multipliers: the weights are the instrument's covariance
//! shares of the cumulative sector regressors, and the multipliers solve
//! the cumulative sectoral moment system.  With as many instruments as
//! sectors the recomposition reproduces the aggregate estimate up to
//! floating-point error.

use crate::error::{Error, Result};
use crate::estimation::controls::ControlSpec;
use crate::estimation::lpiv::{lpiv_estimate, rms, IrfEstimate, LpivOptions};
use crate::estimation::sectoral::{
    sectoral_irf_estimate, stack_moments, SectoralOptions, Weighting,
};
use crate::svma::Panel;

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Cumulative aggregate estimate for the chosen instrument.
    pub beta: IrfEstimate,
    /// Covariance shares of the cumulative sector regressors; sums to one.
    pub weights: Vec<f64>,
    /// Sector multipliers when the sectoral system is solvable, else
    /// `None` (for example when a sector never moves).
    pub multipliers: Option<Vec<f64>>,
    /// `|beta - sum(weights * multipliers)|` when multipliers exist.
    pub identity_gap: Option<f64>,
}

/// Splits the cumulative estimate for `instrument` at horizon `h` into
/// sector weights and multipliers.
pub fn decompose_multiplier(
    panel: &Panel,
    instrument: usize,
    h: usize,
    controls: &ControlSpec,
    bandwidth: Option<usize>,
) -> Result<Decomposition> {
    if instrument >= panel.n_instruments() {
        return Err(Error::InvalidArgument(format!(
            "instrument index {} out of range ({} instruments)",
            instrument,
            panel.n_instruments()
        )));
    }
    let opts = LpivOptions {
        cumulative: true,
        bandwidth,
    };
    let beta = lpiv_estimate(panel, instrument, h, controls, &opts)?;

    let stacked = stack_moments(panel, h, controls, true)?;
    let s_count = panel.n_sectors();
    let row = stacked.c_zx.row(instrument);
    let den: f64 = row.iter().sum();
    let z_col: Vec<f64> = stacked.z.column(instrument).iter().cloned().collect();
    let x_scale = (0..s_count)
        .map(|s| {
            let col: Vec<f64> = stacked.x[instrument].column(s).iter().cloned().collect();
            rms(&col)
        })
        .fold(0.0_f64, f64::max);
    let scale = rms(&z_col) * x_scale;
    if den.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::WeakDenominator { value: den, scale });
    }
    let mut weights = Vec::with_capacity(s_count);
    let mut partial = 0.0;
    for s in 0..s_count {
        if s + 1 == s_count {
            // Force the exact-sum convention instead of dividing again.
            weights.push(1.0 - partial);
        } else {
            let w = row[s] / den;
            partial += w;
            weights.push(w);
        }
    }

    let sectoral_opts = SectoralOptions {
        cumulative: true,
        weighting: Weighting::default(),
        bandwidth,
    };
    let multipliers = match sectoral_irf_estimate(panel, h, controls, &sectoral_opts) {
        Ok((est, _)) => Some(est.point),
        Err(err) => {
            log::warn!("sector multipliers unavailable: {err}");
            None
        }
    };

    let identity_gap = multipliers.as_ref().map(|m| {
        let recomposed: f64 = weights.iter().zip(m).map(|(w, v)| w * v).sum();
        (beta.point[0] - recomposed).abs()
    });
    if panel.n_instruments() == panel.n_sectors() {
        if let Some(gap) = identity_gap {
            debug_assert!(
                gap <= 1e-9,
                "exact-identification recomposition gap {gap} too large"
            );
        }
    }

    Ok(Decomposition {
        beta,
        weights,
        multipliers,
        identity_gap,
    })
}
