//! Multi-instrument estimation of sector-level impulse responses.
//!
//! With `l` instruments and `S` sectors the sample moments are the per
//! instrument covariances of the residualized instrument with the
//! residualized outcome lead and with each residualized sector regressor.
//! The sector responses solve the moment system exactly when `l = S` and
//! by minimum distance when `l > S`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimation::controls::{
    control_matrix, effective_window, forward_cumulative, forward_shift, ControlSpec, Residualizer,
};
use crate::estimation::hac::newey_west;
use crate::estimation::lpiv::IrfEstimate;
use crate::linalg;
use crate::svma::Panel;

/// Weight matrix used when the system is over-identified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Unweighted minimum distance.
    Identity,
    /// Inverse of the residualized instrument second-moment matrix.
    #[default]
    InstrumentGram,
    /// Second step reweights by the inverse long-run moment covariance
    /// from a first InstrumentGram step.
    TwoStepEfficient,
}

#[derive(Debug, Clone, Default)]
pub struct SectoralOptions {
    pub cumulative: bool,
    pub weighting: Weighting,
    /// Newey-West bandwidth; defaults to `h + 1`.
    pub bandwidth: Option<usize>,
}

/// Sample moments underlying a sectoral fit, kept for inspection.
#[derive(Debug, Clone)]
pub struct MomentDiagnostics {
    /// `l x S` instrument-sector covariances.
    pub c_zx: DMatrix<f64>,
    /// `l` instrument-outcome covariances.
    pub c_zy: DVector<f64>,
    /// Long-run covariance of the moment vector at the final estimate
    /// (first-step estimate under two-step weighting).
    pub omega: DMatrix<f64>,
    /// Weight matrix actually used; `None` for an exactly identified solve.
    pub w_hat: Option<DMatrix<f64>>,
    /// Whether `omega` needed an eigenvalue clip to stay PSD.
    pub omega_clipped: bool,
}

/// Residualized series and sample covariances shared by the sectoral
/// estimator and the contemporaneous-impact test.
pub(crate) struct StackedMoments {
    /// `N x l` residualized instruments, one column per instrument.
    pub z: DMatrix<f64>,
    /// `N x l` residualized outcome leads, one column per instrument's
    /// control set.
    pub y: DMatrix<f64>,
    /// Per instrument, the `N x S` residualized sector regressors.
    pub x: Vec<DMatrix<f64>>,
    pub c_zx: DMatrix<f64>,
    pub c_zy: DVector<f64>,
    pub nobs: usize,
}

pub(crate) fn stack_moments(
    panel: &Panel,
    h: usize,
    controls: &ControlSpec,
    cumulative: bool,
) -> Result<StackedMoments> {
    let s_count = panel.n_sectors();
    if s_count == 0 {
        return Err(Error::InvalidArgument(
            "sectoral estimation needs sector columns in the panel".into(),
        ));
    }
    let l = panel.n_instruments();
    let window = effective_window(panel.len(), controls.lag_order, h)?;
    let n = window.len;
    let nf = n as f64;

    let mut z = DMatrix::zeros(n, l);
    let mut y = DMatrix::zeros(n, l);
    let mut x = Vec::with_capacity(l);
    let mut c_zx = DMatrix::zeros(l, s_count);
    let mut c_zy = DVector::zeros(l);

    for j in 0..l {
        let (r, labels) = control_matrix(panel, controls, j, window);
        let proj = Residualizer::new(r, &labels)?;

        let z_raw: Vec<f64> = panel.instrument(j)[window.start..window.start + n].to_vec();
        let y_raw = if cumulative {
            forward_cumulative(panel.y(), window.start, n, h)
        } else {
            forward_shift(panel.y(), window.start, n, h)
        };
        let z_perp = proj.residualize(&z_raw)?;
        let y_perp = proj.residualize(&y_raw)?;

        let mut x_j = DMatrix::zeros(n, s_count);
        for s in 0..s_count {
            let x_raw = if cumulative {
                forward_cumulative(panel.sector(s), window.start, n, h)
            } else {
                panel.sector(s)[window.start..window.start + n].to_vec()
            };
            let x_perp = proj.residualize(&x_raw)?;
            for t in 0..n {
                x_j[(t, s)] = x_perp[t];
                c_zx[(j, s)] += z_perp[t] * x_perp[t];
            }
        }
        for t in 0..n {
            z[(t, j)] = z_perp[t];
            y[(t, j)] = y_perp[t];
            c_zy[j] += z_perp[t] * y_perp[t];
        }
        x.push(x_j);
    }
    c_zx /= nf;
    c_zy /= nf;

    Ok(StackedMoments {
        z,
        y,
        x,
        c_zx,
        c_zy,
        nobs: n,
    })
}

/// Moment residuals `g_t[j] = z_perp[t,j] * (y_perp[t,j] - x_perp_j[t,:] theta)`.
pub(crate) fn moment_matrix(stacked: &StackedMoments, theta: &DVector<f64>) -> DMatrix<f64> {
    let n = stacked.nobs;
    let l = stacked.z.ncols();
    let mut g = DMatrix::zeros(n, l);
    for j in 0..l {
        let fitted = &stacked.x[j] * theta;
        for t in 0..n {
            g[(t, j)] = stacked.z[(t, j)] * (stacked.y[(t, j)] - fitted[t]);
        }
    }
    g
}

/// Inverse of the average `z_perp z_perp'` matrix, the default weight.
pub(crate) fn instrument_gram_inverse(stacked: &StackedMoments) -> Result<DMatrix<f64>> {
    let n = stacked.nobs as f64;
    let gram = stacked.z.transpose() * &stacked.z / n;
    match gram.clone().cholesky() {
        Some(chol) => Ok(chol.inverse()),
        None => Err(Error::Weighting(
            "instrument second-moment matrix is singular; are two instruments collinear?".into(),
        )),
    }
}

fn minimum_distance(
    c_zx: &DMatrix<f64>,
    c_zy: &DVector<f64>,
    w: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let a = c_zx.transpose() * w * c_zx;
    let b = c_zx.transpose() * w * c_zy;
    linalg::solve_spd(&a, &b)
}

/// Estimates the horizon-`h` sector responses of the outcome, with one
/// covariance moment per instrument.  Needs `l >= S`.
pub fn sectoral_irf_estimate(
    panel: &Panel,
    h: usize,
    controls: &ControlSpec,
    opts: &SectoralOptions,
) -> Result<(IrfEstimate, MomentDiagnostics)> {
    let s_count = panel.n_sectors();
    let l = panel.n_instruments();
    if l < s_count {
        return Err(Error::UnderIdentified {
            instruments: l,
            unknowns: s_count,
        });
    }
    let stacked = stack_moments(panel, h, controls, opts.cumulative)?;
    linalg::require_full_column_rank(&stacked.c_zx)?;
    let n = stacked.nobs;
    let nf = n as f64;
    let bandwidth = opts.bandwidth.unwrap_or(h + 1);

    let exactly_identified = l == s_count;
    let (theta, w_used): (DVector<f64>, Option<DMatrix<f64>>) = if exactly_identified {
        (linalg::solve_square(&stacked.c_zx, &stacked.c_zy)?, None)
    } else {
        match opts.weighting {
            Weighting::Identity => {
                let w = DMatrix::identity(l, l);
                (minimum_distance(&stacked.c_zx, &stacked.c_zy, &w)?, Some(w))
            }
            Weighting::InstrumentGram => {
                let w = instrument_gram_inverse(&stacked)?;
                (minimum_distance(&stacked.c_zx, &stacked.c_zy, &w)?, Some(w))
            }
            Weighting::TwoStepEfficient => {
                let w1 = instrument_gram_inverse(&stacked)?;
                let theta1 = minimum_distance(&stacked.c_zx, &stacked.c_zy, &w1)?;
                let g1 = moment_matrix(&stacked, &theta1);
                let omega1 = newey_west(&g1, bandwidth)?;
                let (omega1, clipped) = linalg::clip_psd(&omega1);
                if clipped {
                    log::warn!("first-step moment covariance clipped to PSD");
                }
                let w2 = match omega1.clone().cholesky() {
                    Some(chol) => chol.inverse(),
                    None => {
                        return Err(Error::Weighting(
                            "first-step moment covariance is singular; cannot reweight".into(),
                        ))
                    }
                };
                (
                    minimum_distance(&stacked.c_zx, &stacked.c_zy, &w2)?,
                    Some(w2),
                )
            }
        }
    };

    // Long-run covariance of the moments at the estimate.  Under two-step
    // weighting the weight is already the inverse of the first-step
    // covariance; reuse that covariance so the variance formula stays
    // internally consistent.
    let (omega, omega_clipped) = match (&opts.weighting, &w_used) {
        (Weighting::TwoStepEfficient, Some(w2)) if !exactly_identified => {
            let omega1 = linalg::pseudo_inverse(w2, linalg::RANK_TOL);
            (linalg::symmetrize(&omega1), false)
        }
        _ => {
            let g = moment_matrix(&stacked, &theta);
            let raw = newey_west(&g, bandwidth)?;
            let (clipped_m, was_clipped) = linalg::clip_psd(&raw);
            if was_clipped {
                log::warn!("moment covariance clipped to PSD at horizon {h}");
            }
            (clipped_m, was_clipped)
        }
    };

    // Asymptotic covariance of sqrt(N)(theta_hat - theta).
    let covariance = if exactly_identified {
        let c_inv_omega = solve_matrix(&stacked.c_zx, &omega)?;
        let c_inv_t = solve_matrix(&stacked.c_zx, &DMatrix::identity(l, l))?;
        linalg::symmetrize(&(c_inv_omega * c_inv_t.transpose()))
    } else {
        let w = w_used.as_ref().expect("weight set in over-identified fit");
        let a = stacked.c_zx.transpose() * w * &stacked.c_zx;
        let a_inv = linalg::pseudo_inverse(&a, linalg::RANK_TOL);
        let middle = stacked.c_zx.transpose() * w * &omega * w * &stacked.c_zx;
        linalg::symmetrize(&(&a_inv * middle * &a_inv))
    };

    let std_errors: Vec<f64> = (0..s_count)
        .map(|s| (covariance[(s, s)].max(0.0) / nf).sqrt())
        .collect();

    let estimate = IrfEstimate {
        horizon: h,
        point: theta.iter().cloned().collect(),
        std_errors,
        covariance: Some(covariance),
        nobs: n,
    };
    let diagnostics = MomentDiagnostics {
        c_zx: stacked.c_zx,
        c_zy: stacked.c_zy,
        omega,
        w_hat: w_used,
        omega_clipped,
    };
    Ok((estimate, diagnostics))
}

/// Columnwise `A^{-1} B` for square `A` via one LU factorization.
fn solve_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::RankCondition {
            ratio: 0.0,
            threshold: linalg::RANK_TOL,
        })
}
