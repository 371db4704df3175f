//! Moment-based test of the no-intersectoral-impact restriction.
//!
//! The maintained model lets each sector respond on impact to every other
//! sector's shock through a matrix `Psi_0` with unit diagonal.  The
//! instrument moments depend on the impact matrix and the outcome
//! responses only through `eta = Psi_0^{-T} theta`, so the criterion is
//! minimized over the stacked parameter `(psi, theta)` by Gauss-Newton
//! with minimum-norm steps, and the restriction `psi = 0` is assessed by
//! a Wald statistic on the off-diagonal block.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::estimation::controls::ControlSpec;
use crate::estimation::hac::newey_west;
use crate::estimation::sectoral::{moment_matrix, stack_moments};
use crate::linalg;
use crate::svma::Panel;

/// Maximum Gauss-Newton iterations before giving up.
const MAX_ITERATIONS: usize = 200;
/// Relative criterion-change threshold declaring convergence.
const CRITERION_TOL: f64 = 1e-10;
/// Determinant floor below which a candidate impact matrix is rejected.
const PSI_DET_FLOOR: f64 = 1e-12;
/// Maximum step halvings per iteration.
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone)]
pub struct GmmTestResult {
    /// Wald statistic for the off-diagonal impact coefficients.
    pub statistic: f64,
    /// Degrees of freedom, `S^2 - S`.
    pub dof: usize,
    pub p_value: f64,
    /// Fitted impact matrix with unit diagonal.
    pub psi0: DMatrix<f64>,
    /// Fitted outcome responses.
    pub theta: DVector<f64>,
    pub iterations: usize,
    /// Final value of the quadratic moment criterion.
    pub criterion: f64,
}

/// Impact matrix with unit diagonal from the off-diagonal parameters in
/// row-major order.
pub(crate) fn psi_from_params(params: &[f64], s_count: usize) -> DMatrix<f64> {
    let mut psi = DMatrix::identity(s_count, s_count);
    let mut k = 0;
    for r in 0..s_count {
        for s in 0..s_count {
            if r != s {
                psi[(r, s)] = params[k];
                k += 1;
            }
        }
    }
    psi
}

/// `eta = Psi^{-T} theta` and its Jacobian in `(psi_offdiag, theta)`,
/// columns ordered as in the stacked parameter vector.  `None` when the
/// impact matrix is numerically singular.
pub(crate) fn eta_and_jacobian(
    psi: &DMatrix<f64>,
    theta: &DVector<f64>,
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let s_count = psi.nrows();
    if psi.determinant().abs() < PSI_DET_FLOOR {
        return None;
    }
    let m = psi.clone().try_inverse()?;
    let mt = m.transpose();
    let eta = &mt * theta;
    let n_psi = s_count * s_count - s_count;
    let mut jac = DMatrix::zeros(s_count, n_psi + s_count);
    let mut k = 0;
    for r in 0..s_count {
        for s in 0..s_count {
            if r != s {
                // d eta / d psi_{rs} = -eta_r * (column s of Psi^{-T})
                let col = mt.column(s);
                for i in 0..s_count {
                    jac[(i, k)] = -eta[r] * col[i];
                }
                k += 1;
            }
        }
    }
    for t in 0..s_count {
        let col = mt.column(t);
        for i in 0..s_count {
            jac[(i, n_psi + t)] = col[i];
        }
    }
    Some((eta, jac))
}

/// Tests whether the contemporaneous inter-sector impacts are all zero,
/// using the horizon-`h` instrument moments.  Needs at least `S^2`
/// instruments for the stacked parameter to satisfy the order condition.
pub fn gmm_test_no_intersectoral(
    panel: &Panel,
    h: usize,
    controls: &ControlSpec,
    bandwidth: Option<usize>,
) -> Result<GmmTestResult> {
    let s_count = panel.n_sectors();
    if s_count == 0 {
        return Err(Error::InvalidArgument(
            "the impact test needs sector columns in the panel".into(),
        ));
    }
    let l = panel.n_instruments();
    if l < s_count * s_count {
        return Err(Error::UnderIdentified {
            instruments: l,
            unknowns: s_count * s_count,
        });
    }
    let stacked = stack_moments(panel, h, controls, false)?;
    linalg::require_full_column_rank(&stacked.c_zx)?;
    let n = stacked.nobs;
    let nf = n as f64;
    let bw = bandwidth.unwrap_or(h + 1);
    let d = &stacked.c_zx;
    let c = &stacked.c_zy;

    // Initial point: unweighted minimum distance for theta, zero
    // inter-sector impacts.
    let a0 = d.transpose() * d;
    let b0 = d.transpose() * c;
    let theta0 = linalg::solve_spd(&a0, &b0)?;

    if s_count == 1 {
        // A single sector has no inter-sector impacts to test.
        return Ok(GmmTestResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            psi0: DMatrix::identity(1, 1),
            theta: theta0,
            iterations: 0,
            criterion: 0.0,
        });
    }

    // Efficient weight from the long-run moment covariance at the initial
    // point, held fixed afterwards.
    let g0 = moment_matrix(&stacked, &theta0);
    let omega = newey_west(&g0, bw)?;
    let (omega, clipped) = linalg::clip_psd(&omega);
    if clipped {
        log::warn!("moment covariance clipped to PSD before weighting");
    }
    let w = match omega.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => {
            return Err(Error::Weighting(
                "long-run moment covariance is singular; cannot form the efficient weight".into(),
            ))
        }
    };

    let n_psi = s_count * s_count - s_count;
    let n_par = n_psi + s_count;
    let mut beta = DVector::zeros(n_par);
    for t in 0..s_count {
        beta[n_psi + t] = theta0[t];
    }

    let criterion_of = |eta: &DVector<f64>| -> f64 {
        let gbar = c - d * eta;
        (gbar.transpose() * &w * &gbar)[(0, 0)]
    };

    let psi_init = psi_from_params(beta.as_slice(), s_count);
    let (eta, mut jac) = eta_and_jacobian(&psi_init, &theta0).expect("identity impact matrix");
    let mut q = criterion_of(&eta);
    let mut trace = vec![q];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let g_mat = -(d * &jac); // l x n_par derivative of the moment
        let psi_now = psi_from_params(beta.as_slice(), s_count);
        let theta_now = DVector::from_iterator(s_count, (0..s_count).map(|t| beta[n_psi + t]));
        let (eta_now, _) = eta_and_jacobian(&psi_now, &theta_now).ok_or(Error::SingularPsi)?;
        let gbar = c - d * &eta_now;
        let grad = g_mat.transpose() * &w * &gbar;
        let hess = g_mat.transpose() * &w * &g_mat;
        let step = -(linalg::pseudo_inverse(&hess, linalg::RANK_TOL) * &grad);

        let mut scale = 1.0;
        let mut halvings = 0;
        let accepted = loop {
            let cand = &beta + &step * scale;
            let psi_c = psi_from_params(cand.as_slice(), s_count);
            let theta_c = DVector::from_iterator(s_count, (0..s_count).map(|t| cand[n_psi + t]));
            match eta_and_jacobian(&psi_c, &theta_c) {
                Some((eta_c, jac_c)) => {
                    let q_c = criterion_of(&eta_c);
                    if q_c <= q + 1e-15 * (1.0 + q.abs()) {
                        beta = cand;
                        jac = jac_c;
                        let improvement = q - q_c;
                        q = q_c;
                        trace.push(q);
                        break Some(improvement);
                    }
                }
                None => {}
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                break None;
            }
            scale *= 0.5;
        };

        match accepted {
            Some(improvement) => {
                if improvement.abs() <= CRITERION_TOL * (1.0 + q.abs()) {
                    converged = true;
                    break;
                }
            }
            None => {
                // Every candidate along the step was singular or worse.
                let psi_here = psi_from_params(beta.as_slice(), s_count);
                if psi_here.determinant().abs() < PSI_DET_FLOOR {
                    return Err(Error::SingularPsi);
                }
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations,
            trace,
        });
    }

    let psi_hat = psi_from_params(beta.as_slice(), s_count);
    let theta_hat = DVector::from_iterator(s_count, (0..s_count).map(|t| beta[n_psi + t]));
    let (eta_hat, jac_hat) =
        eta_and_jacobian(&psi_hat, &theta_hat).ok_or(Error::SingularPsi)?;
    let q_final = criterion_of(&eta_hat);
    let g_mat = -(d * &jac_hat);
    let v_full = linalg::pseudo_inverse(&(g_mat.transpose() * &w * &g_mat), linalg::RANK_TOL);
    let v_psi = v_full.view((0, 0), (n_psi, n_psi)).into_owned();
    let psi_vec = DVector::from_iterator(n_psi, (0..n_psi).map(|k| beta[k]));
    let statistic =
        (nf * (psi_vec.transpose() * linalg::pseudo_inverse(&v_psi, linalg::RANK_TOL) * &psi_vec))
            [(0, 0)]
            .max(0.0);
    let dof = n_psi;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let p_value = (1.0 - chi.cdf(statistic)).clamp(0.0, 1.0);

    Ok(GmmTestResult {
        statistic,
        dof,
        p_value,
        psi0: psi_hat,
        theta: theta_hat,
        iterations,
        criterion: q_final,
    })
}
