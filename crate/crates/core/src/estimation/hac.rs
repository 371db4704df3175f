//! Heteroskedasticity- and autocorrelation-consistent long-run covariance.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Newey-West estimate of the long-run covariance of a moment sequence.
///
/// `moments` holds one observation per row.  With bandwidth `B` the
/// estimate is `G_0 + sum_{j=1..B} (1 - j/(B+1)) (G_j + G_j')` where
/// `G_j = (1/N) sum_t g_t g_{t-j}'`.  The `1/N` scaling (rather than
/// `1/(N-j)`) keeps the result positive semidefinite.
pub fn newey_west(moments: &DMatrix<f64>, bandwidth: usize) -> Result<DMatrix<f64>> {
    let n = moments.nrows();
    let k = moments.ncols();
    if n == 0 || k == 0 {
        return Err(Error::EmptyInput("moment matrix is empty".into()));
    }
    if bandwidth >= n {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {bandwidth} must be smaller than the sample size {n}"
        )));
    }
    let mut omega = DMatrix::zeros(k, k);
    for j in 0..=bandwidth {
        let mut gamma = DMatrix::zeros(k, k);
        for t in j..n {
            let g_t = moments.row(t).transpose();
            let g_lag = moments.row(t - j);
            gamma += g_t * g_lag;
        }
        gamma /= n as f64;
        if j == 0 {
            omega += gamma;
        } else {
            let weight = 1.0 - j as f64 / (bandwidth as f64 + 1.0);
            omega += (&gamma + gamma.transpose()) * weight;
        }
    }
    Ok(linalg::symmetrize(&omega))
}
