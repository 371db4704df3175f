//! Control sets and residualization for local projection regressions.
//!
//! Each instrument gets its own control set: a constant plus `lag_order`
//! lags of the outcome, the aggregate regressor, the instrument itself, and
//! optionally each sector.  Estimation at horizon `h` runs over the
//! observations with full lag history and an `h`-step lead, so the sample
//! is `t = lag_order .. T - 1 - h`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::svma::Panel;

/// Which variables enter the control set.  The constant is always included.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSpec {
    pub lag_order: usize,
    pub include_y_lags: bool,
    pub include_x_lags: bool,
    /// Lags of the instrument being used, not of the other instruments.
    pub include_instrument_lags: bool,
    pub include_sector_lags: bool,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self {
            lag_order: 4,
            include_y_lags: true,
            include_x_lags: true,
            include_instrument_lags: true,
            include_sector_lags: false,
        }
    }
}

impl ControlSpec {
    /// Constant-only controls; residualization reduces to demeaning.
    pub fn constant_only() -> Self {
        Self {
            lag_order: 0,
            include_y_lags: false,
            include_x_lags: false,
            include_instrument_lags: false,
            include_sector_lags: false,
        }
    }
}

/// Contiguous estimation sample: panel indices `start .. start + len`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Window {
    pub start: usize,
    pub len: usize,
}

pub(crate) fn effective_window(t_total: usize, lag_order: usize, h: usize) -> Result<Window> {
    if t_total <= lag_order + h {
        return Err(Error::InsufficientSample {
            required: lag_order + h,
            available: t_total,
        });
    }
    Ok(Window {
        start: lag_order,
        len: t_total - lag_order - h,
    })
}

/// Builds the control matrix for one instrument over a window, together
/// with column labels used in error reports.
pub(crate) fn control_matrix(
    panel: &Panel,
    spec: &ControlSpec,
    instrument: usize,
    window: Window,
) -> (DMatrix<f64>, Vec<String>) {
    let mut columns: Vec<(&[f64], String)> = Vec::new();
    let names = panel.names();
    if spec.include_y_lags {
        columns.push((panel.y(), names.y.clone()));
    }
    if spec.include_x_lags {
        columns.push((panel.x(), names.x.clone()));
    }
    if spec.include_instrument_lags {
        columns.push((
            panel.instrument(instrument),
            names.instruments[instrument].clone(),
        ));
    }
    if spec.include_sector_lags {
        for s in 0..panel.n_sectors() {
            columns.push((panel.sector(s), names.sectors[s].clone()));
        }
    }
    let n_cols = 1 + columns.len() * spec.lag_order;
    let mut r = DMatrix::zeros(window.len, n_cols);
    let mut labels = Vec::with_capacity(n_cols);
    for t in 0..window.len {
        r[(t, 0)] = 1.0;
    }
    labels.push("const".to_string());
    let mut col = 1;
    for (series, name) in &columns {
        for lag in 1..=spec.lag_order {
            for t in 0..window.len {
                r[(t, col)] = series[window.start + t - lag];
            }
            labels.push(format!("{name}.l{lag}"));
            col += 1;
        }
    }
    (r, labels)
}

/// Least-squares projector onto the orthogonal complement of a control
/// matrix.  Construction fails on collinear controls, naming the dependent
/// columns.
pub(crate) struct Residualizer {
    r: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl Residualizer {
    pub fn new(r: DMatrix<f64>, labels: &[String]) -> Result<Self> {
        if r.nrows() <= r.ncols() {
            return Err(Error::InsufficientSample {
                required: r.ncols(),
                available: r.nrows(),
            });
        }
        // Sequential projection flags every column that adds no new
        // direction beyond the ones before it.
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(r.ncols());
        let mut dependent = Vec::new();
        for c in 0..r.ncols() {
            let col = DVector::from_column_slice(r.column(c).as_slice());
            let orig_norm = col.norm();
            let mut v = col;
            for q in &basis {
                let proj = q.dot(&v);
                v -= q * proj;
            }
            if v.norm() <= 1e-10 * orig_norm.max(1e-300) {
                dependent.push(labels[c].clone());
            } else {
                let n = v.norm();
                basis.push(v / n);
            }
        }
        if !dependent.is_empty() {
            return Err(Error::Collinearity { columns: dependent });
        }
        let gram = r.transpose() * &r;
        Ok(Self { r, gram })
    }

    /// Residual of `series` after projecting on the controls.
    pub fn residualize(&self, series: &[f64]) -> Result<Vec<f64>> {
        if series.len() != self.r.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "series has {} observations, control matrix has {}",
                series.len(),
                self.r.nrows()
            )));
        }
        let v = DVector::from_column_slice(series);
        let rhs = self.r.transpose() * &v;
        let beta = linalg::solve_spd(&self.gram, &rhs)?;
        let resid = v - &self.r * beta;
        Ok(resid.iter().cloned().collect())
    }
}

/// Residual of a full-length series after projecting on instrument
/// `instrument`'s control set.  Entry `k` of the result corresponds to
/// panel index `lag_order + k`.
pub fn residualize(
    series: &[f64],
    panel: &Panel,
    controls: &ControlSpec,
    instrument: usize,
) -> Result<Vec<f64>> {
    if instrument >= panel.n_instruments() {
        return Err(Error::InvalidArgument(format!(
            "instrument index {} out of range ({} instruments)",
            instrument,
            panel.n_instruments()
        )));
    }
    if series.len() != panel.len() {
        return Err(Error::DimensionMismatch(format!(
            "series has {} observations, panel has {}",
            series.len(),
            panel.len()
        )));
    }
    let window = effective_window(panel.len(), controls.lag_order, 0)?;
    let (r, labels) = control_matrix(panel, controls, instrument, window);
    let proj = Residualizer::new(r, &labels)?;
    proj.residualize(&series[window.start..window.start + window.len])
}

/// Partial sums over a forward window: entry `t` is the sum of
/// `series[t ..= t + h]`.
pub(crate) fn forward_cumulative(series: &[f64], start: usize, len: usize, h: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let t = start + k;
            series[t..=t + h].iter().sum()
        })
        .collect()
}

/// Forward-shifted slice: entry `t` is `series[t + h]`.
pub(crate) fn forward_shift(series: &[f64], start: usize, len: usize, h: usize) -> Vec<f64> {
    (0..len).map(|k| series[start + k + h]).collect()
}
