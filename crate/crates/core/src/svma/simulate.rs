//! Simulation of observables and instruments from a structural model.
//!
//! A simulation draws `T + h_max` shock vectors, uses the first `h_max` as
//! burn-in history, and produces `T` observations.  Shocks and each
//! instrument's measurement noise come from separate deterministic streams
//! derived from the caller's seed, so adding or removing an instrument does
//! not perturb the other columns.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::replication_rng;

use super::model::{
    AugmentedSvmaModel, InstrumentKind, InstrumentSpec, ShockDistribution, SvmaModel,
};
use super::panel::Panel;
use super::LagPolynomial;

/// Draws a matrix of structural shocks, one row per shock, one column per
/// period.  Shocks are mutually independent across rows and columns.
pub fn draw_shock_matrix<R: Rng>(
    rng: &mut R,
    variances: &[f64],
    distributions: &[ShockDistribution],
    columns: usize,
) -> DMatrix<f64> {
    let m = variances.len();
    let mut shocks = DMatrix::zeros(m, columns);
    for t in 0..columns {
        for s in 0..m {
            shocks[(s, t)] = match &distributions[s] {
                ShockDistribution::Gaussian => {
                    let u: f64 = rng.sample(StandardNormal);
                    u * variances[s].sqrt()
                }
                ShockDistribution::Discrete(points) => {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut value = points[points.len() - 1].value;
                    for p in points {
                        acc += p.mass;
                        if u < acc {
                            value = p.value;
                            break;
                        }
                    }
                    value
                }
            };
        }
    }
    shocks
}

/// Convolves a lag polynomial with a shock path.  The shock matrix must
/// carry `h_max` burn-in columns ahead of the sample; the output has
/// `shocks.ncols() - h_max` columns.
pub fn convolve(lag: &LagPolynomial, shocks: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if shocks.nrows() != lag.n_shocks() {
        return Err(Error::DimensionMismatch(format!(
            "shock matrix has {} rows for {} shocks",
            shocks.nrows(),
            lag.n_shocks()
        )));
    }
    let h_max = lag.h_max();
    if shocks.ncols() <= h_max {
        return Err(Error::InsufficientSample {
            required: h_max,
            available: shocks.ncols(),
        });
    }
    let t_len = shocks.ncols() - h_max;
    let rows = lag.n_rows();
    let mut out = DMatrix::zeros(rows, t_len);
    for t in 0..t_len {
        for k in 0..=h_max {
            let coeff = lag.coeff(k).expect("lag within range");
            let col = t + h_max - k;
            for r in 0..rows {
                let mut acc = 0.0;
                for s in 0..lag.n_shocks() {
                    acc += coeff[(r, s)] * shocks[(s, col)];
                }
                out[(r, t)] += acc;
            }
        }
    }
    Ok(out)
}

/// Threshold `c` such that the latent index `loadings' shocks + noise`
/// exceeds `c` with probability `p_z`.
///
/// The latent index is a finite mixture of normals: the discrete loaded
/// shocks contribute the mixture points, the Gaussian loaded shocks and the
/// measurement noise contribute a common variance.  The mixture CDF is
/// strictly increasing whenever that variance is positive, so the quantile
/// is found by bisection.
pub fn binary_threshold(
    spec: &InstrumentSpec,
    variances: &[f64],
    distributions: &[ShockDistribution],
) -> Result<f64> {
    let p_z = match spec.kind {
        InstrumentKind::Binary { p_z } => p_z,
        InstrumentKind::Continuous => {
            return Err(Error::InvalidArgument(
                "threshold is only defined for binary instruments".into(),
            ))
        }
    };
    let mut gaussian_var = spec.noise_variance;
    // Mixture points from the discrete loaded shocks.
    let mut points: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for (s, &load) in spec.loadings.iter().enumerate() {
        if load == 0.0 {
            continue;
        }
        match &distributions[s] {
            ShockDistribution::Gaussian => gaussian_var += load * load * variances[s],
            ShockDistribution::Discrete(support) => {
                let mut next = Vec::with_capacity(points.len() * support.len());
                for &(v, mass) in &points {
                    for p in support {
                        next.push((v + load * p.value, mass * p.mass));
                    }
                }
                points = next;
            }
        }
    }
    if gaussian_var <= 0.0 {
        return Err(Error::InvalidArgument(
            "binary instrument needs a continuous latent index; add noise variance or a Gaussian loaded shock".into(),
        ));
    }
    let sd = gaussian_var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let cdf = |c: f64| -> f64 {
        points
            .iter()
            .map(|&(v, mass)| mass * normal.cdf((c - v) / sd))
            .sum()
    };
    let target = 1.0 - p_z;
    let spread = points
        .iter()
        .map(|&(v, _)| v.abs())
        .fold(0.0_f64, f64::max);
    let mut lo = -spread - 12.0 * sd;
    let mut hi = spread + 12.0 * sd;
    while cdf(lo) > target {
        lo -= 8.0 * sd;
    }
    while cdf(hi) < target {
        hi += 8.0 * sd;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Instrument columns for a block of in-sample shock columns.
fn instrument_columns(
    specs: &[InstrumentSpec],
    variances: &[f64],
    distributions: &[ShockDistribution],
    shocks: &DMatrix<f64>,
    burn_in: usize,
    t_len: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut columns = Vec::with_capacity(specs.len());
    for (j, spec) in specs.iter().enumerate() {
        spec.validate(variances.len())?;
        // Stream j+1; stream 0 is reserved for the shocks.
        let mut noise_rng = replication_rng(seed, (j + 1) as u64);
        let mut latent = vec![0.0; t_len];
        for (t, value) in latent.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (s, &load) in spec.loadings.iter().enumerate() {
                if load != 0.0 {
                    acc += load * shocks[(s, burn_in + t)];
                }
            }
            if spec.noise_variance > 0.0 {
                let u: f64 = noise_rng.sample(StandardNormal);
                acc += u * spec.noise_variance.sqrt();
            }
            *value = acc;
        }
        match spec.kind {
            InstrumentKind::Continuous => columns.push(latent),
            InstrumentKind::Binary { .. } => {
                let c = binary_threshold(spec, variances, distributions)?;
                columns.push(
                    latent
                        .iter()
                        .map(|&v| if v > c { 1.0 } else { 0.0 })
                        .collect(),
                );
            }
        }
    }
    Ok(columns)
}

fn check_simulation_args(t_len: usize, specs: &[InstrumentSpec], m: usize) -> Result<()> {
    if t_len < 1 {
        return Err(Error::InvalidArgument(
            "sample length must be at least 1".into(),
        ));
    }
    if specs.is_empty() {
        return Err(Error::EmptyInput("no instrument specifications".into()));
    }
    for spec in specs {
        spec.validate(m)?;
    }
    Ok(())
}

impl SvmaModel {
    /// Observable rows implied by a given shock path (deterministic mode).
    /// The path must include `h_max` burn-in columns.
    pub fn observable_rows(&self, shocks: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        convolve(self.theta(), shocks)
    }

    /// Simulates a panel of length `t_len` with one column per instrument.
    pub fn simulate(&self, specs: &[InstrumentSpec], t_len: usize, seed: u64) -> Result<Panel> {
        check_simulation_args(t_len, specs, self.n_shocks())?;
        let burn_in = self.h_max();
        let mut shock_rng = replication_rng(seed, 0);
        let shocks = draw_shock_matrix(
            &mut shock_rng,
            self.shock_variances(),
            self.distributions(),
            t_len + burn_in,
        );
        let rows = self.observable_rows(&shocks)?;
        let instruments = instrument_columns(
            specs,
            self.shock_variances(),
            self.distributions(),
            &shocks,
            burn_in,
            t_len,
            seed,
        )?;
        let x = rows.row(self.x_row()).iter().cloned().collect();
        let y = rows.row(self.y_row()).iter().cloned().collect();
        Panel::new(y, x, Vec::new(), instruments, None)
    }
}

impl AugmentedSvmaModel {
    /// Observable rows implied by a given shock path (deterministic mode).
    pub fn observable_rows(&self, shocks: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        convolve(self.psi(), shocks)
    }

    /// Simulates a panel with sector columns, their aggregate, and one
    /// column per instrument.
    pub fn simulate(&self, specs: &[InstrumentSpec], t_len: usize, seed: u64) -> Result<Panel> {
        check_simulation_args(t_len, specs, self.n_shocks())?;
        let burn_in = self.h_max();
        let mut shock_rng = replication_rng(seed, 0);
        let shocks = draw_shock_matrix(
            &mut shock_rng,
            self.shock_variances(),
            self.distributions(),
            t_len + burn_in,
        );
        let rows = self.observable_rows(&shocks)?;
        let instruments = instrument_columns(
            specs,
            self.shock_variances(),
            self.distributions(),
            &shocks,
            burn_in,
            t_len,
            seed,
        )?;
        let s_count = self.sector_count();
        let sectors: Vec<Vec<f64>> = (0..s_count)
            .map(|s| rows.row(s).iter().cloned().collect())
            .collect();
        let x: Vec<f64> = (0..t_len)
            .map(|t| (0..s_count).map(|s| rows[(s, t)]).sum())
            .collect();
        let y = rows.row(self.y_row()).iter().cloned().collect();
        Panel::new(y, x, sectors, instruments, None)
    }
}
