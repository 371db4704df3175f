//! Population identification results.
//!
//! With a single instrument, the ratio Cov(y_{t+h}, z_t) / Cov(x_t, z_t)
//! equals a weighted combination of per-shock responses, with weights
//! alpha_s / sum(alpha) driven by the instrument-shock covariances alpha.
//! Same-signed alphas put the combination in the convex hull of the
//! responses; mixed signs can push it outside.  With sectoral data and as
//! many instruments as composite shocks, the per-shock responses are point
//! identified from a linear system of covariances.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::replication_rng;
use crate::svma::{
    draw_shock_matrix, binary_threshold, AugmentedSvmaModel, InstrumentKind, InstrumentSpec,
    SvmaModel,
};

/// Relative tolerance below which the weight denominator `sum(alpha)` is
/// treated as zero.
pub const RELEVANCE_TOL: f64 = 1e-10;

/// Number of draws used when instrument-shock covariances have no closed
/// form and are simulated instead.
pub const ALPHA_MC_DRAWS: usize = 1_000_000;

/// Fixed stream id for the simulated-alpha draws, so population routines
/// stay deterministic.
const ALPHA_MC_SEED: u64 = 0x616c_7068_615f_6d63;

/// Covariances between one instrument and each composite shock.
#[derive(Debug, Clone)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    pub source: AlphaSource,
}

#[derive(Debug, Clone)]
pub enum AlphaSource {
    /// Closed form under a linear instrument equation.
    Analytic,
    /// Monte Carlo integration; standard errors describe the simulation
    /// noise of each component.
    Simulated { draws: usize, std_errors: Vec<f64> },
}

/// Weights attached to each composite shock's response by a single
/// instrument.
#[derive(Debug, Clone)]
pub struct WeightVector {
    pub values: Vec<f64>,
}

impl WeightVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Instrument-shock covariance matrix, one row per instrument, one column
/// per composite shock.
#[derive(Debug, Clone)]
pub struct LambdaMatrix(pub DMatrix<f64>);

impl LambdaMatrix {
    /// Rank condition for point identification: the matrix must have full
    /// column rank.
    pub fn rank_ok(&self) -> bool {
        linalg::require_full_column_rank(&self.0).is_ok()
    }
}

fn check_exogeneity(spec: &InstrumentSpec, composite_count: usize) -> Result<()> {
    for (s, &load) in spec.loadings.iter().enumerate() {
        if s >= composite_count && load != 0.0 {
            return Err(Error::ExogeneityViolation { shock: s });
        }
    }
    Ok(())
}

/// Covariance of the instrument with each composite shock.
///
/// Continuous instruments admit the closed form `loading * variance`.
/// Binary instruments are integrated by Monte Carlo with a fixed internal
/// stream; the result carries its simulation standard errors.
pub fn alpha(model: &SvmaModel, spec: &InstrumentSpec) -> Result<AlphaVector> {
    spec.validate(model.n_shocks())?;
    check_exogeneity(spec, model.composite_count())?;
    let s_count = model.composite_count();
    match spec.kind {
        InstrumentKind::Continuous => {
            let values = (0..s_count)
                .map(|s| spec.loadings[s] * model.shock_variances()[s])
                .collect();
            Ok(AlphaVector {
                values,
                source: AlphaSource::Analytic,
            })
        }
        InstrumentKind::Binary { .. } => {
            let threshold = binary_threshold(spec, model.shock_variances(), model.distributions())?;
            let mut rng = replication_rng(ALPHA_MC_SEED, 0);
            let mut sums = vec![0.0; s_count];
            let mut sq_sums = vec![0.0; s_count];
            let noise_sd = spec.noise_variance.sqrt();
            for _ in 0..ALPHA_MC_DRAWS {
                let draw = draw_shock_matrix(
                    &mut rng,
                    model.shock_variances(),
                    model.distributions(),
                    1,
                );
                let mut latent = 0.0;
                for (s, &load) in spec.loadings.iter().enumerate() {
                    if load != 0.0 {
                        latent += load * draw[(s, 0)];
                    }
                }
                if noise_sd > 0.0 {
                    let u: f64 = rng.sample(StandardNormal);
                    latent += u * noise_sd;
                }
                if latent > threshold {
                    for s in 0..s_count {
                        let v = draw[(s, 0)];
                        sums[s] += v;
                        sq_sums[s] += v * v;
                    }
                }
            }
            let n = ALPHA_MC_DRAWS as f64;
            let values: Vec<f64> = sums.iter().map(|&s| s / n).collect();
            let std_errors = sums
                .iter()
                .zip(&sq_sums)
                .map(|(&s, &sq)| {
                    let mean = s / n;
                    ((sq / n - mean * mean).max(0.0) / n).sqrt()
                })
                .collect();
            Ok(AlphaVector {
                values,
                source: AlphaSource::Simulated {
                    draws: ALPHA_MC_DRAWS,
                    std_errors,
                },
            })
        }
    }
}

/// Normalizes instrument-shock covariances into weights summing to one.
pub fn lpiv_weights(alpha: &AlphaVector) -> Result<WeightVector> {
    let max_abs = alpha.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let total: f64 = alpha.values.iter().sum();
    if max_abs == 0.0 || total.abs() < RELEVANCE_TOL * max_abs {
        return Err(Error::WeakDenominator {
            value: total,
            scale: max_abs,
        });
    }
    Ok(WeightVector {
        values: alpha.values.iter().map(|&v| v / total).collect(),
    })
}

/// Whether all instrument-shock covariances share one sign (weakly).
/// Guarantees nonnegative weights.
pub fn same_sign_holds(alpha: &AlphaVector) -> bool {
    let any_pos = alpha.values.iter().any(|&v| v > 0.0);
    let any_neg = alpha.values.iter().any(|&v| v < 0.0);
    !(any_pos && any_neg)
}

/// Population value of the single-instrument projection coefficient at
/// horizon `h`: the weighted combination of the outcome's per-shock
/// responses.
pub fn lpiv_estimand(model: &SvmaModel, spec: &InstrumentSpec, h: usize) -> Result<f64> {
    let a = alpha(model, spec)?;
    let w = lpiv_weights(&a)?;
    let y_row = model.y_row();
    Ok(w
        .values
        .iter()
        .enumerate()
        .map(|(s, &ws)| ws * model.true_irf(h, y_row, s))
        .sum())
}

/// Decomposition of the cumulative single-instrument estimand into
/// response-weighted shares and per-shock cumulative multipliers.
#[derive(Debug, Clone)]
pub struct CumulativeDecomposition {
    pub value: f64,
    pub weights: Vec<f64>,
    pub multipliers: Vec<f64>,
}

/// Zero tolerance for cumulative regressor responses in multiplier
/// denominators.
const CUMULATIVE_ZERO_TOL: f64 = 1e-12;

/// Population value of the cumulative estimand at horizon `h`, decomposed
/// as `sum_s share_s * multiplier_s` where the shares also depend on the
/// regressor's cumulative responses.
pub fn cumulative_lpiv_estimand(
    model: &SvmaModel,
    spec: &InstrumentSpec,
    h: usize,
) -> Result<CumulativeDecomposition> {
    let a = alpha(model, spec)?;
    // Relevance of the level regression is still required.
    lpiv_weights(&a)?;
    let s_count = model.composite_count();
    let (x_row, y_row) = (model.x_row(), model.y_row());
    let mut shares = Vec::with_capacity(s_count);
    let mut multipliers = Vec::with_capacity(s_count);
    let mut denom = 0.0;
    for s in 0..s_count {
        let cum_x = model.cumulative_true_irf(h, x_row, s);
        if cum_x.abs() <= CUMULATIVE_ZERO_TOL {
            return Err(Error::ZeroCumulativeResponse { sector: s });
        }
        denom += a.values[s] * cum_x;
    }
    let scale = (0..s_count)
        .map(|s| (a.values[s] * model.cumulative_true_irf(h, x_row, s)).abs())
        .fold(0.0_f64, f64::max);
    if scale == 0.0 || denom.abs() < RELEVANCE_TOL * scale {
        return Err(Error::WeakDenominator {
            value: denom,
            scale,
        });
    }
    for s in 0..s_count {
        let cum_x = model.cumulative_true_irf(h, x_row, s);
        let cum_y = model.cumulative_true_irf(h, y_row, s);
        shares.push(a.values[s] * cum_x / denom);
        multipliers.push(cum_y / cum_x);
    }
    let value = recompose(&shares, &multipliers);
    Ok(CumulativeDecomposition {
        value,
        weights: shares,
        multipliers,
    })
}

/// Weighted recombination `sum_s w_s m_s` of component multipliers.
pub fn recompose(weights: &[f64], multipliers: &[f64]) -> f64 {
    weights
        .iter()
        .zip(multipliers)
        .map(|(w, m)| w * m)
        .sum()
}

/// Instrument-shock covariance matrix for a set of continuous instruments
/// against the composite shocks of an augmented model.
pub fn lambda_matrix(
    aug: &AugmentedSvmaModel,
    specs: &[InstrumentSpec],
) -> Result<LambdaMatrix> {
    let s_count = aug.sector_count();
    let mut out = DMatrix::zeros(specs.len(), s_count);
    for (j, spec) in specs.iter().enumerate() {
        spec.validate(aug.n_shocks())?;
        check_exogeneity(spec, s_count)?;
        if !matches!(spec.kind, InstrumentKind::Continuous) {
            return Err(Error::InvalidArgument(
                "instrument-shock covariance matrix requires continuous instruments".into(),
            ));
        }
        for s in 0..s_count {
            out[(j, s)] = spec.loadings[s] * aug.shock_variances()[s];
        }
    }
    Ok(LambdaMatrix(out))
}

fn check_weight_matrix(weight: Option<&DMatrix<f64>>, l: usize) -> Result<DMatrix<f64>> {
    match weight {
        None => Ok(DMatrix::identity(l, l)),
        Some(w) => {
            if w.nrows() != l || w.ncols() != l {
                return Err(Error::Weighting(format!(
                    "weight matrix is {}x{}, expected {}x{}",
                    w.nrows(),
                    w.ncols(),
                    l,
                    l
                )));
            }
            let asym = (w - w.transpose()).abs().max();
            if asym > 1e-10 * w.abs().max().max(1.0) {
                return Err(Error::Weighting("weight matrix is not symmetric".into()));
            }
            if !linalg::is_positive_definite(w) {
                return Err(Error::Weighting(
                    "weight matrix is not positive definite".into(),
                ));
            }
            Ok(w.clone())
        }
    }
}

/// Solves the instrument-covariance system for the per-shock responses.
///
/// With as many instruments as shocks this is a linear solve; with more,
/// a minimum-distance solve under the supplied positive definite weight
/// matrix (identity when omitted).
pub fn multi_iv_identify(
    cov_zy: &DVector<f64>,
    cov_zx: &DMatrix<f64>,
    weight: Option<&DMatrix<f64>>,
) -> Result<DVector<f64>> {
    let l = cov_zx.nrows();
    let s = cov_zx.ncols();
    if cov_zy.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "covariance vector has {} rows, matrix has {}",
            cov_zy.len(),
            l
        )));
    }
    if l < s {
        return Err(Error::UnderIdentified {
            instruments: l,
            unknowns: s,
        });
    }
    linalg::require_full_column_rank(cov_zx)?;
    if l == s {
        return linalg::solve_square(cov_zx, cov_zy);
    }
    let w = check_weight_matrix(weight, l)?;
    let cw = cov_zx.transpose() * &w;
    let a = &cw * cov_zx;
    let rhs = &cw * cov_zy;
    linalg::solve_spd(&a, &rhs)
}

/// Same algebra as [`multi_iv_identify`] applied to cumulative covariances;
/// the solution is the vector of cumulative outcome responses scaled by
/// each sector's own cumulative response.
pub fn multi_iv_identify_cumulative(
    cov_zy_cum: &DVector<f64>,
    cov_zx_cum: &DMatrix<f64>,
    weight: Option<&DMatrix<f64>>,
) -> Result<DVector<f64>> {
    multi_iv_identify(cov_zy_cum, cov_zx_cum, weight)
}

/// Analytic covariances implied by an augmented model with continuous
/// instruments.  These are oracle inputs for the identification solves and
/// the population targets of Monte Carlo experiments.
pub mod population {
    use super::*;

    /// Full instrument-shock covariance over all `m` shocks, without any
    /// exogeneity requirement.
    fn lambda_all(aug: &AugmentedSvmaModel, specs: &[InstrumentSpec]) -> Result<DMatrix<f64>> {
        let m = aug.n_shocks();
        let mut out = DMatrix::zeros(specs.len(), m);
        for (j, spec) in specs.iter().enumerate() {
            spec.validate(m)?;
            if !matches!(spec.kind, InstrumentKind::Continuous) {
                return Err(Error::InvalidArgument(
                    "population covariances require continuous instruments".into(),
                ));
            }
            for r in 0..m {
                out[(j, r)] = spec.loadings[r] * aug.shock_variances()[r];
            }
        }
        Ok(out)
    }

    /// Cov(z_j, x_{s,t}).
    pub fn cov_zx(aug: &AugmentedSvmaModel, specs: &[InstrumentSpec]) -> Result<DMatrix<f64>> {
        let lambda = lambda_all(aug, specs)?;
        let s_count = aug.sector_count();
        let m = aug.n_shocks();
        let mut out = DMatrix::zeros(specs.len(), s_count);
        for j in 0..specs.len() {
            for s in 0..s_count {
                out[(j, s)] = (0..m).map(|r| lambda[(j, r)] * aug.true_irf(0, s, r)).sum();
            }
        }
        Ok(out)
    }

    /// Cov(y_{t+h}, z_j).
    pub fn cov_zy(
        aug: &AugmentedSvmaModel,
        specs: &[InstrumentSpec],
        h: usize,
    ) -> Result<DVector<f64>> {
        let lambda = lambda_all(aug, specs)?;
        let m = aug.n_shocks();
        let y_row = aug.y_row();
        Ok(DVector::from_iterator(
            specs.len(),
            (0..specs.len()).map(|j| {
                (0..m)
                    .map(|r| lambda[(j, r)] * aug.true_irf(h, y_row, r))
                    .sum()
            }),
        ))
    }

    /// Cov(z_j, sum of x_{s} over t..t+h).
    pub fn cov_zx_cumulative(
        aug: &AugmentedSvmaModel,
        specs: &[InstrumentSpec],
        h: usize,
    ) -> Result<DMatrix<f64>> {
        let lambda = lambda_all(aug, specs)?;
        let s_count = aug.sector_count();
        let m = aug.n_shocks();
        let mut out = DMatrix::zeros(specs.len(), s_count);
        for j in 0..specs.len() {
            for s in 0..s_count {
                out[(j, s)] = (0..m)
                    .map(|r| lambda[(j, r)] * aug.cumulative_true_irf(h, s, r))
                    .sum();
            }
        }
        Ok(out)
    }

    /// Cov(sum of y over t..t+h, z_j).
    pub fn cov_zy_cumulative(
        aug: &AugmentedSvmaModel,
        specs: &[InstrumentSpec],
        h: usize,
    ) -> Result<DVector<f64>> {
        let lambda = lambda_all(aug, specs)?;
        let m = aug.n_shocks();
        let y_row = aug.y_row();
        Ok(DVector::from_iterator(
            specs.len(),
            (0..specs.len()).map(|j| {
                (0..m)
                    .map(|r| lambda[(j, r)] * aug.cumulative_true_irf(h, y_row, r))
                    .sum()
            }),
        ))
    }

    /// Population per-shock outcome responses recovered from the
    /// covariance system.
    pub fn sectoral_estimand(
        aug: &AugmentedSvmaModel,
        specs: &[InstrumentSpec],
        h: usize,
        weight: Option<&DMatrix<f64>>,
    ) -> Result<DVector<f64>> {
        let czx = cov_zx(aug, specs)?;
        let czy = cov_zy(aug, specs, h)?;
        multi_iv_identify(&czy, &czx, weight)
    }

    /// Population cumulative multipliers: cumulative outcome response per
    /// shock divided by the sector's own cumulative response.
    pub fn sectoral_cumulative_estimand(
        aug: &AugmentedSvmaModel,
        specs: &[InstrumentSpec],
        h: usize,
        weight: Option<&DMatrix<f64>>,
    ) -> Result<DVector<f64>> {
        for s in 0..aug.sector_count() {
            if aug.cumulative_true_irf(h, s, s).abs() <= CUMULATIVE_ZERO_TOL {
                return Err(Error::ZeroCumulativeResponse { sector: s });
            }
        }
        let czx = cov_zx_cumulative(aug, specs, h)?;
        let czy = cov_zy_cumulative(aug, specs, h)?;
        multi_iv_identify_cumulative(&czy, &czx, weight)
    }
}
