//! Structural moving-average models.
//!
//! The baseline model stacks an aggregate regressor `x` (first row), any
//! intermediate observables, and an outcome `y` (last row), all driven by
//! `m` mutually uncorrelated zero-mean shocks through a finite lag
//! polynomial.  The first `S` shocks form the composite set: the instrument
//! is allowed to correlate with them and the impact response of `x` to each
//! is normalized to one.
//!
//! The augmented model replaces the aggregate row with `S` sectoral rows
//! whose sum reproduces the aggregate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::lag::LagPolynomial;

/// Tolerance for exact structural identities (normalizations, zero
/// restrictions, discrete event arithmetic).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Marginal distribution of one structural shock.
#[derive(Debug, Clone, PartialEq)]
pub enum ShockDistribution {
    /// Normal with mean zero and the variance declared on the model.
    Gaussian,
    /// Finite support with point masses; must have mean zero and match the
    /// declared variance.
    Discrete(Vec<SupportPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportPoint {
    pub value: f64,
    pub mass: f64,
}

impl ShockDistribution {
    fn validate(&self, variance: f64, shock: usize) -> Result<()> {
        if let ShockDistribution::Discrete(points) = self {
            if points.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "discrete distribution of shock {shock} has empty support"
                )));
            }
            let mut mass = 0.0;
            let mut mean = 0.0;
            let mut second = 0.0;
            for p in points {
                if p.mass <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "discrete distribution of shock {shock} has a non-positive mass"
                    )));
                }
                mass += p.mass;
                mean += p.mass * p.value;
                second += p.mass * p.value * p.value;
            }
            if (mass - 1.0).abs() > STRUCTURAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "discrete masses of shock {shock} sum to {mass}, expected 1"
                )));
            }
            if mean.abs() > STRUCTURAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "discrete distribution of shock {shock} has mean {mean}, expected 0"
                )));
            }
            let var = second - mean * mean;
            if (var - variance).abs() > 1e-9 * variance.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "discrete distribution of shock {shock} has variance {var}, declared {variance}"
                )));
            }
        }
        Ok(())
    }
}

fn validate_shock_block(
    variances: &[f64],
    distributions: &[ShockDistribution],
    m: usize,
) -> Result<()> {
    if variances.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} shock variances for {} shocks",
            variances.len(),
            m
        )));
    }
    if distributions.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} shock distributions for {} shocks",
            distributions.len(),
            m
        )));
    }
    for (s, &v) in variances.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "variance of shock {s} must be finite and strictly positive, got {v}"
            )));
        }
        distributions[s].validate(v, s)?;
    }
    Ok(())
}

/// Baseline model: rows are `(x, ..., y)`.
#[derive(Debug, Clone)]
pub struct SvmaModel {
    theta: LagPolynomial,
    shock_variances: Vec<f64>,
    distributions: Vec<ShockDistribution>,
    composite_count: usize,
    x_row: usize,
    y_row: usize,
}

impl SvmaModel {
    /// Builds and validates a baseline model.  The impact response of `x`
    /// to every composite shock must equal one.
    pub fn new(
        theta: LagPolynomial,
        shock_variances: Vec<f64>,
        distributions: Vec<ShockDistribution>,
        composite_count: usize,
    ) -> Result<Self> {
        let m = theta.n_shocks();
        validate_shock_block(&shock_variances, &distributions, m)?;
        if theta.n_rows() < 2 {
            return Err(Error::DimensionMismatch(
                "model needs at least the x and y rows".into(),
            ));
        }
        if composite_count == 0 || composite_count > m {
            return Err(Error::InvalidArgument(format!(
                "composite set size {composite_count} must lie in 1..={m}"
            )));
        }
        let x_row = 0;
        let y_row = theta.n_rows() - 1;
        for s in 0..composite_count {
            let impact = theta.at(0, x_row, s);
            if (impact - 1.0).abs() > STRUCTURAL_TOL {
                return Err(Error::NormalizationViolation { shock: s, value: impact });
            }
        }
        Ok(Self {
            theta,
            shock_variances,
            distributions,
            composite_count,
            x_row,
            y_row,
        })
    }

    pub fn theta(&self) -> &LagPolynomial {
        &self.theta
    }

    pub fn shock_variances(&self) -> &[f64] {
        &self.shock_variances
    }

    pub fn distributions(&self) -> &[ShockDistribution] {
        &self.distributions
    }

    /// Number of composite shocks `S`; the composite set is `0..S`.
    pub fn composite_count(&self) -> usize {
        self.composite_count
    }

    pub fn n_shocks(&self) -> usize {
        self.theta.n_shocks()
    }

    pub fn x_row(&self) -> usize {
        self.x_row
    }

    pub fn y_row(&self) -> usize {
        self.y_row
    }

    pub fn h_max(&self) -> usize {
        self.theta.h_max()
    }

    /// Response of `row` to `shock` at horizon `h`; zero beyond the
    /// truncation horizon.
    pub fn true_irf(&self, h: usize, row: usize, shock: usize) -> f64 {
        self.theta.at(h, row, shock)
    }

    /// Partial sum of responses through horizon `h`.
    pub fn cumulative_true_irf(&self, h: usize, row: usize, shock: usize) -> f64 {
        self.theta.cumulative_at(h, row, shock)
    }

    /// Average response of `y` at horizon `h` conditional on the composite
    /// sum of shocks equalling one.  Defined for discrete composite shocks,
    /// where the conditioning event is decidable by enumeration.
    pub fn composite_average_irf(&self, h: usize) -> Result<f64> {
        let s_count = self.composite_count;
        let mut supports: Vec<&[SupportPoint]> = Vec::with_capacity(s_count);
        for s in 0..s_count {
            match &self.distributions[s] {
                ShockDistribution::Discrete(points) => supports.push(points),
                ShockDistribution::Gaussian => {
                    return Err(Error::InvalidArgument(format!(
                        "composite-average response requires discrete composite shocks; shock {s} is continuous"
                    )));
                }
            }
        }
        let mut event_mass = 0.0;
        let mut response = 0.0;
        let mut index = vec![0usize; s_count];
        loop {
            let mut mass = 1.0;
            let mut sum = 0.0;
            let mut value = 0.0;
            for (s, &i) in index.iter().enumerate() {
                let p = supports[s][i];
                mass *= p.mass;
                sum += p.value;
                value += p.value * self.theta.at(h, self.y_row, s);
            }
            if (sum - 1.0).abs() <= STRUCTURAL_TOL {
                event_mass += mass;
                response += mass * value;
            }
            // Odometer over the product of supports.
            let mut digit = 0;
            loop {
                if digit == s_count {
                    if event_mass <= 0.0 {
                        return Err(Error::UndefinedEvent);
                    }
                    return Ok(response / event_mass);
                }
                index[digit] += 1;
                if index[digit] < supports[digit].len() {
                    break;
                }
                index[digit] = 0;
                digit += 1;
            }
        }
    }

    /// Re-expresses the baseline model as an augmented model with a single
    /// sector equal to the aggregate.
    pub fn embed_augmented(&self) -> AugmentedSvmaModel {
        let model = self.clone();
        AugmentedSvmaModel {
            psi: model.theta,
            shock_variances: model.shock_variances,
            distributions: model.distributions,
            sector_count: 1,
            y_row: model.y_row,
        }
    }
}

/// Augmented model: rows are `(x_1, ..., x_S, ..., y)` and the aggregate is
/// the sum of the first `S` rows.
#[derive(Debug, Clone)]
pub struct AugmentedSvmaModel {
    psi: LagPolynomial,
    shock_variances: Vec<f64>,
    distributions: Vec<ShockDistribution>,
    sector_count: usize,
    y_row: usize,
}

impl AugmentedSvmaModel {
    /// Builds and validates an augmented model.  Each sector's impact
    /// response to its own shock must equal one.
    pub fn new(
        psi: LagPolynomial,
        shock_variances: Vec<f64>,
        distributions: Vec<ShockDistribution>,
        sector_count: usize,
    ) -> Result<Self> {
        let m = psi.n_shocks();
        validate_shock_block(&shock_variances, &distributions, m)?;
        if sector_count == 0 || sector_count > m {
            return Err(Error::InvalidArgument(format!(
                "sector count {sector_count} must lie in 1..={m}"
            )));
        }
        if psi.n_rows() < sector_count + 1 {
            return Err(Error::DimensionMismatch(format!(
                "augmented model needs {} sector rows plus an outcome row, has {} rows",
                sector_count,
                psi.n_rows()
            )));
        }
        for s in 0..sector_count {
            let impact = psi.at(0, s, s);
            if (impact - 1.0).abs() > STRUCTURAL_TOL {
                return Err(Error::NormalizationViolation { shock: s, value: impact });
            }
        }
        let y_row = psi.n_rows() - 1;
        Ok(Self {
            psi,
            shock_variances,
            distributions,
            sector_count,
            y_row,
        })
    }

    pub fn psi(&self) -> &LagPolynomial {
        &self.psi
    }

    pub fn shock_variances(&self) -> &[f64] {
        &self.shock_variances
    }

    pub fn distributions(&self) -> &[ShockDistribution] {
        &self.distributions
    }

    pub fn sector_count(&self) -> usize {
        self.sector_count
    }

    pub fn n_shocks(&self) -> usize {
        self.psi.n_shocks()
    }

    pub fn y_row(&self) -> usize {
        self.y_row
    }

    pub fn h_max(&self) -> usize {
        self.psi.h_max()
    }

    pub fn true_irf(&self, h: usize, row: usize, shock: usize) -> f64 {
        self.psi.at(h, row, shock)
    }

    pub fn cumulative_true_irf(&self, h: usize, row: usize, shock: usize) -> f64 {
        self.psi.cumulative_at(h, row, shock)
    }

    /// True when no sector responds to another sector's shock on impact.
    pub fn no_intersectoral_impact(&self) -> bool {
        let s_count = self.sector_count;
        for r in 0..s_count {
            for s in 0..s_count {
                if r != s && self.psi.at(0, r, s).abs() > STRUCTURAL_TOL {
                    return false;
                }
            }
        }
        true
    }

    /// Collapses the sector rows into an aggregate, producing the baseline
    /// model implied by summation.  Fails when the summed impact responses
    /// violate the unit normalization of the aggregate.
    pub fn collapse(&self) -> Result<SvmaModel> {
        let rows = self.psi.n_rows() - self.sector_count + 1;
        let m = self.psi.n_shocks();
        let mut coeffs = Vec::with_capacity(self.psi.h_max() + 1);
        for h in 0..=self.psi.h_max() {
            let psi_h = self.psi.coeff(h).expect("lag within range");
            let mut theta_h = DMatrix::zeros(rows, m);
            for s in 0..m {
                let mut agg = 0.0;
                for r in 0..self.sector_count {
                    agg += psi_h[(r, s)];
                }
                theta_h[(0, s)] = agg;
                for (out_row, in_row) in (self.sector_count..self.psi.n_rows()).enumerate() {
                    theta_h[(out_row + 1, s)] = psi_h[(in_row, s)];
                }
            }
            coeffs.push(theta_h);
        }
        SvmaModel::new(
            LagPolynomial::new(coeffs)?,
            self.shock_variances.clone(),
            self.distributions.clone(),
            self.sector_count,
        )
    }
}

/// Either model kind, as read from a model specification file.
#[derive(Debug, Clone)]
pub enum Model {
    Baseline(SvmaModel),
    Augmented(AugmentedSvmaModel),
}

impl Model {
    pub fn h_max(&self) -> usize {
        match self {
            Model::Baseline(m) => m.h_max(),
            Model::Augmented(m) => m.h_max(),
        }
    }

    pub fn n_shocks(&self) -> usize {
        match self {
            Model::Baseline(m) => m.n_shocks(),
            Model::Augmented(m) => m.n_shocks(),
        }
    }

    pub fn simulate(
        &self,
        specs: &[InstrumentSpec],
        t_len: usize,
        seed: u64,
    ) -> Result<crate::svma::Panel> {
        match self {
            Model::Baseline(m) => m.simulate(specs, t_len, seed),
            Model::Augmented(m) => m.simulate(specs, t_len, seed),
        }
    }
}

/// How an instrument is generated from the structural shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSpec {
    /// Loading on each of the `m` shocks.
    pub loadings: Vec<f64>,
    /// Variance of the independent measurement noise.
    pub noise_variance: f64,
    pub kind: InstrumentKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstrumentKind {
    /// Linear combination of shocks plus noise.
    Continuous,
    /// Indicator that the latent linear index exceeds its upper `p_z`
    /// quantile.
    Binary { p_z: f64 },
}

impl InstrumentSpec {
    pub fn continuous(loadings: Vec<f64>, noise_variance: f64) -> Self {
        Self {
            loadings,
            noise_variance,
            kind: InstrumentKind::Continuous,
        }
    }

    pub fn binary(loadings: Vec<f64>, noise_variance: f64, p_z: f64) -> Self {
        Self {
            loadings,
            noise_variance,
            kind: InstrumentKind::Binary { p_z },
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.loadings.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "instrument has {} loadings for {} shocks",
                self.loadings.len(),
                m
            )));
        }
        if !self.noise_variance.is_finite() || self.noise_variance < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "instrument noise variance must be nonnegative, got {}",
                self.noise_variance
            )));
        }
        if let InstrumentKind::Binary { p_z } = self.kind {
            if !(p_z > 0.0 && p_z < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "binary instrument probability must lie strictly between 0 and 1, got {p_z}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn two_point(hi: f64, p_hi: f64) -> ShockDistribution {
        // Zero-mean two-point distribution: takes `hi` with probability
        // `p_hi` and the balancing negative value otherwise.
        let lo = -hi * p_hi / (1.0 - p_hi);
        ShockDistribution::Discrete(vec![
            SupportPoint { value: hi, mass: p_hi },
            SupportPoint { value: lo, mass: 1.0 - p_hi },
        ])
    }

    fn two_point_variance(d: &ShockDistribution) -> f64 {
        match d {
            ShockDistribution::Discrete(ps) => {
                ps.iter().map(|p| p.mass * p.value * p.value).sum()
            }
            _ => unreachable!(),
        }
    }

    fn baseline(theta_y: [f64; 2]) -> SvmaModel {
        let theta = LagPolynomial::new(vec![DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 1.0, theta_y[0], theta_y[1]],
        )])
        .unwrap();
        SvmaModel::new(
            theta,
            vec![1.0, 1.0],
            vec![ShockDistribution::Gaussian, ShockDistribution::Gaussian],
            2,
        )
        .unwrap()
    }

    #[test]
    fn normalization_violation_reported_with_shock_index() {
        let theta = LagPolynomial::new(vec![DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 0.9, 0.3, 0.4],
        )])
        .unwrap();
        let err = SvmaModel::new(
            theta,
            vec![1.0, 1.0],
            vec![ShockDistribution::Gaussian, ShockDistribution::Gaussian],
            2,
        );
        match err {
            Err(Error::NormalizationViolation { shock, .. }) => assert_eq!(shock, 1),
            other => panic!("expected normalization violation, got {other:?}"),
        }
    }

    #[test]
    fn discrete_distribution_must_be_zero_mean() {
        let bad = ShockDistribution::Discrete(vec![
            SupportPoint { value: 1.0, mass: 0.5 },
            SupportPoint { value: 0.0, mass: 0.5 },
        ]);
        assert!(bad.validate(0.25, 0).is_err());
    }

    #[test]
    fn collapse_matches_manual_row_summation() {
        let psi = LagPolynomial::new(vec![
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.2, 0.0, 1.0, -0.1, 0.5, 0.3, 0.8]),
            DMatrix::from_row_slice(3, 3, &[0.4, 0.2, 0.0, 0.1, 0.5, 0.3, 0.2, 0.2, 0.1]),
        ])
        .unwrap();
        let aug = AugmentedSvmaModel::new(
            psi,
            vec![1.0, 2.0, 0.5],
            vec![
                ShockDistribution::Gaussian,
                ShockDistribution::Gaussian,
                ShockDistribution::Gaussian,
            ],
            2,
        )
        .unwrap();
        let collapsed = aug.collapse().unwrap();
        for h in 0..=1 {
            for s in 0..3 {
                let manual = aug.true_irf(h, 0, s) + aug.true_irf(h, 1, s);
                assert_relative_eq!(collapsed.true_irf(h, 0, s), manual, epsilon = 1e-15);
                assert_relative_eq!(
                    collapsed.true_irf(h, 1, s),
                    aug.true_irf(h, 2, s),
                    epsilon = 1e-15
                );
            }
        }
        // Summed sector impacts are (1, 1, 0.1): the aggregate normalization
        // holds for both composite shocks, so collapse succeeds.
        assert_eq!(collapsed.composite_count(), 2);
    }

    #[test]
    fn collapse_rejects_non_unit_aggregate_impact() {
        let psi = LagPolynomial::new(vec![DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.4, 0.0, 1.0, 0.5, 0.3],
        )])
        .unwrap();
        let aug = AugmentedSvmaModel::new(
            psi,
            vec![1.0, 1.0],
            vec![ShockDistribution::Gaussian, ShockDistribution::Gaussian],
            2,
        )
        .unwrap();
        match aug.collapse() {
            Err(Error::NormalizationViolation { shock, .. }) => assert_eq!(shock, 1),
            other => panic!("expected normalization violation, got {other:?}"),
        }
    }

    #[test]
    fn collapse_of_embedding_is_identity() {
        let model = baseline([0.7, -0.2]);
        let round_trip = model.embed_augmented().collapse().unwrap();
        for h in 0..=model.h_max() {
            for r in 0..2 {
                for s in 0..2 {
                    assert_eq!(round_trip.true_irf(h, r, s), model.true_irf(h, r, s));
                }
            }
        }
    }

    #[test]
    fn composite_average_equal_weights_for_iid_shocks() {
        // Symmetric two-point shocks at +-0.5; the conditioning event is
        // both shocks high, so each contributes 1/2.
        let d = two_point(0.5, 0.5);
        let v = two_point_variance(&d);
        let theta = LagPolynomial::new(vec![DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 1.0, 0.9, 0.3],
        )])
        .unwrap();
        let model = SvmaModel::new(theta, vec![v, v], vec![d.clone(), d], 2).unwrap();
        let got = model.composite_average_irf(0).unwrap();
        assert_relative_eq!(got, 0.5 * 0.9 + 0.5 * 0.3, epsilon = 1e-12);
    }

    #[test]
    fn composite_average_matches_enumeration_oracle() {
        // Asymmetric supports engineered so the unit-sum event mixes
        // (0.75, 0.25) with conditional weights 0.75 and 0.25.
        let d1 = two_point(0.75, 0.25);
        let d2 = two_point(0.25, 0.75);
        let (v1, v2) = (two_point_variance(&d1), two_point_variance(&d2));
        let theta = LagPolynomial::new(vec![DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 1.0, 1.4, -0.6],
        )])
        .unwrap();
        let model = SvmaModel::new(theta, vec![v1, v2], vec![d1, d2], 2).unwrap();
        let got = model.composite_average_irf(0).unwrap();
        assert_relative_eq!(got, 0.75 * 1.4 + 0.25 * (-0.6), epsilon = 1e-12);
    }

    #[test]
    fn composite_average_undefined_event_errors() {
        // Both shocks live on +-0.25 and 0.1/-0.9 style supports whose sums
        // never hit one.
        let d = two_point(0.25, 0.5);
        let v = two_point_variance(&d);
        let theta = LagPolynomial::new(vec![DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 1.0, 0.9, 0.3],
        )])
        .unwrap();
        let model = SvmaModel::new(theta, vec![v, v], vec![d.clone(), d], 2).unwrap();
        assert!(matches!(
            model.composite_average_irf(0),
            Err(Error::UndefinedEvent)
        ));
    }

    #[test]
    fn composite_average_requires_discrete_shocks() {
        let model = baseline([0.9, 0.3]);
        assert!(model.composite_average_irf(0).is_err());
    }

    #[test]
    fn binary_instrument_probability_validated() {
        let spec = InstrumentSpec::binary(vec![1.0, 0.0], 0.5, 1.2);
        assert!(spec.validate(2).is_err());
    }
}
