//! Matrix lag polynomial truncated at a finite horizon.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Coefficients of a finite moving-average polynomial.
///
/// `coeffs[h]` is the response matrix at lag `h`; entry `(r, s)` is the
/// response of row `r` to a unit innovation in shock `s`, `h` periods after
/// impact.  Responses beyond the truncation horizon are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPolynomial {
    coeffs: Vec<DMatrix<f64>>,
}

impl LagPolynomial {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "lag polynomial needs at least the impact matrix".into(),
            ));
        }
        let (rows, cols) = (coeffs[0].nrows(), coeffs[0].ncols());
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                "lag coefficient matrices must be non-empty".into(),
            ));
        }
        for (h, c) in coeffs.iter().enumerate() {
            if c.nrows() != rows || c.ncols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "lag {} has shape {}x{}, expected {}x{}",
                    h,
                    c.nrows(),
                    c.ncols(),
                    rows,
                    cols
                )));
            }
        }
        Ok(Self { coeffs })
    }

    pub fn n_rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn n_shocks(&self) -> usize {
        self.coeffs[0].ncols()
    }

    /// Truncation horizon; lags `0..=h_max` carry coefficients.
    pub fn h_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, h: usize) -> Option<&DMatrix<f64>> {
        self.coeffs.get(h)
    }

    /// Response at lag `h`, zero beyond the truncation horizon.
    pub fn at(&self, h: usize, row: usize, shock: usize) -> f64 {
        match self.coeffs.get(h) {
            Some(c) => c[(row, shock)],
            None => 0.0,
        }
    }

    /// Partial sum of responses through lag `h`.
    pub fn cumulative_at(&self, h: usize, row: usize, shock: usize) -> f64 {
        (0..=h.min(self.h_max())).map(|j| self.at(j, row, shock)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly() -> LagPolynomial {
        LagPolynomial::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.3, 0.6]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, 0.2]),
        ])
        .unwrap()
    }

    #[test]
    fn beyond_truncation_is_zero() {
        let p = poly();
        assert_eq!(p.at(3, 0, 0), 0.0);
        assert_eq!(p.at(17, 1, 1), 0.0);
    }

    #[test]
    fn cumulative_matches_brute_force_sum() {
        let p = poly();
        for h in 0..6 {
            for r in 0..2 {
                for s in 0..2 {
                    let brute: f64 = (0..=h).map(|j| p.at(j, r, s)).sum();
                    assert_eq!(p.cumulative_at(h, r, s), brute);
                }
            }
        }
    }

    #[test]
    fn mismatched_lag_shapes_rejected() {
        let err = LagPolynomial::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[0.4, 0.1]),
        ]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn empty_polynomial_rejected() {
        assert!(LagPolynomial::new(vec![]).is_err());
    }
}
