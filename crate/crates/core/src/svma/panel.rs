//! Observed data container shared by the simulator, loaders, and estimators.

use crate::error::{Error, Result};

/// Tolerance for the sector-sum identity `x = sum of sectors`.
pub const SECTOR_SUM_TOL: f64 = 1e-9;

/// Column labels for a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelNames {
    pub y: String,
    pub x: String,
    pub sectors: Vec<String>,
    pub instruments: Vec<String>,
}

impl PanelNames {
    pub fn default_for(sectors: usize, instruments: usize) -> Self {
        Self {
            y: "y".into(),
            x: "x".into(),
            sectors: (1..=sectors).map(|s| format!("x_{s}")).collect(),
            instruments: (1..=instruments).map(|j| format!("z_{j}")).collect(),
        }
    }
}

/// A fixed-length time series panel: outcome, aggregate regressor, optional
/// sectoral split of the regressor, and one or more instruments.
#[derive(Debug, Clone)]
pub struct Panel {
    y: Vec<f64>,
    x: Vec<f64>,
    sectors: Vec<Vec<f64>>,
    instruments: Vec<Vec<f64>>,
    names: PanelNames,
}

impl Panel {
    pub fn new(
        y: Vec<f64>,
        x: Vec<f64>,
        sectors: Vec<Vec<f64>>,
        instruments: Vec<Vec<f64>>,
        names: Option<PanelNames>,
    ) -> Result<Self> {
        let t_len = y.len();
        if t_len == 0 {
            return Err(Error::EmptyInput("panel has no observations".into()));
        }
        if instruments.is_empty() {
            return Err(Error::EmptyInput("panel has no instrument columns".into()));
        }
        if x.len() != t_len {
            return Err(Error::DimensionMismatch(format!(
                "x has {} observations, y has {}",
                x.len(),
                t_len
            )));
        }
        for (s, col) in sectors.iter().enumerate() {
            if col.len() != t_len {
                return Err(Error::DimensionMismatch(format!(
                    "sector {} has {} observations, expected {}",
                    s,
                    col.len(),
                    t_len
                )));
            }
        }
        for (j, col) in instruments.iter().enumerate() {
            if col.len() != t_len {
                return Err(Error::DimensionMismatch(format!(
                    "instrument {} has {} observations, expected {}",
                    j,
                    col.len(),
                    t_len
                )));
            }
        }
        if !sectors.is_empty() {
            for t in 0..t_len {
                let sum: f64 = sectors.iter().map(|col| col[t]).sum();
                if (sum - x[t]).abs() > SECTOR_SUM_TOL * x[t].abs().max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sector columns sum to {} at t={}, but x is {}",
                        sum, t, x[t]
                    )));
                }
            }
        }
        let names = match names {
            Some(n) => {
                if n.sectors.len() != sectors.len() || n.instruments.len() != instruments.len() {
                    return Err(Error::DimensionMismatch(
                        "panel names do not match column counts".into(),
                    ));
                }
                n
            }
            None => PanelNames::default_for(sectors.len(), instruments.len()),
        };
        Ok(Self {
            y,
            x,
            sectors,
            instruments,
            names,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn sector(&self, s: usize) -> &[f64] {
        &self.sectors[s]
    }

    pub fn n_instruments(&self) -> usize {
        self.instruments.len()
    }

    pub fn instrument(&self, j: usize) -> &[f64] {
        &self.instruments[j]
    }

    pub fn names(&self) -> &PanelNames {
        &self.names
    }

    /// Copy with one instrument column replaced (used to build duplicated
    /// or rescaled instrument designs in tests and diagnostics).
    pub fn with_instrument_column(&self, j: usize, column: Vec<f64>) -> Result<Self> {
        if j >= self.instruments.len() {
            return Err(Error::InvalidArgument(format!(
                "instrument index {} out of range ({} instruments)",
                j,
                self.instruments.len()
            )));
        }
        let mut out = self.clone();
        if column.len() != out.len() {
            return Err(Error::DimensionMismatch(format!(
                "replacement column has {} observations, expected {}",
                column.len(),
                out.len()
            )));
        }
        out.instruments[j] = column;
        Ok(out)
    }

    /// Copy restricted to an instrument subset, preserving order.
    pub fn with_instrument_subset(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyInput("instrument subset is empty".into()));
        }
        let mut instruments = Vec::with_capacity(keep.len());
        let mut names = Vec::with_capacity(keep.len());
        for &j in keep {
            if j >= self.instruments.len() {
                return Err(Error::InvalidArgument(format!(
                    "instrument index {} out of range ({} instruments)",
                    j,
                    self.instruments.len()
                )));
            }
            instruments.push(self.instruments[j].clone());
            names.push(self.names.instruments[j].clone());
        }
        let mut out = self.clone();
        out.instruments = instruments;
        out.names.instruments = names;
        Ok(out)
    }
}
