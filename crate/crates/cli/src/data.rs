//! CSV dataset loading and writing.
//!
//! A dataset is a plain CSV file with one row per period and named columns:
//! an outcome, an aggregate regressor, optional sector columns that sum to
//! the aggregate, and one or more instrument columns.  Lines starting with
//! `#` are skipped, so files written by this tool (which carry a metadata
//! preamble) reload unchanged.

use std::io::Write;

use lpiv_core::svma::{Panel, PanelNames};
use lpiv_core::{Error, Result};

use crate::table::{fmt_float, Metadata};

/// Column selection and preprocessing for [`load_csv`].
#[derive(Debug, Clone)]
pub struct DatasetSchema {
    pub y_col: String,
    pub x_col: String,
    /// Sector columns in order; `None` selects headers `x_1, x_2, ...`.
    pub sector_cols: Option<Vec<String>>,
    /// Instrument columns in order; `None` selects headers `z_1, z_2, ...`.
    pub instrument_cols: Option<Vec<String>>,
    /// Subtract each column's sample mean after loading.
    pub demean: bool,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            y_col: "y".into(),
            x_col: "x".into(),
            sector_cols: None,
            instrument_cols: None,
            demean: true,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

fn numbered_suffix(name: &str, prefix: &str) -> bool {
    name.strip_prefix(prefix)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn find_column(headers: &[String], name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::Schema(format!(
            "column '{}' not found; headers are: {}",
            name,
            headers.join(", ")
        ))
    })
}

/// Parses `bytes` as CSV and assembles a panel.
///
/// Rows with a missing value (empty, `NA`, or `NaN`, case-insensitive) in
/// any selected column are dropped whole.  Unselected columns are ignored.
/// Parse failures report the 1-based data row (header and `#` lines not
/// counted) and the column name.
pub fn load_csv(bytes: &[u8], schema: &DatasetSchema) -> Result<Panel> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read csv header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();

    let y_idx = find_column(&headers, &schema.y_col)?;
    let x_idx = find_column(&headers, &schema.x_col)?;
    let sector_names: Vec<String> = match &schema.sector_cols {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .filter(|h| numbered_suffix(h, "x_"))
            .cloned()
            .collect(),
    };
    let instrument_names: Vec<String> = match &schema.instrument_cols {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .filter(|h| numbered_suffix(h, "z_"))
            .cloned()
            .collect(),
    };
    if instrument_names.is_empty() {
        return Err(Error::Schema(format!(
            "no instrument columns; pass --instrument-cols or name them z_1, z_2, ...; headers are: {}",
            headers.join(", ")
        )));
    }
    let sector_idx: Vec<usize> = sector_names
        .iter()
        .map(|n| find_column(&headers, n))
        .collect::<Result<_>>()?;
    let instrument_idx: Vec<usize> = instrument_names
        .iter()
        .map(|n| find_column(&headers, n))
        .collect::<Result<_>>()?;

    let mut used: Vec<usize> = [y_idx, x_idx]
        .into_iter()
        .chain(sector_idx.iter().copied())
        .chain(instrument_idx.iter().copied())
        .collect();
    used.sort_unstable();
    if used.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Schema(
            "the same column is selected for two roles".into(),
        ));
    }

    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut sectors: Vec<Vec<f64>> = vec![Vec::new(); sector_idx.len()];
    let mut instruments: Vec<Vec<f64>> = vec![Vec::new(); instrument_idx.len()];
    for (row_0, record) in reader.records().enumerate() {
        let row = row_0 + 1;
        let record = record.map_err(|e| Error::Schema(format!("malformed csv record: {e}")))?;
        let cell = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::Parse {
                row,
                column: headers[idx].clone(),
                message: format!("record has only {} fields", record.len()),
            })
        };
        let all_idx = [y_idx, x_idx]
            .into_iter()
            .chain(sector_idx.iter().copied())
            .chain(instrument_idx.iter().copied());
        let mut cells = Vec::with_capacity(2 + sector_idx.len() + instrument_idx.len());
        let mut dropped = false;
        for idx in all_idx {
            let text = cell(idx)?;
            if is_missing(text) {
                dropped = true;
                break;
            }
            cells.push((idx, text));
        }
        if dropped {
            continue;
        }
        let mut values = cells.iter().map(|&(idx, text)| {
            text.parse::<f64>().map_err(|e| Error::Parse {
                row,
                column: headers[idx].clone(),
                message: e.to_string(),
            })
        });
        let mut next = || values.next().expect("cell count fixed above");
        y.push(next()?);
        x.push(next()?);
        for col in sectors.iter_mut() {
            col.push(next()?);
        }
        for col in instruments.iter_mut() {
            col.push(next()?);
        }
    }

    if schema.demean {
        for col in [&mut y, &mut x]
            .into_iter()
            .chain(sectors.iter_mut())
            .chain(instruments.iter_mut())
        {
            let mean = col.iter().sum::<f64>() / col.len().max(1) as f64;
            for v in col.iter_mut() {
                *v -= mean;
            }
        }
    }

    let names = PanelNames {
        y: schema.y_col.clone(),
        x: schema.x_col.clone(),
        sectors: sector_names,
        instruments: instrument_names,
    };
    Panel::new(y, x, sectors, instruments, Some(names))
}

/// Writes the panel as CSV, optionally preceded by a `#` metadata preamble.
/// Floats use the shortest representation that reloads exactly.
pub fn write_panel_csv<W: Write>(mut w: W, panel: &Panel, meta: Option<&Metadata>) -> Result<()> {
    if let Some(meta) = meta {
        w.write_all(meta.preamble().as_bytes())?;
    }
    let names = panel.names();
    let mut writer = csv::Writer::from_writer(w);
    let header: Vec<&str> = std::iter::once(names.y.as_str())
        .chain(std::iter::once(names.x.as_str()))
        .chain(names.sectors.iter().map(String::as_str))
        .chain(names.instruments.iter().map(String::as_str))
        .collect();
    writer
        .write_record(&header)
        .map_err(|e| Error::Schema(format!("cannot write csv: {e}")))?;
    for t in 0..panel.len() {
        let mut record = Vec::with_capacity(header.len());
        record.push(fmt_float(panel.y()[t]));
        record.push(fmt_float(panel.x()[t]));
        for s in 0..panel.n_sectors() {
            record.push(fmt_float(panel.sector(s)[t]));
        }
        for j in 0..panel.n_instruments() {
            record.push(fmt_float(panel.instrument(j)[t]));
        }
        writer
            .write_record(&record)
            .map_err(|e| Error::Schema(format!("cannot write csv: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Schema(format!("cannot flush csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_schema() -> DatasetSchema {
        DatasetSchema {
            demean: false,
            ..DatasetSchema::default()
        }
    }

    #[test]
    fn loads_default_columns_in_header_order() {
        let text = "y,x,x_1,x_2,z_1,z_2\n\
                    1.5,2.0,0.5,1.5,0.1,0.2\n\
                    -0.5,1.0,0.25,0.75,-0.3,0.4\n";
        let panel = load_csv(text.as_bytes(), &raw_schema()).unwrap();
        assert_eq!(panel.len(), 2);
        assert_eq!(panel.n_sectors(), 2);
        assert_eq!(panel.n_instruments(), 2);
        assert_eq!(panel.y(), &[1.5, -0.5]);
        assert_eq!(panel.sector(1), &[1.5, 0.75]);
        assert_eq!(panel.instrument(0), &[0.1, -0.3]);
        assert_eq!(panel.names().instruments, vec!["z_1", "z_2"]);
    }

    #[test]
    fn listwise_deletion_drops_rows_with_any_missing_cell() {
        let text = "y,x,z_1,note\n\
                    1.0,2.0,0.5,keep\n\
                    ,2.0,0.5,missing y\n\
                    3.0,NA,0.5,missing x\n\
                    4.0,5.0,nan,missing z\n\
                    6.0,7.0,0.25,keep\n";
        let panel = load_csv(text.as_bytes(), &raw_schema()).unwrap();
        assert_eq!(panel.len(), 2);
        assert_eq!(panel.y(), &[1.0, 6.0]);
        assert_eq!(panel.x(), &[2.0, 7.0]);
        assert_eq!(panel.instrument(0), &[0.5, 0.25]);
    }

    // Missing tokens in ignored columns must not drop the row.
    #[test]
    fn unselected_columns_are_ignored_entirely() {
        let text = "y,x,z_1,junk\n\
                    1.0,2.0,0.5,NA\n\
                    3.0,4.0,0.25,not-a-number\n";
        let panel = load_csv(text.as_bytes(), &raw_schema()).unwrap();
        assert_eq!(panel.len(), 2);
    }

    #[test]
    fn parse_errors_carry_row_and_column() {
        let text = "y,x,z_1\n1.0,2.0,0.5\n1.0,oops,0.5\n";
        let err = load_csv(text.as_bytes(), &raw_schema()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "x");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn missing_required_column_is_a_schema_error() {
        let text = "y,x\n1.0,2.0\n";
        match load_csv(text.as_bytes(), &raw_schema()).unwrap_err() {
            Error::Schema(msg) => assert!(msg.contains("no instrument columns"), "{msg}"),
            other => panic!("expected schema error, got {other}"),
        }
        let text = "outcome,x,z_1\n1.0,2.0,0.5\n";
        match load_csv(text.as_bytes(), &raw_schema()).unwrap_err() {
            Error::Schema(msg) => assert!(msg.contains("'y' not found"), "{msg}"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn duplicate_role_selection_is_rejected() {
        let schema = DatasetSchema {
            instrument_cols: Some(vec!["x".into()]),
            demean: false,
            ..DatasetSchema::default()
        };
        let text = "y,x\n1.0,2.0\n";
        match load_csv(text.as_bytes(), &schema).unwrap_err() {
            Error::Schema(msg) => assert!(msg.contains("two roles"), "{msg}"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn custom_column_names_map_to_panel_roles() {
        let schema = DatasetSchema {
            y_col: "gdp".into(),
            x_col: "rate".into(),
            instrument_cols: Some(vec!["shock".into()]),
            sector_cols: None,
            demean: false,
        };
        let text = "gdp,rate,shock\n1.0,2.0,0.5\n3.0,4.0,0.25\n";
        let panel = load_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(panel.names().y, "gdp");
        assert_eq!(panel.names().instruments, vec!["shock"]);
        assert_eq!(panel.x(), &[2.0, 4.0]);
        // No x_<n> headers exist, so sector detection finds nothing.
        assert_eq!(panel.n_sectors(), 0);
    }

    #[test]
    fn demeaning_centers_every_selected_column() {
        let text = "y,x,x_1,x_2,z_1\n\
                    1.0,4.0,1.0,3.0,0.5\n\
                    2.0,6.0,2.5,3.5,0.1\n\
                    3.0,8.0,4.0,4.0,0.3\n";
        let schema = DatasetSchema::default();
        let panel = load_csv(text.as_bytes(), &schema).unwrap();
        for col in [panel.y(), panel.x(), panel.sector(0), panel.instrument(0)] {
            let mean: f64 = col.iter().sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-12, "column mean {mean} after demeaning");
        }
        // Centering each sector and the aggregate preserves the sum identity,
        // so Panel construction above already validated it.
        assert_eq!(panel.x()[0], -2.0);
    }

    #[test]
    fn round_trip_is_exact_including_preamble() {
        let awkward = vec![1.0 / 3.0, -2.5e-9, 12345.678901234567, 0.1];
        let x: Vec<f64> = awkward.iter().map(|v| v * 2.0).collect();
        let halves: Vec<f64> = x.iter().map(|v| v / 2.0).collect();
        let panel = Panel::new(
            awkward.clone(),
            x.clone(),
            vec![halves.clone(), halves.clone()],
            vec![awkward.iter().map(|v| -v).collect()],
            None,
        )
        .unwrap();
        let meta = Metadata {
            command: "lpiv simulate --model m.json".into(),
            config_sha256: "feed".into(),
        };
        let mut buf = Vec::new();
        write_panel_csv(&mut buf, &panel, Some(&meta)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# command: "));

        let reloaded = load_csv(&buf, &raw_schema()).unwrap();
        assert_eq!(reloaded.len(), panel.len());
        assert_eq!(reloaded.y(), panel.y());
        assert_eq!(reloaded.x(), panel.x());
        assert_eq!(reloaded.sector(0), panel.sector(0));
        assert_eq!(reloaded.sector(1), panel.sector(1));
        assert_eq!(reloaded.instrument(0), panel.instrument(0));
        assert_eq!(reloaded.names(), panel.names());
    }
}
