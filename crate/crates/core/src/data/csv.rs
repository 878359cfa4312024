//! Comma-separated multivariate layouts.
//!
//! * Wide: one series per row, `channels × N` values, channel-major
//!   (all samples of channel 0, then channel 1, ...).
//! * Long: a header whose first cell is `series_id`, then one row per time
//!   step holding the series id and one value per channel. Rows of a series
//!   must be contiguous.

use std::fmt::Write as _;
use std::path::Path;

use super::{format_value, Dataset};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub fn load_csv_multivariate(path: &Path, channels: usize) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "dataset".to_string());
    parse_csv(&text, &name, path, channels)
}

fn parse_csv(text: &str, name: &str, path: &Path, channels: usize) -> Result<Dataset> {
    if channels == 0 {
        return Err(Error::invalid("channel count must be positive"));
    }
    let rows: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i, l.trim_end_matches('\r').split(',').map(str::trim).collect()))
        .collect();
    let err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let num = |row: usize, col: usize, cell: &str| {
        cell.parse::<f64>()
            .map_err(|_| err(row, format!("column {col}: not a number: {cell:?}")))
    };

    let is_long = rows.first().is_some_and(|(_, cells)| cells[0] == "series_id");
    let mut series = Vec::new();
    let mut labels = Vec::new();

    if is_long {
        let (hrow, header) = &rows[0];
        if header.len() != channels + 1 {
            return Err(err(
                *hrow,
                format!("header has {} value columns, expected {channels}", header.len() - 1),
            ));
        }
        let mut current: Option<(String, Vec<Vec<f64>>)> = None;
        let mut seen = std::collections::HashSet::new();
        let mut flush = |cur: Option<(String, Vec<Vec<f64>>)>, row: usize| -> Result<()> {
            if let Some((id, raw)) = cur {
                let s = TimeSeries::from_raw(raw).map_err(|e| err(row, format!("series {id}: {e}")))?;
                labels.push(id);
                series.push(s);
            }
            Ok(())
        };
        for (row, cells) in &rows[1..] {
            if cells.len() != channels + 1 {
                return Err(err(*row, format!("{} cells, expected {}", cells.len(), channels + 1)));
            }
            let id = cells[0].to_string();
            if current.as_ref().map(|(c, _)| c != &id).unwrap_or(true) {
                if !seen.insert(id.clone()) {
                    return Err(err(*row, format!("rows of series {id} are not contiguous")));
                }
                flush(current.take(), *row)?;
                current = Some((id, vec![Vec::new(); channels]));
            }
            let (_, raw) = current.as_mut().unwrap();
            for c in 0..channels {
                raw[c].push(num(*row, c + 1, cells[c + 1])?);
            }
        }
        let last = rows.last().map_or(0, |(r, _)| *r);
        flush(current.take(), last)?;
    } else {
        for (row, cells) in &rows {
            if cells.len() % channels != 0 {
                return Err(err(
                    *row,
                    format!("{} values do not split into {channels} channels", cells.len()),
                ));
            }
            let n = cells.len() / channels;
            let mut raw = Vec::with_capacity(channels);
            for c in 0..channels {
                raw.push(
                    (0..n)
                        .map(|i| num(*row, c * n + i, cells[c * n + i]))
                        .collect::<Result<Vec<f64>>>()?,
                );
            }
            labels.push(series.len().to_string());
            series.push(TimeSeries::from_raw(raw).map_err(|e| err(*row, e.to_string()))?);
        }
    }
    Dataset::new(name, series, Some(labels))
}

/// Writes the long layout in raw units.
pub fn save_csv_multivariate(dataset: &Dataset, path: &Path) -> Result<()> {
    let channels = dataset.channels().unwrap_or(1);
    let mut out = String::from("series_id");
    for c in 0..channels {
        write!(out, ",c{c}").unwrap();
    }
    out.push('\n');
    for (i, s) in dataset.series.iter().enumerate() {
        let id = dataset.labels.as_ref().map_or_else(|| i.to_string(), |l| l[i].clone());
        let raw = s.denormalized();
        for t in 0..s.len() {
            out.push_str(&id);
            for channel in &raw {
                write!(out, ",{}", format_value(channel[t])).unwrap();
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// `t, c0, .., observed` rows for an imputed series, values in raw units.
/// `observed` marks which samples were available to the imputer.
pub fn write_imputed_csv(series: &TimeSeries, observed: &[bool]) -> Result<String> {
    if observed.len() != series.len() {
        return Err(Error::invalid("observed flags must match series length"));
    }
    let mut out = String::from("t");
    for c in 0..series.channels() {
        write!(out, ",c{c}").unwrap();
    }
    out.push_str(",observed\n");
    let raw = series.denormalized();
    for i in 0..series.len() {
        write!(out, "{}", format_value(series.t()[i])).unwrap();
        for channel in &raw {
            write!(out, ",{}", format_value(channel[i])).unwrap();
        }
        writeln!(out, ",{}", u8::from(observed[i])).unwrap();
    }
    Ok(out)
}
