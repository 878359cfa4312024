use std::fmt::Write as _;
use std::path::Path;

use super::{format_value, Dataset};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Loads a UCR-style file: one series per line, a class label followed by
/// tab-separated values. Each series is placed on a uniform grid over
/// `[-1, 1]` and min-max normalized; `NaN` cells become missing samples.
pub fn load_ucr_tsv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "dataset".to_string());
    parse_ucr_tsv(&text, &name, path)
}

pub fn parse_ucr_tsv(text: &str, name: &str, path: &Path) -> Result<Dataset> {
    let mut series = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (row, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            row,
            message,
        };
        if cells.len() < 3 {
            return Err(parse_err(format!(
                "expected a label and at least 2 values, found {} cells",
                cells.len()
            )));
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(parse_err(format!("ragged row: {} cells, expected {w}", cells.len())));
            }
            _ => {}
        }
        let values = cells[1..]
            .iter()
            .enumerate()
            .map(|(col, c)| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("column {}: not a number: {c:?}", col + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| v.is_infinite()) {
            return Err(parse_err("infinite value".to_string()));
        }
        if values.iter().filter(|v| v.is_finite()).count() < 2 {
            return Err(parse_err("fewer than 2 observed values".to_string()));
        }
        labels.push(cells[0].trim().to_string());
        series.push(TimeSeries::from_raw(vec![values]).map_err(|e| parse_err(e.to_string()))?);
    }
    Dataset::new(name, series, Some(labels))
}

/// Text form of [`save_ucr_tsv`]. Values are written in raw units; series
/// without labels get label `0`.
pub fn write_ucr_tsv(dataset: &Dataset) -> Result<String> {
    if dataset.channels().unwrap_or(1) != 1 {
        return Err(Error::invalid("the UCR layout holds univariate series only"));
    }
    let mut out = String::new();
    for (i, s) in dataset.series.iter().enumerate() {
        let label = dataset.labels.as_ref().map_or("0", |l| l[i].as_str());
        out.push_str(label);
        for v in &s.denormalized()[0] {
            write!(out, "\t{}", format_value(*v)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn save_ucr_tsv(dataset: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, write_ucr_tsv(dataset)?).map_err(|e| Error::io(path, e))
}
