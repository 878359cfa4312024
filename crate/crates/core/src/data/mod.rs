//! Datasets: file formats, synthetic corpora and run configuration.

mod config;
mod csv;
mod synth;
mod ucr;

pub use config::RunConfig;
pub use csv::{load_csv_multivariate, save_csv_multivariate, write_imputed_csv};
pub use synth::{synth_corpus, Preset};
pub use ucr::{load_ucr_tsv, parse_ucr_tsv, save_ucr_tsv, write_ucr_tsv};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// A named collection of series sharing one channel count.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub series: Vec<TimeSeries>,
    /// Class ids as written in the source file, carried through untouched.
    pub labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, series: Vec<TimeSeries>, labels: Option<Vec<String>>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("dataset name must not be empty"));
        }
        if let Some(first) = series.first() {
            if series.iter().any(|s| s.channels() != first.channels()) {
                return Err(Error::invalid("all series in a dataset must share a channel count"));
            }
        }
        if let Some(l) = &labels {
            if l.len() != series.len() {
                return Err(Error::invalid("one label per series required"));
            }
        }
        Ok(Dataset { name, series, labels })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn channels(&self) -> Option<usize> {
        self.series.first().map(TimeSeries::channels)
    }

    /// Length shared by every series, if there is one.
    pub fn common_len(&self) -> Option<usize> {
        let n = self.series.first()?.len();
        self.series.iter().all(|s| s.len() == n).then_some(n)
    }

    /// Keeps at most `cap` series (seeded sample, original order kept).
    pub fn capped(&self, cap: usize, seed: u64) -> Dataset {
        let idx = crate::inr::sample_indices(self.len(), cap, seed);
        Dataset {
            name: self.name.clone(),
            series: idx.iter().map(|&i| self.series[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i].clone()).collect()),
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`; NaN for gaps.
pub(crate) fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}
