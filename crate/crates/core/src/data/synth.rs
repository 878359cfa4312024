use std::f64::consts::PI;
use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::series::TimeSeries;

/// Built-in synthetic corpora.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Three sines at fixed frequencies (3, 7 and 13 cycles per series)
    /// with random amplitudes and phases. Low spectral variance.
    Multisine,
    /// Amplitude-modulated linear chirps.
    AmChirp,
    /// Two sines per series at random frequencies. High spectral variance.
    SpectralSpread,
}

pub const MULTISINE_CYCLES: [f64; 3] = [3.0, 7.0, 13.0];

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Multisine, Preset::AmChirp, Preset::SpectralSpread];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Multisine => "multisine",
            Preset::AmChirp => "am_chirp",
            Preset::SpectralSpread => "spectral_spread",
        }
    }

    fn sample(self, r: &mut rng::Rng, length: usize) -> Vec<f64> {
        let u = |i: usize| i as f64 / length as f64;
        match self {
            Preset::Multisine => {
                let comps: Vec<(f64, f64, f64)> = MULTISINE_CYCLES
                    .iter()
                    .map(|&f| (f, r.gen_range(0.5..1.0), r.gen_range(0.0..2.0 * PI)))
                    .collect();
                (0..length)
                    .map(|i| comps.iter().map(|&(f, a, p)| a * (2.0 * PI * f * u(i) + p).sin()).sum())
                    .collect()
            }
            Preset::SpectralSpread => {
                let comps: Vec<(f64, f64, f64)> = (0..2)
                    .map(|_| (r.gen_range(1.0..20.0), r.gen_range(0.3..1.0), r.gen_range(0.0..2.0 * PI)))
                    .collect();
                (0..length)
                    .map(|i| comps.iter().map(|&(f, a, p)| a * (2.0 * PI * f * u(i) + p).sin()).sum())
                    .collect()
            }
            Preset::AmChirp => {
                let f0 = r.gen_range(2.0..4.0);
                let f1 = r.gen_range(8.0..16.0);
                let m = r.gen_range(0.3..0.6);
                let fm = r.gen_range(1.0..3.0);
                let pm = r.gen_range(0.0..2.0 * PI);
                let p = r.gen_range(0.0..2.0 * PI);
                (0..length)
                    .map(|i| {
                        let x = u(i);
                        let envelope = 1.0 + m * (2.0 * PI * fm * x + pm).sin();
                        envelope * (2.0 * PI * (f0 * x + 0.5 * (f1 - f0) * x * x) + p).sin()
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::invalid(format!("unknown preset {s:?} (multisine, am_chirp, spectral_spread)")))
    }
}

/// `n` univariate series of `length` samples each; series `i` depends only
/// on `(seed, i)`.
pub fn synth_corpus(preset: Preset, n: usize, length: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::invalid("a synthetic corpus needs at least 2 series"));
    }
    if length < 16 {
        return Err(Error::invalid("synthetic series need at least 16 samples"));
    }
    let series = (0..n)
        .map(|i| {
            let mut r = rng::seeded(rng::derive(seed, i as u64));
            TimeSeries::from_raw(vec![preset.sample(&mut r, length)])
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(preset.name(), series, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::rfft;

    #[test]
    fn same_seed_same_corpus() {
        for p in Preset::ALL {
            assert_eq!(synth_corpus(p, 3, 32, 9).unwrap(), synth_corpus(p, 3, 32, 9).unwrap());
            assert_ne!(synth_corpus(p, 3, 32, 9).unwrap(), synth_corpus(p, 3, 32, 10).unwrap());
        }
    }

    #[test]
    fn rejects_tiny_requests() {
        assert!(synth_corpus(Preset::Multisine, 1, 64, 0).is_err());
        assert!(synth_corpus(Preset::Multisine, 4, 15, 0).is_err());
    }

    #[test]
    fn multisine_energy_sits_in_three_bins() {
        let d = synth_corpus(Preset::Multisine, 4, 128, 1).unwrap();
        for s in &d.series {
            let mags = rfft(s.channel(0)).unwrap().magnitudes();
            let total: f64 = mags[1..].iter().map(|m| m * m).sum();
            let peaks: f64 = [3, 7, 13].iter().map(|&k| mags[k] * mags[k]).sum();
            assert!(peaks / total > 1.0 - 1e-9, "{}", peaks / total);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("am-chirp".parse::<Preset>().unwrap(), Preset::AmChirp);
        assert!("noise".parse::<Preset>().is_err());
    }
}
