use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine map between raw values and the normalized `[-1, 1]` range:
/// `raw = offset + gain * normalized`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelScale {
    pub offset: f64,
    pub gain: f64,
}

impl ChannelScale {
    pub const IDENTITY: ChannelScale = ChannelScale {
        offset: 0.0,
        gain: 1.0,
    };

    /// Min-max fit over the finite entries of `raw`. A constant channel
    /// keeps unit gain and uses the constant as offset.
    pub fn fit(raw: &[f64]) -> Self {
        let (lo, hi) = raw
            .iter()
            .filter(|x| x.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if !lo.is_finite() {
            return ChannelScale::IDENTITY;
        }
        if hi > lo {
            ChannelScale {
                offset: 0.5 * (hi + lo),
                gain: 0.5 * (hi - lo),
            }
        } else {
            ChannelScale { offset: lo, gain: 1.0 }
        }
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.gain
    }

    pub fn denormalize(&self, value: f64) -> f64 {
        self.offset + self.gain * value
    }

    pub fn lerp(&self, other: &ChannelScale, alpha: f64) -> ChannelScale {
        ChannelScale {
            offset: (1.0 - alpha) * self.offset + alpha * other.offset,
            gain: (1.0 - alpha) * self.gain + alpha * other.gain,
        }
    }
}

/// `n` equally spaced points covering `[-1, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One (possibly multivariate) series on a time grid inside `[-1, 1]`.
///
/// `values` holds normalized samples, one vector per channel. Entries at
/// unobserved positions (mask `false`) carry no information and are stored
/// as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    t: Vec<f64>,
    values: Vec<Vec<f64>>,
    mask: Option<Vec<bool>>,
    scale: Vec<ChannelScale>,
}

impl TimeSeries {
    pub fn new(
        t: Vec<f64>,
        values: Vec<Vec<f64>>,
        mask: Option<Vec<bool>>,
        scale: Vec<ChannelScale>,
    ) -> Result<Self> {
        let n = t.len();
        if n < 2 {
            return Err(Error::invalid(format!("a series needs at least 2 samples, got {n}")));
        }
        if values.is_empty() {
            return Err(Error::invalid("a series needs at least one channel"));
        }
        if values.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("channel length differs from time grid length"));
        }
        if scale.len() != values.len() {
            return Err(Error::invalid("one scale per channel required"));
        }
        if t.iter().any(|x| !x.is_finite() || x.abs() > 1.0 + 1e-12) {
            return Err(Error::invalid("time coordinates must lie in [-1, 1]"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time coordinates must be strictly increasing"));
        }
        if let Some(m) = &mask {
            if m.len() != n {
                return Err(Error::invalid("mask length differs from series length"));
            }
        }
        for (c, channel) in values.iter().enumerate() {
            for (i, v) in channel.iter().enumerate() {
                let observed = mask.as_ref().map_or(true, |m| m[i]);
                if observed && !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite value at channel {c}, index {i}")));
                }
            }
        }
        if scale.iter().any(|s| !(s.gain.is_finite() && s.gain != 0.0 && s.offset.is_finite())) {
            return Err(Error::invalid("channel scale must be finite with non-zero gain"));
        }
        Ok(TimeSeries { t, values, mask, scale })
    }

    /// Builds a series on the uniform grid from raw channel data, fitting a
    /// min-max scale per channel. Non-finite raw entries become missing.
    pub fn from_raw(raw: Vec<Vec<f64>>) -> Result<Self> {
        let scale = raw.iter().map(|c| ChannelScale::fit(c)).collect();
        Self::from_raw_with_scale(raw, scale)
    }

    /// Like [`TimeSeries::from_raw`] but with caller-supplied scales.
    pub fn from_raw_with_scale(raw: Vec<Vec<f64>>, scale: Vec<ChannelScale>) -> Result<Self> {
        let n = raw.first().map_or(0, Vec::len);
        let mut mask = vec![true; n];
        let mut any_missing = false;
        let mut values = Vec::with_capacity(raw.len());
        for (channel, s) in raw.iter().zip(&scale) {
            let mut out = Vec::with_capacity(channel.len());
            for (i, &x) in channel.iter().enumerate() {
                if x.is_finite() {
                    out.push(s.normalize(x));
                } else {
                    if i < n {
                        mask[i] = false;
                    }
                    any_missing = true;
                    out.push(0.0);
                }
            }
            values.push(out);
        }
        let mask = any_missing.then_some(mask);
        TimeSeries::new(uniform_grid(n), values, mask, scale)
    }

    /// Series with normalized values on the uniform grid and identity scale.
    pub fn from_normalized(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.first().map_or(0, Vec::len);
        let scale = vec![ChannelScale::IDENTITY; values.len()];
        TimeSeries::new(uniform_grid(n), values, None, scale)
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_normalized(vec![values])
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.values.len()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn scale(&self) -> &[ChannelScale] {
        &self.scale
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[i])
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_observed(i)).collect()
    }

    pub fn n_observed(&self) -> usize {
        self.mask
            .as_ref()
            .map_or(self.len(), |m| m.iter().filter(|&&b| b).count())
    }

    pub fn with_mask(mut self, mask: Option<Vec<bool>>) -> Result<Self> {
        if let Some(m) = &mask {
            if m.len() != self.len() {
                return Err(Error::invalid("mask length differs from series length"));
            }
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: Vec<ChannelScale>) -> Result<Self> {
        if scale.len() != self.channels() {
            return Err(Error::invalid("one scale per channel required"));
        }
        self.scale = scale;
        Ok(self)
    }

    /// Values mapped back to raw units; unobserved entries are NaN.
    pub fn denormalized(&self) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .zip(&self.scale)
            .map(|(channel, s)| {
                channel
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if self.is_observed(i) { s.denormalize(v) } else { f64::NAN })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_unit_interval() {
        let g = uniform_grid(5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_channel_keeps_unit_gain() {
        let s = TimeSeries::from_raw(vec![vec![4.0; 6]]).unwrap();
        assert_eq!(s.scale()[0], ChannelScale { offset: 4.0, gain: 1.0 });
        assert!(s.channel(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn min_max_maps_to_unit_range() {
        let s = TimeSeries::from_raw(vec![vec![2.0, 6.0, 4.0, 10.0]]).unwrap();
        assert_eq!(s.channel(0), &[-1.0, 0.0, -0.5, 1.0]);
        assert_eq!(s.denormalized()[0], vec![2.0, 6.0, 4.0, 10.0]);
    }

    #[test]
    fn nan_becomes_missing() {
        let s = TimeSeries::from_raw(vec![vec![1.0, f64::NAN, 3.0]]).unwrap();
        assert_eq!(s.mask(), Some(&[true, false, true][..]));
        assert_eq!(s.n_observed(), 2);
    }

    #[test]
    fn rejects_bad_grids() {
        let scale = vec![ChannelScale::IDENTITY];
        assert!(TimeSeries::new(vec![0.0], vec![vec![1.0]], None, scale.clone()).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![vec![1.0, 2.0]], None, scale.clone()).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.5], vec![vec![1.0, 2.0]], None, scale).is_err());
    }
}
