//! Radix-2 FFT and the two spectral distances used by the crate.
//!
//! Signals are zero-padded to the next power of two and only the one-sided
//! spectrum (bins `0..=M/2` of an `M`-point transform) is kept. Both
//! distances divide by the number of retained bins.
//!
//! * [`fft_loss`] is the training loss: mean complex modulus of the per-bin
//!   difference, sensitive to phase.
//! * [`ffte`] is the imputation metric: mean absolute difference of the
//!   magnitude spectra, blind to phase.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    pub fn cis(theta: f64) -> Self {
        Complex::new(theta.cos(), theta.sin())
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// Unnormalized in-place transform of a power-of-two buffer.
///
/// Forward uses `e^{-2πikn/M}`; `inverse` flips the sign of the exponent
/// and does not divide by `M`.
pub fn fft_in_place(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex> = (0..n / 2)
        .map(|k| Complex::cis(sign * 2.0 * PI * k as f64 / n as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = w * buf[start + k + half];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// One-sided spectrum of a real signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex>,
    n_original: usize,
}

impl Spectrum {
    pub fn bins(&self) -> &[Complex] {
        &self.bins
    }

    /// Length of the signal before zero padding.
    pub fn n_original(&self) -> usize {
        self.n_original
    }

    /// Length of the transform that produced the bins.
    pub fn padded_len(&self) -> usize {
        2 * (self.bins.len() - 1)
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.abs()).collect()
    }
}

/// Transform length used for a signal of `n` samples.
pub fn padded_len(n: usize) -> usize {
    n.next_power_of_two().max(2)
}

pub fn rfft(signal: &[f64]) -> Result<Spectrum> {
    if signal.len() < 2 {
        return Err(Error::invalid(format!(
            "rfft needs at least 2 samples, got {}",
            signal.len()
        )));
    }
    let m = padded_len(signal.len());
    let mut buf = vec![Complex::ZERO; m];
    for (b, &x) in buf.iter_mut().zip(signal) {
        b.re = x;
    }
    fft_in_place(&mut buf, false);
    buf.truncate(m / 2 + 1);
    // Exactly real for real input.
    buf[0].im = 0.0;
    buf[m / 2].im = 0.0;
    Ok(Spectrum {
        bins: buf,
        n_original: signal.len(),
    })
}

fn check_pair(f: &[f64], f_hat: &[f64]) -> Result<()> {
    if f.len() != f_hat.len() {
        return Err(Error::Shape {
            op: "spectral distance",
            shapes: vec![vec![f.len()], vec![f_hat.len()]],
        });
    }
    Ok(())
}

/// Mean modulus of the complex per-bin spectrum difference.
pub fn fft_loss(f: &[f64], f_hat: &[f64]) -> Result<f64> {
    check_pair(f, f_hat)?;
    let a = rfft(f)?;
    let b = rfft(f_hat)?;
    let total: f64 = a.bins.iter().zip(&b.bins).map(|(x, y)| (*x - *y).abs()).sum();
    Ok(total / a.bins.len() as f64)
}

/// Gradient of [`fft_loss`] with respect to `f_hat`.
pub fn fft_loss_grad(f: &[f64], f_hat: &[f64]) -> Result<Vec<f64>> {
    check_pair(f, f_hat)?;
    let mut tape = Tape::new();
    let pred = tape.param(Tensor::column(f_hat.to_vec()));
    let loss = fft_loss_on_tape(&mut tape, f, pred)?;
    let grads = tape.backward(loss)?;
    Ok(grads.wrt(pred).into_data())
}

/// Records [`fft_loss`] between a fixed `target` and the vector node `pred`.
pub fn fft_loss_on_tape(tape: &mut Tape, target: &[f64], pred: NodeId) -> Result<NodeId> {
    if tape.value(pred).len() != target.len() {
        return Err(Error::Shape {
            op: "fft_loss",
            shapes: vec![vec![target.len()], tape.value(pred).shape().to_vec()],
        });
    }
    let spectrum = rfft(target)?;
    let mut data = Vec::with_capacity(2 * spectrum.bins.len());
    for b in &spectrum.bins {
        data.push(b.re);
        data.push(b.im);
    }
    let target_bins = tape.constant(Tensor::matrix(spectrum.bins.len(), 2, data)?);
    let pred_bins = tape.rfft(pred)?;
    let diff = tape.sub(target_bins, pred_bins)?;
    let modulus = tape.complex_abs(diff)?;
    tape.mean(modulus)
}

/// Fourier error: mean absolute difference between magnitude spectra.
pub fn ffte(f: &[f64], f_hat: &[f64]) -> Result<f64> {
    check_pair(f, f_hat)?;
    let a = rfft(f)?.magnitudes();
    let b = rfft(f_hat)?.magnitudes();
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_is_dc_only() {
        let s = rfft(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.bins()[0], Complex::new(4.0, 0.0));
        for b in &s.bins()[1..] {
            assert!(b.abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_lands_in_its_bin() {
        let n = 32;
        let k = 5;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * k as f64 * i as f64 / n as f64).cos())
            .collect();
        let s = rfft(&x).unwrap();
        for (j, b) in s.bins().iter().enumerate() {
            if j == k {
                assert!((b.abs() - n as f64 / 2.0).abs() < 1e-9);
            } else {
                assert!(b.abs() < 1e-9, "bin {j} = {}", b.abs());
            }
        }
    }

    #[test]
    fn short_inputs_rejected() {
        assert!(rfft(&[]).is_err());
        assert!(rfft(&[1.0]).is_err());
    }

    #[test]
    fn dc_and_nyquist_are_real() {
        let s = rfft(&[0.3, -1.2, 2.5, 0.7, 0.1, 0.9]).unwrap();
        assert_eq!(s.padded_len(), 8);
        assert_eq!(s.n_original(), 6);
        assert_eq!(s.bins()[0].im, 0.0);
        assert_eq!(s.bins()[4].im, 0.0);
    }

    #[test]
    fn impulse_against_zeros_has_unit_loss() {
        // Every bin of a unit impulse has modulus one.
        let loss = fft_loss(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distances_vanish_on_identical_inputs() {
        let x = [0.2, -0.4, 1.5, 0.0, 3.0];
        assert_eq!(fft_loss(&x, &x).unwrap(), 0.0);
        assert_eq!(ffte(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn ffte_ignores_sign_flip() {
        let x = [0.2, -0.4, 1.5, 0.0, 3.0, -2.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(ffte(&x, &neg).unwrap() < 1e-12);
        assert!(fft_loss(&x, &neg).unwrap() > 0.1);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(fft_loss(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(ffte(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
