mod common;

use common::*;
use hypertime::spectral::{fft_loss, ffte, padded_len, rfft};
use proptest::prelude::*;

#[test]
fn rfft_matches_naive_dft_and_parseval() {
    let (dft, parseval) = fft_oracle_errors(7);
    assert!(dft < 1e-9, "DFT deviation {dft:e}");
    assert!(parseval < 1e-9, "Parseval error {parseval:e}");
}

#[test]
fn power_of_two_lengths_are_not_padded() {
    for n in [2, 4, 64, 128] {
        assert_eq!(padded_len(n), n);
        assert_eq!(rfft(&vec![0.5; n]).unwrap().bins().len(), n / 2 + 1);
    }
    assert_eq!(padded_len(100), 128);
}

#[test]
fn short_signals_rejected() {
    assert!(rfft(&[1.0]).is_err());
    assert!(fft_loss(&[1.0, 2.0], &[1.0]).is_err());
}

fn signal() -> impl Strategy<Value = Vec<f64>> {
    (2usize..70).prop_flat_map(|n| prop::collection::vec(-5.0f64..5.0, n))
}

fn signal_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..70).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n)))
}

proptest! {
    #[test]
    fn distances_vanish_on_identical_inputs(x in signal()) {
        prop_assert_eq!(fft_loss(&x, &x).unwrap(), 0.0);
        prop_assert_eq!(ffte(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn distances_are_non_negative_and_symmetric((a, b) in signal_pair()) {
        let l = fft_loss(&a, &b).unwrap();
        let e = ffte(&a, &b).unwrap();
        prop_assert!(l >= 0.0 && e >= 0.0);
        prop_assert!((l - fft_loss(&b, &a).unwrap()).abs() < 1e-12);
        // Magnitude differences never exceed complex differences.
        prop_assert!(e <= l + 1e-12);
    }

    #[test]
    fn rfft_is_linear((a, b) in signal_pair(), k in -3.0f64..3.0) {
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + k * y).collect();
        let (sa, sb, sc) = (rfft(&a).unwrap(), rfft(&b).unwrap(), rfft(&combo).unwrap());
        for ((x, y), z) in sa.bins().iter().zip(sb.bins()).zip(sc.bins()) {
            prop_assert!((x.re + k * y.re - z.re).abs() < 1e-9);
            prop_assert!((x.im + k * y.im - z.im).abs() < 1e-9);
        }
    }
}
