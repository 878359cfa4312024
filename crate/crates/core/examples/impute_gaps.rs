//! Hide half the samples of an amplitude-modulated chirp and fill them in
//! with every imputation method, scoring each on the hidden points.
//!
//! cargo run --release --example impute_gaps

use hypertime::data::{synth_corpus, Preset};
use hypertime::imputation::{impute, mask_series, ImputationMethod, ImputeOptions};

fn main() -> hypertime::Result<()> {
    let corpus = synth_corpus(Preset::AmChirp, 2, 128, 1)?;
    let masked = mask_series(&corpus.series[0], 0.5, 11)?;
    println!("{} of {} samples observed", masked.observed.n_observed(), masked.observed.len());

    // A lower frequency scale suits 64 irregular samples better than the default.
    let opts = ImputeOptions {
        omega0: 10.0,
        ..ImputeOptions::default()
    };
    println!("{:<12} {:>10} {:>10}", "method", "mse", "ffte");
    for method in ImputationMethod::ALL {
        let (_, report) = impute(&masked, method, &opts)?;
        println!("{:<12} {:>10.2e} {:>10.4}", method.name(), report.mse, report.ffte);
    }
    Ok(())
}
