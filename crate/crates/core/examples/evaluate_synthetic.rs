//! Score synthetic sets against a real corpus: an exact copy, a noisy copy
//! and an unrelated corpus.
//!
//! cargo run --release --example evaluate_synthetic

use hypertime::data::{synth_corpus, Preset};
use hypertime::evaluation::{evaluate, EvalOptions};
use hypertime::TimeSeries;
use rand::Rng;

fn main() -> hypertime::Result<()> {
    let real = synth_corpus(Preset::Multisine, 100, 64, 0)?.series;
    let mut rng = hypertime::rng::seeded(5);
    let noisy = real
        .iter()
        .map(|s| {
            let raw: Vec<f64> = s.denormalized()[0].iter().map(|v| v + rng.gen_range(-0.3..0.3)).collect();
            TimeSeries::from_raw(vec![raw])
        })
        .collect::<hypertime::Result<Vec<_>>>()?;
    let other = synth_corpus(Preset::AmChirp, 100, 64, 1)?.series;

    let opts = EvalOptions::default();
    for (name, synth) in [("copy", &real), ("noisy", &noisy), ("am_chirp", &other)] {
        let r = evaluate(&real, synth, &opts)?;
        println!(
            "{name:<9} precision {:.3}  recall {:.3}  f1 {:.3}  predictive mae {:.4}",
            r.precision, r.recall, r.f1, r.predictive_mae
        );
    }
    Ok(())
}
