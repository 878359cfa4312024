//! Generate series with the PCA interpolation baseline and show how many
//! components carry the corpus variance.
//!
//! cargo run --release --example pca_baseline

use hypertime::data::{synth_corpus, Preset};
use hypertime::hypertime::{pca_generate, AlphaPolicy};
use hypertime::pca::Pca;

fn main() -> hypertime::Result<()> {
    let corpus = synth_corpus(Preset::SpectralSpread, 60, 128, 3)?;
    let vectors: Vec<Vec<f64>> = corpus.series.iter().map(|s| s.channel(0).to_vec()).collect();
    let pca = Pca::fit(&vectors, 40)?;
    let total: f64 = pca.singular_values().iter().map(|s| s * s).sum();
    let mut acc = 0.0;
    for (k, s) in pca.singular_values().iter().enumerate().take(10) {
        acc += s * s;
        println!("component {k:>2}: cumulative variance {:.3}", acc / total);
    }

    let generated = pca_generate(&corpus.series, 40, 4, AlphaPolicy::Fixed(0.5), 0)?;
    for g in generated {
        println!("midpoint of {} and {}: first values {:?}", g.a, g.b, &g.series.channel(0)[..4]);
    }
    Ok(())
}
