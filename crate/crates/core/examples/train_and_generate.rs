//! Train the hypernetwork on a multisine corpus, then synthesize new series
//! by interpolating between the latent codes of random training pairs.
//!
//! cargo run --release --example train_and_generate -- [epochs]

use hypertime::data::{synth_corpus, Preset};
use hypertime::hypertime::{interpolate_generate, reconstruct, train_hypertime, AlphaPolicy, TrainConfig};

fn main() -> hypertime::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(60);
    let corpus = synth_corpus(Preset::Multisine, 48, 128, 0)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let trained = train_hypertime(&corpus.series, &cfg, 0)?;
    for (e, loss) in trained.history.iter().enumerate().step_by((epochs / 6).max(1)) {
        println!("epoch {e:>4}  total {:.4}  rec {:.4}  fft {:.4}", loss.total, loss.rec, loss.fft);
    }

    let rec = reconstruct(&trained.model, &corpus.series[0])?;
    let mse: f64 = rec
        .channel(0)
        .iter()
        .zip(corpus.series[0].channel(0))
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / rec.len() as f64;
    println!("reconstruction mse of series 0: {mse:.3e}");

    for g in interpolate_generate(&trained.model, &corpus.series, 5, AlphaPolicy::default(), 1)? {
        let raw = g.series.denormalized();
        let (lo, hi) = raw[0].iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
        println!("{} -> {} at alpha {:.2}: range [{lo:.2}, {hi:.2}]", g.a, g.b, g.alpha);
    }
    Ok(())
}
