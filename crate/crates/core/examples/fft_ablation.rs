//! Train two hypernetworks that differ only in the spectral loss weight and
//! compare the quality of what they generate.
//!
//! cargo run --release --example fft_ablation -- [preset] [epochs]

use hypertime::data::{synth_corpus, Preset};
use hypertime::evaluation::{ablation_fft, AblationConfig};
use hypertime::hypertime::TrainConfig;

fn main() -> hypertime::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().map_or(Ok(Preset::SpectralSpread), |a| a.parse())?;
    let epochs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);

    let corpus = synth_corpus(preset, 100, 128, 0)?;
    let cfg = AblationConfig {
        train: TrainConfig {
            epochs,
            ..TrainConfig::default()
        },
        ..AblationConfig::default()
    };
    let report = ablation_fft(&corpus.series, &cfg, 0)?;
    for arm in [&report.with_fft, &report.without_fft] {
        println!(
            "lambda_fft {:<6} f1 {:.3}  predictive mae {:.4}  final rec {:.2e}",
            arm.lambda_fft, arm.report.f1, arm.report.predictive_mae, arm.final_loss.rec
        );
    }
    Ok(())
}
