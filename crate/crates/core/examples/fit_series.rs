//! Fit a SIREN to one synthetic series and report how well it reconstructs
//! the series, both on its own grid and at 4x resolution.
//!
//! cargo run --release --example fit_series

use hypertime::data::{synth_corpus, Preset};
use hypertime::inr::{evaluate, fit, FitOptions, MlpSpec};
use hypertime::series::uniform_grid;

fn main() -> hypertime::Result<()> {
    let corpus = synth_corpus(Preset::AmChirp, 2, 128, 7)?;
    let series = &corpus.series[0];
    let spec = MlpSpec::siren(1);
    println!("network widths {:?}, {} parameters", spec.widths, spec.param_count());

    let result = fit(series, &spec, &FitOptions::default())?;
    for (epoch, loss) in result.loss_history.iter().enumerate().step_by(250) {
        println!("epoch {epoch:>5}  mse {loss:.3e}");
    }
    println!("final mse {:.3e}", result.final_mse);

    let fine = evaluate(&result.params, &uniform_grid(512))?;
    let peak = fine.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    println!("4x upsampled peak |value| {peak:.3} (normalized units)");
    Ok(())
}
