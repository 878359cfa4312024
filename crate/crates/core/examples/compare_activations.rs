//! Fit the same small multisine corpus with sine, ReLU, tanh and sigmoid
//! networks and print the mean reconstruction error of each.
//!
//! cargo run --release --example compare_activations -- [n_series] [epochs]

use hypertime::data::{synth_corpus, Preset};
use hypertime::inr::{compare_activations, CompareOptions, FitOptions};

fn main() -> hypertime::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let epochs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);

    let corpus = synth_corpus(Preset::Multisine, n.max(2), 128, 0)?;
    let opts = CompareOptions {
        fit: FitOptions { epochs, ..FitOptions::default() },
        ..CompareOptions::default()
    };
    let table = compare_activations(&corpus.series[..n.max(2)], &opts)?;
    println!("{:<8} {:>12} {:>14}", "act", "mean mse", "mse @ ep 200");
    for row in &table.rows {
        let early: f64 = row.loss_curves.iter().filter_map(|c| c.get(200)).sum::<f64>() / row.loss_curves.len() as f64;
        println!("{:<8} {:>12.3e} {:>14.3e}", row.activation.name(), row.mean_mse, early);
    }
    Ok(())
}
