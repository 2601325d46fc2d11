//! Trains one desk model per α on synthetic data and prints the SF1-vs-α
//! table.
//!
//! cargo run --example alpha_sweep -- [epochs]

use tgls::corpus::{generate_synthetic, SynthConfig};
use tgls::model::ModelConfig;
use tgls::training::{alpha_sweep, split_dev, sweep_table, TrainConfig};

fn main() -> tgls::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .map_or(60, |a| a.parse().expect("epochs"));
    let corpus = generate_synthetic(&SynthConfig {
        count: 120,
        ..SynthConfig::default()
    });
    let (rest, test) = corpus.split_at(80);
    let (train, dev) = split_dev(rest, 0.2, 0);
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::desk()
    };
    let alphas = [0.0, 0.25, 0.5, 1.0];
    let rows = alpha_sweep(
        &train,
        &dev,
        Some(test),
        &ModelConfig::desk(),
        &cfg,
        &alphas,
        &mut |alpha, out| {
            eprintln!("α = {alpha}: best epoch {:?}", out.best_epoch);
            Ok(())
        },
    )?;
    print!("{}", sweep_table(&rows));
    Ok(())
}
