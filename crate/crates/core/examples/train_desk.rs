//! Overfits the desk preset on a small synthetic corpus and reports train SF1
//! per epoch.
//!
//! cargo run --example train_desk -- [sentences] [epochs] [alpha] [lr] [seed]

use std::time::Instant;

use tgls::corpus::{generate_synthetic, SynthConfig};
use tgls::model::{ModelConfig, Tgls, Vocab};
use tgls::training::{train_model, TrainConfig};

fn main() -> tgls::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let corpus = generate_synthetic(&SynthConfig {
        count: arg(0, 32.0) as usize,
        ..SynthConfig::default()
    });
    let cfg = TrainConfig {
        epochs: arg(1, 300.0) as usize,
        alpha: arg(2, 0.25),
        lr: arg(3, TrainConfig::desk().lr),
        seed: arg(4, 0.0) as u64,
        ..TrainConfig::desk()
    };

    let start = Instant::now();
    let mut reached = None;
    let model = Tgls::new(ModelConfig::desk(), Vocab::build(&corpus), cfg.seed)?;
    // No dev split: selection and the reported SF1 use the training corpus.
    let outcome = train_model(model, &corpus, &[], &cfg, &mut |r| {
        if r.epoch % 10 == 0 || r.best {
            println!(
                "epoch {:3}  {:6.1}s  L_all {:9.4}  train SF1 {:.4}",
                r.epoch,
                start.elapsed().as_secs_f64(),
                r.l_all,
                r.dev_sf1
            );
        }
        if r.dev_sf1 >= 0.95 && reached.is_none() {
            reached = Some(r.epoch);
        }
    })?;
    println!(
        "best epoch {:?}, train SF1 {:.4}, first epoch at ≥ 0.95: {:?}, {:.1}s",
        outcome.best_epoch,
        outcome.best_dev_sf1.unwrap_or(0.0),
        reached,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
