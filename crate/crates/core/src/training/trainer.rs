use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::sentence_loss;
use super::optim::Adam;
use super::TrainConfig;
use crate::corpus::{Sentence, SentimentTuple};
use crate::labeling::{encode, LabelCellSet};
use crate::metrics::graph_f1;
use crate::model::{EncodedSentence, ModelConfig, Noise, Tgls, Vocab};
use crate::tensor::{Gradients, Session};
use crate::{Error, Result};

/// One line of the history file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Learning rate at the last step of the epoch.
    pub lr: f64,
    /// Mean per-sentence losses over the epoch.
    pub l_e: f64,
    /// `null` when `α = 0`.
    pub l_w: Option<f64>,
    pub l_all: f64,
    pub dev_sf1: f64,
    /// Whether this epoch became the retained checkpoint.
    pub best: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the highest dev SF1 (the earliest on
    /// ties), or the initialization when no epoch ran.
    pub model: Tgls,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_dev_sf1: Option<f64>,
}

/// Builds the vocabulary from `train`, initializes a model from `cfg.seed`
/// and trains it.
pub fn train(
    train: &[Sentence],
    dev: &[Sentence],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let model = Tgls::new(model_cfg.clone(), Vocab::build(train), cfg.seed)?;
    train_model(model, train, dev, cfg, &mut |_| {})
}

fn sentence_gradients(
    model: &Tgls,
    enc: &EncodedSentence,
    gold: &LabelCellSet,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Gradients, f64, Option<f64>, f64)> {
    let mut s = Session::new(model.params());
    let f = model.forward(&mut s, enc, &mut Noise::on(rng), 0)?;
    let loss = sentence_loss(&mut s, &f, gold, alpha)?;
    let all = s.value(loss.all).item();
    s.backward(loss.all)?;
    Ok((s.gradients(), loss.l_e, loss.l_w, all))
}

/// Mini-batch Adam under cosine warm restarts. Selection uses SF1 on `dev`,
/// or on `train` when `dev` is empty. Deterministic for a fixed seed.
pub fn train_model(
    mut model: Tgls,
    train: &[Sentence],
    dev: &[Sentence],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let examples: Vec<(EncodedSentence, LabelCellSet)> = train
        .iter()
        .map(|s| Ok((model.encode(s), encode(s)?)))
        .collect::<Result<_>>()?;
    let select_on = if dev.is_empty() { train } else { dev };
    let select_gold: Vec<Vec<SentimentTuple>> = select_on.iter().map(|s| s.gold.clone()).collect();

    let schedule = cfg.schedule();
    let mut adam = Adam::new(model.params());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batches = examples.len().div_ceil(cfg.batch_size).max(1);

    let mut best: Option<(usize, f64, Tgls)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut sum_e, mut sum_w, mut sum_all) = (0.0, 0.0, 0.0);
        let mut lr = cfg.lr;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            lr = schedule.lr_at(epoch as f64 + b as f64 / batches as f64);
            let results: Vec<Result<_>> = batch
                .par_iter()
                .map(|&k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream((epoch * examples.len() + k) as u64);
                    let (enc, gold) = &examples[k];
                    sentence_gradients(&model, enc, gold, cfg.alpha, &mut rng)
                })
                .collect();
            let mut grads = Gradients::zeros_like(model.params());
            let mut finite = true;
            for r in results {
                let (g, le, lw, all) = r?;
                finite &= all.is_finite();
                grads.accumulate(&g);
                sum_e += le;
                sum_w += lw.unwrap_or(0.0);
                sum_all += all;
            }
            grads.scale(1.0 / batch.len() as f64);
            if !finite || !grads.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: b + 1,
                });
            }
            adam.step(model.params_mut(), &grads, lr);
        }
        let pred = model.predict_all(select_on)?;
        let dev_sf1 = graph_f1(&pred, &select_gold, true).f1;
        let improved = best.as_ref().is_none_or(|(_, f, _)| dev_sf1 > *f);
        if improved {
            best = Some((epoch + 1, dev_sf1, model.clone()));
        }
        let n = examples.len().max(1) as f64;
        let record = EpochRecord {
            epoch: epoch + 1,
            lr,
            l_e: sum_e / n,
            l_w: (cfg.alpha != 0.0).then_some(sum_w / n),
            l_all: sum_all / n,
            dev_sf1,
            best: improved,
        };
        info!(
            "epoch {:>3}  lr {:.2e}  L_e {:.4}  L_w {}  L_all {:.4}  dev SF1 {:.4}",
            record.epoch,
            record.lr,
            record.l_e,
            record.l_w.map_or("-".into(), |v| format!("{v:.4}")),
            record.l_all,
            record.dev_sf1
        );
        on_epoch(&record);
        history.push(record);
    }
    Ok(match best {
        Some((epoch, sf1, m)) => TrainOutcome {
            model: m,
            history,
            best_epoch: Some(epoch),
            best_dev_sf1: Some(sf1),
        },
        None => TrainOutcome {
            model,
            history,
            best_epoch: None,
            best_dev_sf1: None,
        },
    })
}

/// Seeded hold-out: returns `(train, dev)` with `round(fraction · n)` dev
/// sentences (at least one when `fraction > 0` and `n ≥ 2`).
pub fn split_dev(
    sentences: &[Sentence],
    fraction: f64,
    seed: u64,
) -> (Vec<Sentence>, Vec<Sentence>) {
    let n = sentences.len();
    let mut k = (fraction * n as f64).round() as usize;
    if fraction > 0.0 && n >= 2 {
        k = k.clamp(1, n - 1);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut dev_idx = idx[..k].to_vec();
    dev_idx.sort_unstable();
    let dev: Vec<Sentence> = dev_idx.iter().map(|&i| sentences[i].clone()).collect();
    let train = (0..n)
        .filter(|i| dev_idx.binary_search(i).is_err())
        .map(|i| sentences[i].clone())
        .collect();
    (train, dev)
}

pub fn history_jsonl(history: &[EpochRecord]) -> String {
    history
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut f =
        fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(history_jsonl(history).as_bytes())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub best_epoch: Option<usize>,
    pub dev_sf1: Option<f64>,
    /// SF1 of the selected checkpoint on the evaluation split, when given.
    pub test_sf1: Option<f64>,
}

/// Trains one model per α with otherwise identical settings.
pub fn alpha_sweep(
    train: &[Sentence],
    dev: &[Sentence],
    test: Option<&[Sentence]>,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    alphas: &[f64],
    on_run: &mut dyn FnMut(f64, &TrainOutcome) -> Result<()>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let run_cfg = TrainConfig {
            alpha,
            ..cfg.clone()
        };
        let outcome = self::train(train, dev, model_cfg, &run_cfg)?;
        let test_sf1 = match test {
            Some(t) => {
                let pred = outcome.model.predict_all(t)?;
                let gold: Vec<Vec<SentimentTuple>> = t.iter().map(|s| s.gold.clone()).collect();
                Some(graph_f1(&pred, &gold, true).f1)
            }
            None => None,
        };
        on_run(alpha, &outcome)?;
        rows.push(SweepRow {
            alpha,
            best_epoch: outcome.best_epoch,
            dev_sf1: outcome.best_dev_sf1,
            test_sf1,
        });
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |f| format!("{f:.4}"));
    let mut s = format!(
        "{:>8} {:>10} {:>8} {:>8}\n",
        "alpha", "best_epoch", "dev_SF1", "test_SF1"
    );
    for r in rows {
        let epoch = r.best_epoch.map_or("-".to_string(), |e| e.to_string());
        let _ = writeln!(
            s,
            "{:>8.3} {:>10} {:>8} {:>8}",
            r.alpha,
            epoch,
            cell(r.dev_sf1),
            cell(r.test_sf1)
        );
    }
    s
}
