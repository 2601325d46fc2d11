//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgls::corpus::{generate_synthetic, Polarity, Sentence, SentimentTuple, Span, SynthConfig};
use tgls::labeling::{decode, encode, encode_essential, pair_closure, EssentialLabel};
use tgls::metrics::graph_f1;
use tgls::model::{ModelConfig, Tgls, ViewId, Vocab};
use tgls::tensor::{Graph, Session, Tensor};
use tgls::training::{
    adaptive_threshold_loss, gradcheck, history_jsonl, train_model, CellGold, TrainConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, pass: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Ok(pass.into())
    } else {
        Err(fail.into())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Outcome {
    check(
        elapsed.as_secs() < limit_secs,
        format!("{:.1}s", elapsed.as_secs_f64()),
        format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn codec_round_trip() -> Outcome {
    let start = Instant::now();
    let corpus = generate_synthetic(&SynthConfig {
        count: 1200,
        seed: 11,
        overlap_fraction: 0.3,
        ..SynthConfig::default()
    });
    let tuples: Vec<&SentimentTuple> = corpus.iter().flat_map(|s| &s.gold).collect();
    let spans: Vec<Span> = tuples.iter().flat_map(|t| t.spans()).collect();
    let covered = [
        ("single-token span", spans.iter().any(|s| s.len() == 1)),
        ("span of length ≥ 4", spans.iter().any(|s| s.len() >= 4)),
        ("absent holder", tuples.iter().any(|t| t.holder.is_none())),
        ("absent target", tuples.iter().any(|t| t.target.is_none())),
        (
            "overlapped tuples",
            corpus.iter().any(|s| {
                encode_essential(s.len(), &s.gold).is_ok_and(|c| c.multi_label_cells() > 0)
            }),
        ),
    ];
    if let Some((what, _)) = covered.iter().find(|(_, ok)| !ok) {
        return Err(format!("corpus lacks a {what}"));
    }
    for s in &corpus {
        let cells = encode_essential(s.len(), &s.gold).map_err(|e| e.to_string())?;
        if decode(&cells) != pair_closure(&s.gold) {
            return Err(format!("sentence {} does not round-trip", s.sent_id));
        }
    }
    within(start.elapsed(), 10).map(|t| {
        format!(
            "{} sentences, {} tuples exact, {t}",
            corpus.len(),
            tuples.len()
        )
    })
}

fn overlapped_tuples() -> Outcome {
    // "I love the pasta and the wine": both tuples share holder and
    // expression, so their head/tail relation cells coincide.
    let love = Span::single(1);
    let holder = Some(Span::single(0));
    let a = SentimentTuple::new(holder, love, Some(Span::new(2, 3)), Polarity::Positive);
    let b = SentimentTuple::new(holder, love, Some(Span::new(5, 6)), Polarity::Positive);
    let s = Sentence::from_words(
        "overlap",
        &["I", "love", "the", "pasta", "and", "the", "wine"],
        vec![a, b],
    );
    let cells = encode(&s).map_err(|e| e.to_string())?;
    let shared = cells.labels(0, 1).is_some_and(|l| {
        l.contains(&EssentialLabel::ExpHeadToHolderHead)
            && l.contains(&EssentialLabel::ExpTailToHolderTail)
    });
    if cells.multi_label_cells() == 0 || !shared {
        return Err("no multi-label relation cell".into());
    }
    let decoded: BTreeSet<SentimentTuple> = decode(&cells).into_iter().collect();
    check(
        decoded == BTreeSet::from([a, b]),
        format!(
            "{} multi-label cell(s), both tuples decoded",
            cells.multi_label_cells()
        ),
        format!("decoded {decoded:?}"),
    )
}

fn gradient_integrity() -> Outcome {
    let start = Instant::now();
    let r = gradcheck(&ModelConfig::desk(), 0.25, 0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let detail = format!(
        "{} entries, max relative error {:.2e} at {:?}",
        r.checked, r.max_rel_error, r.worst
    );
    if r.max_rel_error >= 1e-3 {
        return Err(detail);
    }
    within(elapsed, 60).map(|t| format!("{detail}, {t}"))
}

fn one_cell_loss(score: f64, threshold: f64, positive: bool) -> f64 {
    let mut g = Graph::new();
    let s = g.constant(Tensor::matrix(&[&[score]]));
    let th = g.constant(Tensor::matrix(&[&[threshold]]));
    let gold = [CellGold {
        i: 0,
        j: 0,
        labels: vec![(0, positive)],
    }];
    let l = adaptive_threshold_loss(&mut g, &[s], th, &gold).expect("loss builds");
    g.value(l).item()
}

fn loss_closed_forms() -> Outcome {
    let ln2 = std::f64::consts::LN_2;
    let cases = [
        (
            "negative at S = TH = 0",
            one_cell_loss(0.0, 0.0, false),
            ln2,
        ),
        ("positive at S = TH = 0", one_cell_loss(0.0, 0.0, true), ln2),
        (
            "positive at S = 60, TH = 0",
            one_cell_loss(60.0, 0.0, true),
            0.0,
        ),
    ];
    let worst = cases
        .iter()
        .map(|(_, got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    let bad: Vec<_> = cases
        .iter()
        .filter(|(_, got, want)| (got - want).abs() >= 1e-9)
        .map(|c| c.0)
        .collect();
    check(
        bad.is_empty(),
        format!("max deviation {worst:.1e}"),
        format!("off: {bad:?}"),
    )
}

fn random_h(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(
        vec![rows, cols],
        (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    )
    .unwrap()
}

fn desk_model() -> Tgls {
    let corpus = generate_synthetic(&SynthConfig {
        count: 10,
        ..SynthConfig::default()
    });
    Tgls::new(ModelConfig::desk(), Vocab::build(&corpus), 3).expect("desk model")
}

fn rotary_property() -> Outcome {
    let model = desk_model();
    let hidden = model.config().hidden_size;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for view in ViewId::ALL {
        for _ in 0..100 {
            let rows = rng.gen_range(1..16);
            let offset = rng.gen_range(-10_000..10_000);
            let h = random_h(&mut rng, rows, hidden);
            let mut s = Session::new(model.params());
            let hv = s.constant(h);
            let a = model
                .graph
                .attention_scores(&mut s, hv, view, 0)
                .map_err(|e| e.to_string())?;
            let b = model
                .graph
                .attention_scores(&mut s, hv, view, offset)
                .map_err(|e| e.to_string())?;
            let d = s
                .value(a)
                .data()
                .iter()
                .zip(s.value(b).data())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    check(
        worst < 1e-9,
        format!("400 cases, max |ΔS| {worst:.1e}"),
        format!("max |ΔS| {worst:.3e}"),
    )
}

fn attention_normalization() -> Outcome {
    let corpus = generate_synthetic(&SynthConfig {
        count: 30,
        seed: 4,
        ..SynthConfig::default()
    });
    let model =
        Tgls::new(ModelConfig::desk(), Vocab::build(&corpus), 8).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for s in &corpus {
        let maps = model.scores(s).map_err(|e| e.to_string())?;
        for a in &maps.attention {
            for r in 0..a.rows() {
                worst = worst.max((a.row(r).iter().sum::<f64>() - 1.0).abs());
                rows += 1;
            }
        }
    }
    check(
        worst < 1e-9,
        format!("{rows} rows, max |Σ - 1| {worst:.1e}"),
        format!("max |Σ - 1| {worst:.3e}"),
    )
}

struct OverfitRun {
    first_at: Option<usize>,
    best: f64,
    elapsed: Duration,
    history: String,
}

fn overfit(alpha: f64) -> Result<OverfitRun, String> {
    let corpus = generate_synthetic(&SynthConfig {
        count: 32,
        ..SynthConfig::default()
    });
    let cfg = TrainConfig {
        alpha,
        epochs: 300,
        ..TrainConfig::desk()
    };
    let start = Instant::now();
    let model = Tgls::new(ModelConfig::desk(), Vocab::build(&corpus), cfg.seed)
        .map_err(|e| e.to_string())?;
    let mut first_at = None;
    // No dev split: the per-epoch selection score is train SF1.
    let out = train_model(model, &corpus, &[], &cfg, &mut |r| {
        if r.dev_sf1 >= 0.95 && first_at.is_none() {
            first_at = Some(r.epoch);
        }
    })
    .map_err(|e| e.to_string())?;
    // Re-score the selected checkpoint independently of the training loop.
    let pred = out.model.predict_all(&corpus).map_err(|e| e.to_string())?;
    let gold: Vec<_> = corpus.iter().map(|s| s.gold.clone()).collect();
    Ok(OverfitRun {
        first_at,
        best: graph_f1(&pred, &gold, true).f1,
        elapsed: start.elapsed(),
        history: history_jsonl(&out.history),
    })
}

fn overfit_test() -> Outcome {
    let mut notes = Vec::new();
    for alpha in [0.25, 0.0] {
        let run = overfit(alpha)?;
        let line = format!(
            "α={alpha}: SF1 {:.4}, first ≥ 0.95 at epoch {:?}, {:.0}s",
            run.best,
            run.first_at,
            run.elapsed.as_secs_f64()
        );
        if run.best < 0.95 || run.first_at.is_none() || run.elapsed.as_secs() >= 600 {
            return Err(line);
        }
        let records: Vec<serde_json::Value> = run
            .history
            .lines()
            .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let excluded = records.iter().all(|r| r["l_w"].is_null());
        let present = records.iter().all(|r| r["l_w"].is_f64());
        if alpha == 0.0 && !excluded {
            return Err(format!("{line}; history reports L_w at α = 0"));
        }
        if alpha > 0.0 && !present {
            return Err(format!("{line}; history lacks L_w"));
        }
        notes.push(line);
    }
    Ok(format!("{}; L_w null in α=0 history", notes.join("; ")))
}

fn set_f1(pred: &[Vec<SentimentTuple>], gold: &[Vec<SentimentTuple>]) -> f64 {
    let (mut hit, mut np, mut ng) = (0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        let p: BTreeSet<_> = p.iter().collect();
        let g: BTreeSet<_> = g.iter().collect();
        hit += p.intersection(&g).count();
        np += p.len();
        ng += g.len();
    }
    let precision = if np == 0 { 0.0 } else { hit as f64 / np as f64 };
    let recall = if ng == 0 { 0.0 } else { hit as f64 / ng as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn random_exact_tuple(rng: &mut ChaCha8Rng) -> SentimentTuple {
    // Spans come from a disjoint pool, so any two either coincide or share no token.
    let pool = [
        Span::new(0, 1),
        Span::single(2),
        Span::new(3, 5),
        Span::single(6),
        Span::new(7, 9),
    ];
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let polarity = [Polarity::Positive, Polarity::Neutral, Polarity::Negative][rng.gen_range(0..3)];
    SentimentTuple::new(
        rng.gen_bool(0.7).then_some(pool[idx[0]]),
        pool[idx[1]],
        rng.gen_bool(0.8).then_some(pool[idx[2]]),
        polarity,
    )
}

fn metric_oracles() -> Outcome {
    let gold = SentimentTuple::new(
        Some(Span::new(0, 1)),
        Span::new(3, 5),
        Some(Span::new(7, 10)),
        Polarity::Neutral,
    );
    let pred = SentimentTuple::new(
        Some(Span::new(0, 1)),
        Span::new(3, 4),
        Some(Span::new(7, 10)),
        Polarity::Neutral,
    );
    let hand = graph_f1(&[vec![pred]], &[vec![gold]], true).f1;
    if (hand - 16.0 / 17.0).abs() >= 1e-9 {
        return Err(format!("hand case gives {hand}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..200 {
        let sentences = rng.gen_range(1..5);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<Vec<SentimentTuple>> {
            (0..sentences)
                .map(|_| {
                    (0..rng.gen_range(0..4))
                        .map(|_| random_exact_tuple(rng))
                        .collect()
                })
                .collect()
        };
        let gold = draw(&mut rng);
        // Predictions share tuples with gold about half the time.
        let mut pred = draw(&mut rng);
        for (p, g) in pred.iter_mut().zip(&gold) {
            p.extend(g.iter().filter(|_| rng.gen_bool(0.5)));
        }
        let (got, want) = (graph_f1(&pred, &gold, true).f1, set_f1(&pred, &gold));
        if got != want {
            return Err(format!("case {case}: graph_f1 {got} vs set-F1 {want}"));
        }
    }
    Ok(format!(
        "16/17 → {hand:.4}; 200 exact-span cases equal set-F1"
    ))
}

fn tgls_bin(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tgls"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`tgls {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

const DATASET: &str = r#"[
  {"sent_id": "d1", "text": "Moscow government has expressed the wish to import the Mongolian meat .",
   "opinions": [{"Source": [["Moscow government"], ["0:17"]], "Target": [["import the Mongolian meat"], ["44:69"]],
                 "Polar_expression": [["expressed the wish"], ["22:40"]], "Polarity": "Neutral", "Intensity": "Standard"}]},
  {"sent_id": "d2", "text": "Great food , terrible service .",
   "opinions": [{"Source": [[], []], "Target": [["food"], ["6:10"]], "Polar_expression": [["Great"], ["0:5"]], "Polarity": "Positive"},
                {"Source": [[], []], "Target": [["service"], ["22:29"]], "Polar_expression": [["terrible"], ["13:21"]], "Polarity": "Negative"}]},
  {"sent_id": "d3", "text": "I loved the soup but hated the bread .",
   "opinions": [{"Source": [["I"], ["0:1"]], "Target": [["the soup"], ["8:16"]], "Polar_expression": [["loved"], ["2:7"]], "Polarity": "Positive"},
                {"Source": [["I"], ["0:1"]], "Target": [["the bread"], ["27:36"]], "Polar_expression": [["hated"], ["21:26"]], "Polarity": "Negative"}]},
  {"sent_id": "d4", "text": "Nothing to report .", "opinions": []}
]"#;

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    fs::write(d.join("data.json"), DATASET).map_err(|e| e.to_string())?;
    tgls_bin(
        d,
        &[
            "train",
            "--train",
            "data.json",
            "--dev",
            "data.json",
            "--out",
            "model",
            "--epochs",
            "5",
        ],
    )?;
    tgls_bin(
        d,
        &[
            "predict",
            "--model",
            "model",
            "--input",
            "data.json",
            "--out",
            "pred.json",
        ],
    )?;
    let table = tgls_bin(
        d,
        &[
            "evaluate",
            "--gold",
            "data.json",
            "--pred",
            "pred.json",
            "--out",
            "report.json",
        ],
    )?;
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(d.join("report.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let metrics = [
        "holder",
        "target",
        "expression",
        "span",
        "targeted",
        "nsf1",
        "sf1",
    ];
    let missing: Vec<_> = metrics
        .iter()
        .filter(|m| !report[**m]["f1"].is_f64())
        .collect();
    let rows = [
        "Holder F1",
        "Target F1",
        "Exp. F1",
        "Span F1",
        "Targeted F1",
        "NSF1",
        "SF1",
    ];
    let absent: Vec<_> = rows.iter().filter(|r| !table.contains(**r)).collect();
    check(
        missing.is_empty() && absent.is_empty(),
        "benchmark-format file: train, predict and evaluate emit all seven metrics",
        format!("missing from report {missing:?}, from table {absent:?}"),
    )
}

fn alpha_sweep_harness() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    tgls_bin(d, &["synth", "--count", "60", "--out", "synth.json"])?;
    let alphas = ["0", "0.25", "0.5", "0.75", "1"];
    let table = tgls_bin(
        d,
        &[
            "train",
            "--train",
            "synth.json",
            "--test",
            "synth.json",
            "--out",
            "sweep",
            "--epochs",
            "15",
            "--alpha",
            &alphas.join(","),
        ],
    )?;
    let lines: Vec<&str> = table.lines().collect();
    let header_ok = lines
        .first()
        .is_some_and(|h| h.contains("alpha") && h.contains("SF1"));
    let rows_ok = lines.len() == alphas.len() + 1
        && lines[1..].iter().zip(alphas).all(|(l, a)| {
            let cols: Vec<&str> = l.split_whitespace().collect();
            cols.len() == 4 && cols[0].parse::<f64>().ok() == a.parse().ok()
        });
    let json: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(d.join("sweep/sweep.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let json_ok = json.as_array().is_some_and(|a| a.len() == alphas.len());
    if !(header_ok && rows_ok && json_ok) {
        return Err(format!("unexpected sweep output:\n{table}"));
    }
    within(start.elapsed(), 1800).map(|t| format!("{} α values tabulated, {t}", alphas.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("codec round-trip", codec_round_trip),
        ("overlapped-tuple capability", overlapped_tuples),
        ("gradient integrity", gradient_integrity),
        ("loss closed forms", loss_closed_forms),
        ("rotary shift invariance", rotary_property),
        ("attention normalization", attention_normalization),
        ("overfit", overfit_test),
        ("metric oracles", metric_oracles),
        ("end-to-end train and evaluate", end_to_end),
        ("alpha sweep harness", alpha_sweep_harness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
