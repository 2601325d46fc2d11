//! Command-line front end. `run` returns the process exit status:
//! 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    generate_synthetic, read_corpus, write_canonical, IngestMode, PolarityMap, Sentence,
    SentimentTuple, SynthConfig,
};
use crate::labeling::{decode, encode, LabelCellSet};
use crate::metrics::evaluate_with_buckets;
use crate::model::{Preset, Tgls, Vocab};
use crate::training::{
    alpha_sweep, gradcheck, split_dev, sweep_table, train_model, write_history, RunConfig,
    SweepRow, TrainConfig,
};
use crate::{Error, Result};

const CONFIG_KEYS: &str = "\
Config file keys (flat TOML; command-line flags take precedence):
  preset                  desk | fidelity, supplies the defaults below
  alpha                   weight of the whole-label loss (0 disables it)
  lr                      peak learning rate
  batch_size              sentences per update
  epochs                  training epochs
  seed                    model init, shuffling and dropout seed
  restart_period          first warm-restart cycle in epochs
  restart_mult            cycle length multiplier
  min_lr_ratio            learning-rate floor as a fraction of lr
  dev_fraction            share of train held out when --dev is absent
  word_dim pos_dim lemma_dim char_dim
                          embedding widths (pos/lemma 0 disables them)
  char_filters char_window
                          character CNN filters and window
  lstm_layers hidden_size BiLSTM depth and width (even)
  graph_dim hop_layers    token graph width and number of hops
  mlp_hidden score_dim    scorer hidden width and query/key width (even)
  embedding_dropout dropout
                          dropout rates in [0, 1)
  freeze_word_embeddings  keep loaded static vectors fixed

Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.";

#[derive(Debug, Parser)]
#[command(name = "tgls", version, about = "Token-graph structured sentiment analysis", after_long_help = CONFIG_KEYS)]
pub struct Cli {
    /// Flat TOML file; keys are the fields of the model and training
    /// configuration (print a template with `tgls config`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed (model init, shuffling, dropout, synthesis).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Reject the whole input on the first malformed sentence (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip malformed sentences with a warning.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Size preset supplying configuration defaults.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// JSON object mapping raw polarity strings to Positive/Neutral/Negative.
    #[arg(long, global = true)]
    pub polarity_map: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus in canonical JSON.
    Synth(SynthArgs),
    /// Encode gold tuples of a corpus into label cell sets.
    Encode(EncodeArgs),
    /// Decode label cell sets back into tuples.
    Decode(DecodeArgs),
    /// Train a model (or one model per α) and keep the best-dev checkpoint.
    Train(TrainArgs),
    /// Predict tuples for a corpus with a trained model.
    Predict(PredictArgs),
    /// Score predictions against gold.
    Evaluate(EvaluateArgs),
    /// Finite-difference check of the training loss gradient.
    Gradcheck(GradcheckArgs),
    /// Print the effective configuration as a TOML template.
    Config,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Fraction of sentences built with overlapped tuples.
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Canonical corpus or raw dataset JSON.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Output of `encode`.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Model-selection split; when absent, `dev_fraction` of the training
    /// file is held out.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Evaluation split reported in the α-sweep table.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// One α or a comma-separated list; a list trains one model per value.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Static word embeddings (`token v1 … vd` per line).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory written by `train`.
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write every score matrix, one JSON object per sentence.
    #[arg(long)]
    pub dump_scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Report JSON path; the table always goes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
}

/// One `encode` output record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EncodedRecord {
    pub sent_id: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    pub cells: LabelCellSet,
}

struct Ctx {
    mode: IngestMode,
    polarity: PolarityMap,
    config: RunConfig,
}

impl Ctx {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let mode = if cli.lenient {
            IngestMode::Lenient
        } else {
            IngestMode::Strict
        };
        let polarity = match &cli.polarity_map {
            Some(p) => PolarityMap::from_json_file(p)?,
            None => PolarityMap::default(),
        };
        let mut config = match &cli.config {
            Some(p) => RunConfig::from_file(p, cli.preset)?,
            None => RunConfig::preset(cli.preset.unwrap_or_default()),
        };
        if let Some(seed) = cli.seed {
            config.train.seed = seed;
        }
        Ok(Self {
            mode,
            polarity,
            config,
        })
    }

    fn corpus(&self, path: &Path) -> Result<Vec<Sentence>> {
        let report = read_corpus(path, self.mode, &self.polarity)?;
        for (id, reason) in &report.skipped {
            warn!("skipped sentence {id}: {reason}");
        }
        Ok(report.sentences)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
            }
            fs::write(p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| {
                    if text.ends_with('\n') {
                        Ok(())
                    } else {
                        out.write_all(b"\n")
                    }
                })
                .map_err(|e| Error::io("writing stdout", e))
        }
    }
}

fn with_tuples(sentences: &[Sentence], tuples: Vec<Vec<SentimentTuple>>) -> Vec<Sentence> {
    sentences
        .iter()
        .zip(tuples)
        .map(|(s, t)| Sentence {
            gold: t,
            ..s.clone()
        })
        .collect()
}

fn cmd_synth(ctx: &Ctx, cli: &Cli, a: &SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig {
        count: a.count,
        ..SynthConfig::default()
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = a.overlap {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Config(format!("--overlap {f} outside [0, 1]")));
        }
        cfg.overlap_fraction = f;
    }
    let _ = ctx;
    write_output(
        a.out.as_deref(),
        &write_canonical(&generate_synthetic(&cfg))?,
    )
}

fn cmd_encode(ctx: &Ctx, a: &EncodeArgs) -> Result<()> {
    let records: Vec<EncodedRecord> = ctx
        .corpus(&a.input)?
        .iter()
        .map(|s| {
            Ok(EncodedRecord {
                sent_id: s.sent_id.clone(),
                tokens: s.tokens.clone(),
                cells: encode(s)?,
            })
        })
        .collect::<Result<_>>()?;
    write_output(a.out.as_deref(), &serde_json::to_string_pretty(&records)?)
}

fn cmd_decode(a: &DecodeArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input)
        .map_err(|e| Error::io(format!("reading {}", a.input.display()), e))?;
    let records: Vec<EncodedRecord> = serde_json::from_str(&text)?;
    let sentences: Vec<Sentence> = records
        .into_iter()
        .map(|r| {
            let tokens = if r.tokens.is_empty() {
                (0..r.cells.tokens()).map(|i| format!("t{i}")).collect()
            } else {
                r.tokens
            };
            if tokens.len() != r.cells.tokens() {
                return Err(Error::data(
                    &r.sent_id,
                    format!(
                        "{} tokens but cell set covers {}",
                        tokens.len(),
                        r.cells.tokens()
                    ),
                ));
            }
            Ok(Sentence::new(r.sent_id, tokens, decode(&r.cells)))
        })
        .collect::<Result<_>>()?;
    write_output(a.out.as_deref(), &write_canonical(&sentences)?)
}

fn train_one(
    ctx: &Ctx,
    train: &[Sentence],
    dev: &[Sentence],
    cfg: &TrainConfig,
    embeddings: Option<&Path>,
    out: &Path,
) -> Result<(Option<usize>, Option<f64>)> {
    let mut model = Tgls::new(ctx.config.model.clone(), Vocab::build(train), cfg.seed)?;
    if let Some(p) = embeddings {
        let n = model.load_static_embeddings(p)?;
        log::info!("loaded {n} static word vectors");
    }
    let outcome = train_model(model, train, dev, cfg, &mut |_| {})?;
    outcome.model.save(out)?;
    write_history(&out.join("history.jsonl"), &outcome.history)?;
    let effective = RunConfig {
        train: cfg.clone(),
        ..ctx.config.clone()
    };
    write_output(Some(&out.join("config.toml")), &effective.to_toml())?;
    Ok((outcome.best_epoch, outcome.best_dev_sf1))
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let mut cfg = ctx.config.train.clone();
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = a.lr {
        cfg.lr = lr;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    if let [alpha] = a.alpha[..] {
        cfg.alpha = alpha;
    }
    cfg.validate()?;
    let all = ctx.corpus(&a.train)?;
    let (train, dev) = match &a.dev {
        Some(p) => (all, ctx.corpus(p)?),
        None => split_dev(&all, cfg.dev_fraction, cfg.seed),
    };
    if train.is_empty() {
        return Err(Error::data("<train>", "training corpus is empty"));
    }

    if a.alpha.len() <= 1 {
        let (epoch, sf1) = train_one(ctx, &train, &dev, &cfg, a.embeddings.as_deref(), &a.out)?;
        let sf1 = sf1.map_or("-".into(), |v| format!("{v:.4}"));
        let epoch = epoch.map_or("-".into(), |e| e.to_string());
        println!(
            "best epoch {epoch}, dev SF1 {sf1}; model written to {}",
            a.out.display()
        );
        return Ok(());
    }

    if a.embeddings.is_some() {
        return Err(Error::Config(
            "--embeddings is not supported together with an α list".into(),
        ));
    }
    let test = a.test.as_deref().map(|p| ctx.corpus(p)).transpose()?;
    let rows: Vec<SweepRow> = alpha_sweep(
        &train,
        &dev,
        test.as_deref(),
        &ctx.config.model,
        &cfg,
        &a.alpha,
        &mut |alpha, outcome| {
            let dir = a.out.join(format!("alpha-{alpha}"));
            outcome.model.save(&dir)?;
            write_history(&dir.join("history.jsonl"), &outcome.history)
        },
    )?;
    let table = sweep_table(&rows);
    write_output(
        Some(&a.out.join("sweep.json")),
        &serde_json::to_string_pretty(&rows)?,
    )?;
    write_output(Some(&a.out.join("sweep.txt")), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_predict(ctx: &Ctx, a: &PredictArgs) -> Result<()> {
    let model = Tgls::load(&a.model)?;
    let sentences = ctx.corpus(&a.input)?;
    let tuples = model.predict_all(&sentences)?;
    if let Some(path) = &a.dump_scores {
        let dumps: Vec<serde_json::Value> = sentences
            .iter()
            .map(|s| Ok(model.scores(s)?.to_json(s)))
            .collect::<Result<_>>()?;
        write_output(Some(path), &serde_json::to_string(&dumps)?)?;
    }
    write_output(
        a.out.as_deref(),
        &write_canonical(&with_tuples(&sentences, tuples))?,
    )
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let gold = ctx.corpus(&a.gold)?;
    let pred = ctx.corpus(&a.pred)?;
    let mut by_id = std::collections::HashMap::new();
    for s in &pred {
        if by_id.insert(s.sent_id.as_str(), &s.gold).is_some() {
            return Err(Error::data(
                &s.sent_id,
                "duplicate sentence id in predictions",
            ));
        }
    }
    let known: std::collections::HashSet<&str> = gold.iter().map(|s| s.sent_id.as_str()).collect();
    if let Some(s) = pred.iter().find(|s| !known.contains(s.sent_id.as_str())) {
        return Err(Error::data(
            &s.sent_id,
            "prediction for a sentence absent from gold",
        ));
    }
    let p: Vec<Vec<SentimentTuple>> = gold
        .iter()
        .map(|g| {
            by_id
                .get(g.sent_id.as_str())
                .map(|t| t.to_vec())
                .unwrap_or_default()
        })
        .collect();
    let g: Vec<Vec<SentimentTuple>> = gold.iter().map(|s| s.gold.clone()).collect();
    let report = evaluate_with_buckets(&p, &g);
    print!("{}", report.table());
    if let Some(out) = &a.out {
        write_output(Some(out), &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_gradcheck(ctx: &Ctx, a: &GradcheckArgs) -> Result<()> {
    let report = gradcheck(&ctx.config.model, a.alpha, ctx.config.train.seed)?;
    let worst = report
        .worst
        .as_ref()
        .map_or("-".into(), |(n, i)| format!("{n}[{i}]"));
    println!(
        "checked {} entries; max relative error {:.3e} at {worst}; tolerance {:.0e}",
        report.checked, report.max_rel_error, report.tolerance
    );
    if report.passed() {
        println!("PASS");
        Ok(())
    } else {
        for f in report.failures.iter().take(10) {
            println!(
                "  {}[{}]: analytic {:.6e} numeric {:.6e} rel {:.3e}",
                f.param, f.index, f.analytic, f.numeric, f.rel_error
            );
        }
        println!("FAIL");
        Err(Error::GradCheck {
            failures: report.failures.len(),
            tolerance: report.tolerance,
            max_rel_error: report.max_rel_error,
        })
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let ctx = Ctx::from_cli(cli)?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(&ctx, cli, a),
        Command::Encode(a) => cmd_encode(&ctx, a),
        Command::Decode(a) => cmd_decode(a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Gradcheck(a) => cmd_gradcheck(&ctx, a),
        Command::Config => write_output(None, &ctx.config.to_toml()),
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
