//! Encoder, multi-view token graph and adaptive-threshold prediction layer.

mod config;
pub mod encoder;
pub mod graph_layer;
mod layers;
pub mod prediction;
mod vocab;

pub use config::{ModelConfig, Preset};
pub use encoder::{load_static_embeddings, parse_static_embeddings, EncoderParams};
pub use graph_layer::{GraphParams, ViewId};
pub use layers::{rotary_scores, Linear, Mlp, Noise};
pub use prediction::{fuse, predict_labels, PredictionParams};
pub use vocab::{EncodedSentence, Index, Vocab, UNK};

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Sentence, SentimentTuple};
use crate::labeling::{decode, EssentialLabel, LabelCellSet};
use crate::tensor::{read_checkpoint, write_checkpoint, ParamStore, Session, Tensor, Var};
use crate::{Error, Result};
use layers::Init;

/// Graph handles of one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub h: Var,
    pub u: Var,
    pub c: Var,
    /// `S^G`, indexed by `ViewId::index`.
    pub view_scores: [Var; 4],
    pub graph_threshold: Var,
    /// `S^P`, indexed by `EssentialLabel::index`.
    pub label_scores: Vec<Var>,
    pub label_threshold: Var,
}

/// Concrete score matrices of one sentence, all `[n+1, n+1]`.
#[derive(Clone, Debug)]
pub struct ScoreMaps {
    pub view_scores: Vec<Tensor>,
    pub attention: Vec<Tensor>,
    pub graph_threshold: Tensor,
    pub label_scores: Vec<Tensor>,
    pub label_threshold: Tensor,
}

#[derive(Serialize)]
struct ScoreDump<'a> {
    sent_id: &'a str,
    tokens: &'a [String],
    views: BTreeMap<&'static str, Vec<Vec<f64>>>,
    attention: BTreeMap<&'static str, Vec<Vec<f64>>>,
    graph_threshold: Vec<Vec<f64>>,
    labels: BTreeMap<&'static str, Vec<Vec<f64>>>,
    label_threshold: Vec<Vec<f64>>,
}

impl ScoreMaps {
    pub fn to_json(&self, sentence: &Sentence) -> serde_json::Value {
        let views = |ts: &[Tensor]| {
            ViewId::ALL
                .iter()
                .map(|v| (v.name(), ts[v.index()].to_rows()))
                .collect()
        };
        let dump = ScoreDump {
            sent_id: &sentence.sent_id,
            tokens: &sentence.tokens,
            views: views(&self.view_scores),
            attention: views(&self.attention),
            graph_threshold: self.graph_threshold.to_rows(),
            labels: EssentialLabel::ALL
                .iter()
                .map(|l| (l.name(), self.label_scores[l.index()].to_rows()))
                .collect(),
            label_threshold: self.label_threshold.to_rows(),
        };
        serde_json::to_value(dump).expect("score dump serializes")
    }

    pub fn cells(&self) -> LabelCellSet {
        predict_labels(&self.label_scores, &self.label_threshold)
    }
}

#[derive(Clone, Debug)]
pub struct Tgls {
    config: ModelConfig,
    vocab: Vocab,
    params: ParamStore,
    pub encoder: EncoderParams,
    pub graph: GraphParams,
    pub prediction: PredictionParams,
}

impl Tgls {
    pub fn new(config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = Init {
            store: &mut params,
            rng: &mut rng,
        };
        let encoder = EncoderParams::new(&mut init, &config, &vocab);
        let graph = GraphParams::new(&mut init, &config);
        let prediction = PredictionParams::new(&mut init, &config);
        Ok(Self {
            config,
            vocab,
            params,
            encoder,
            graph,
            prediction,
        })
    }

    /// Rebuilds the layout for `config`/`vocab` and adopts `params`, which
    /// must hold exactly the same names and shapes in the same order.
    pub fn with_params(config: ModelConfig, vocab: Vocab, params: ParamStore) -> Result<Self> {
        let mut model = Self::new(config, vocab, 0)?;
        if model.params.len() != params.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} parameters, model expects {}",
                params.len(),
                model.params.len()
            )));
        }
        for ((_, a, ta), (_, b, tb)) in model.params.iter().zip(params.iter()) {
            if a != b || ta.shape() != tb.shape() {
                return Err(Error::Config(format!(
                    "checkpoint parameter {b} {:?} does not match model parameter {a} {:?}",
                    tb.shape(),
                    ta.shape()
                )));
            }
        }
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn encode(&self, sentence: &Sentence) -> EncodedSentence {
        self.vocab.encode(sentence)
    }

    /// Full forward pass; `offset` shifts every rotary position.
    pub fn forward(
        &self,
        s: &mut Session,
        sent: &EncodedSentence,
        noise: &mut Noise,
        offset: i64,
    ) -> Result<Forward> {
        let x = self.encoder.embed(s, sent, noise)?;
        let h = self.encoder.contextualize(s, x, noise)?;
        let h = noise.apply(s, h, self.config.dropout)?;
        let view_scores = self.graph.all_scores(s, h, offset)?;
        let graph_threshold = self.graph.hidden_thresholds(s, h, offset)?;
        let u = self.graph.multi_hop(s, h, &view_scores, noise)?;
        let c = fuse(s, h, u)?;
        let label_scores = self.prediction.score_essential(s, c, offset)?;
        let label_threshold = self.prediction.adaptive_threshold(s, h, offset)?;
        Ok(Forward {
            h,
            u,
            c,
            view_scores,
            graph_threshold,
            label_scores,
            label_threshold,
        })
    }

    /// Deterministic (dropout off) score matrices.
    pub fn scores(&self, sentence: &Sentence) -> Result<ScoreMaps> {
        let enc = self.encode(sentence);
        let mut s = Session::new(&self.params);
        let f = self.forward(&mut s, &enc, &mut Noise::off(), 0)?;
        let attention = self.graph.attention(&mut s, &f.view_scores)?;
        let get = |v: &Var| s.value(*v).clone();
        Ok(ScoreMaps {
            view_scores: f.view_scores.iter().map(get).collect(),
            attention: attention.iter().map(get).collect(),
            graph_threshold: get(&f.graph_threshold),
            label_scores: f.label_scores.iter().map(get).collect(),
            label_threshold: get(&f.label_threshold),
        })
    }

    pub fn predict_cells(&self, sentence: &Sentence) -> Result<LabelCellSet> {
        Ok(self.scores(sentence)?.cells())
    }

    pub fn predict(&self, sentence: &Sentence) -> Result<Vec<SentimentTuple>> {
        Ok(decode(&self.predict_cells(sentence)?))
    }

    /// Predicts every sentence, fanning out across rayon workers.
    pub fn predict_all(&self, sentences: &[Sentence]) -> Result<Vec<Vec<SentimentTuple>>> {
        sentences.par_iter().map(|s| self.predict(s)).collect()
    }

    /// Replaces word-table rows from a static embedding file and freezes the
    /// table when the configuration asks for it.
    pub fn load_static_embeddings(&mut self, path: &Path) -> Result<usize> {
        let id = self.encoder.word;
        let replaced = load_static_embeddings(path, &self.vocab.words, self.params.get_mut(id))?;
        if self.config.freeze_word_embeddings {
            self.params.set_frozen(id, true);
        }
        Ok(replaced)
    }

    /// Writes `model.json`, the vocabulary files and `params.ckpt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let cfg = serde_json::to_string_pretty(&self.config)?;
        let cfg_path = dir.join("model.json");
        fs::write(&cfg_path, cfg)
            .map_err(|e| Error::io(format!("writing {}", cfg_path.display()), e))?;
        self.vocab.save(dir)?;
        let path = dir.join("params.ckpt");
        let file = File::create(&path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        write_checkpoint(&self.params, BufWriter::new(file))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let cfg_path = dir.join("model.json");
        let text = fs::read_to_string(&cfg_path)
            .map_err(|e| Error::io(format!("reading {}", cfg_path.display()), e))?;
        let config: ModelConfig = serde_json::from_str(&text)?;
        let vocab = Vocab::load(dir)?;
        let path = dir.join("params.ckpt");
        let file =
            File::open(&path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let params = read_checkpoint(BufReader::new(file))
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::with_params(config, vocab, params)
    }
}
