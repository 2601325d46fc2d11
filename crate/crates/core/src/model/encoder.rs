use std::fs;
use std::path::Path;

use super::layers::{Init, Noise};
use super::vocab::{EncodedSentence, Index, Vocab};
use super::ModelConfig;
use crate::tensor::{ParamId, Session, Tensor, Var};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LstmDirection {
    /// `[input, 4·d]`, gate order input, forget, cell, output.
    pub w_ih: ParamId,
    /// `[d, 4·d]`.
    pub w_hh: ParamId,
    pub b: ParamId,
}

#[derive(Clone, Copy, Debug)]
pub struct BiLstmLayer {
    pub forward: LstmDirection,
    pub backward: LstmDirection,
}

#[derive(Clone, Debug)]
pub struct EncoderParams {
    pub word: ParamId,
    pub pos: Option<ParamId>,
    pub lemma: Option<ParamId>,
    pub chars: ParamId,
    pub conv_w: ParamId,
    pub conv_b: ParamId,
    /// `[1, d_in]`, row 0 of every embedded sentence.
    pub sentinel: ParamId,
    pub layers: Vec<BiLstmLayer>,
    char_window: usize,
    direction_size: usize,
    embedding_dropout: f64,
    dropout: f64,
}

impl EncoderParams {
    pub(crate) fn new(init: &mut Init, cfg: &ModelConfig, vocab: &Vocab) -> Self {
        let word = init.weight("encoder.word", vocab.words.len(), cfg.word_dim);
        let pos =
            (cfg.pos_dim > 0).then(|| init.weight("encoder.pos", vocab.pos.len(), cfg.pos_dim));
        let lemma = (cfg.lemma_dim > 0)
            .then(|| init.weight("encoder.lemma", vocab.lemmas.len(), cfg.lemma_dim));
        let chars = init.weight("encoder.chars", vocab.chars.len(), cfg.char_dim);
        let conv_w = init.weight(
            "encoder.char_cnn.w",
            cfg.char_window * cfg.char_dim,
            cfg.char_filters,
        );
        let conv_b = init.bias("encoder.char_cnn.b", cfg.char_filters);
        let sentinel = init.weight("encoder.sentinel", 1, cfg.input_dim());
        let d = cfg.hidden_size / 2;
        let mut layers = Vec::with_capacity(cfg.lstm_layers);
        for l in 0..cfg.lstm_layers {
            let input = if l == 0 {
                cfg.input_dim()
            } else {
                cfg.hidden_size
            };
            let mut direction = |dir: &str| LstmDirection {
                w_ih: init.weight(format!("encoder.lstm.{l}.{dir}.w_ih"), input, 4 * d),
                w_hh: init.weight(format!("encoder.lstm.{l}.{dir}.w_hh"), d, 4 * d),
                b: init.bias(format!("encoder.lstm.{l}.{dir}.b"), 4 * d),
            };
            let forward = direction("fwd");
            let backward = direction("bwd");
            layers.push(BiLstmLayer { forward, backward });
        }
        Self {
            word,
            pos,
            lemma,
            chars,
            conv_w,
            conv_b,
            sentinel,
            layers,
            char_window: cfg.char_window,
            direction_size: d,
            embedding_dropout: cfg.embedding_dropout,
            dropout: cfg.dropout,
        }
    }

    /// `[n+1, d_in]`: the sentinel row followed by word ⊕ POS ⊕ lemma ⊕ char
    /// features of each token.
    pub fn embed(&self, s: &mut Session, sent: &EncodedSentence, noise: &mut Noise) -> Result<Var> {
        let mut parts = Vec::with_capacity(4);
        let table = s.param(self.word);
        parts.push(s.gather_rows(table, &sent.words)?);
        if let Some(p) = self.pos {
            let table = s.param(p);
            parts.push(s.gather_rows(table, &sent.pos)?);
        }
        if let Some(p) = self.lemma {
            let table = s.param(p);
            parts.push(s.gather_rows(table, &sent.lemmas)?);
        }
        let (table, w, b) = (
            s.param(self.chars),
            s.param(self.conv_w),
            s.param(self.conv_b),
        );
        let mut char_rows = Vec::with_capacity(sent.len());
        for ids in &sent.chars {
            let x = s.gather_rows(table, ids)?;
            char_rows.push(s.conv1d_maxpool(x, w, b, self.char_window)?);
        }
        let mut rows = vec![s.param(self.sentinel)];
        if !sent.is_empty() {
            parts.push(s.concat_rows(&char_rows)?);
            rows.push(s.concat_cols(&parts)?);
        }
        let x = s.concat_rows(&rows)?;
        noise.apply(s, x, self.embedding_dropout)
    }

    /// Stacked bidirectional LSTM over all rows, sentinel included.
    pub fn contextualize(&self, s: &mut Session, x: Var, noise: &mut Noise) -> Result<Var> {
        let mut h = x;
        for (l, layer) in self.layers.iter().enumerate() {
            if l > 0 {
                h = noise.apply(s, h, self.dropout)?;
            }
            let f = self.run_direction(s, &layer.forward, h, false)?;
            let b = self.run_direction(s, &layer.backward, h, true)?;
            h = s.concat_cols(&[f, b])?;
        }
        Ok(h)
    }

    fn run_direction(
        &self,
        s: &mut Session,
        p: &LstmDirection,
        x: Var,
        reverse: bool,
    ) -> Result<Var> {
        let d = self.direction_size;
        let (w_ih, w_hh, b) = (s.param(p.w_ih), s.param(p.w_hh), s.param(p.b));
        let projected = s.affine(x, w_ih, b)?;
        let len = s.shape(x)[0];
        let mut outputs = vec![None; len];
        let mut state: Option<(Var, Var)> = None;
        let order: Vec<usize> = if reverse {
            (0..len).rev().collect()
        } else {
            (0..len).collect()
        };
        for t in order {
            let mut gates = s.gather_rows(projected, &[t])?;
            if let Some((h, _)) = state {
                let rec = s.matmul(h, w_hh)?;
                gates = s.add(gates, rec)?;
            }
            let i = s.slice_cols(gates, 0, d)?;
            let f = s.slice_cols(gates, d, d)?;
            let g = s.slice_cols(gates, 2 * d, d)?;
            let o = s.slice_cols(gates, 3 * d, d)?;
            let (i, g, o) = (s.sigmoid(i), s.tanh(g), s.sigmoid(o));
            let mut c = s.mul(i, g)?;
            if let Some((_, c_prev)) = state {
                let f = s.sigmoid(f);
                let kept = s.mul(f, c_prev)?;
                c = s.add(kept, c)?;
            }
            let tc = s.tanh(c);
            let h = s.mul(o, tc)?;
            outputs[t] = Some(h);
            state = Some((h, c));
        }
        let rows: Vec<Var> = outputs.into_iter().flatten().collect();
        Ok(s.concat_rows(&rows)?)
    }
}

/// Overwrites rows of `table` for words present in `index` from a text file
/// of `token v1 … vd` lines. Returns the number of rows replaced.
pub fn load_static_embeddings(path: &Path, index: &Index, table: &mut Tensor) -> Result<usize> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_static_embeddings(&text, index, table)
}

pub fn parse_static_embeddings(text: &str, index: &Index, table: &mut Tensor) -> Result<usize> {
    let dim = table.cols();
    let mut replaced = 0;
    for (line_no, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<f64> = fields
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("embedding line {}: {e}", line_no + 1)))?;
        if values.len() != dim {
            return Err(Error::Config(format!(
                "embedding line {}: expected dimension {dim}, found {}",
                line_no + 1,
                values.len()
            )));
        }
        if !index.contains(token) {
            continue;
        }
        let row = index.get(token);
        table.data_mut()[row * dim..(row + 1) * dim].copy_from_slice(&values);
        replaced += 1;
    }
    Ok(replaced)
}
