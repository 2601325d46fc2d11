//! Reader for the public structured-sentiment JSON release format.
//!
//! Each record carries `sent_id`, `text` and `opinions`; every opinion holds
//! `Source`, `Target` and `Polar_expression` as `[[surface...], ["b:e"...]]`
//! character-offset pairs plus a `Polarity` string. `Intensity` is ignored.
//! An optional `tokens` array bypasses the built-in tokenizer, and optional
//! `pos_tags` / `lemmas` arrays are passed through.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use super::tokenize::{align_tokens, tokenize, Token};
use super::{Polarity, Sentence, SentimentTuple, Span, DEFAULT_POS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// First bad record aborts the load.
    #[default]
    Strict,
    /// Bad records are skipped and reported.
    Lenient,
}

/// Maps dataset polarity strings onto the three-way scheme. Values missing
/// from the table are rejected rather than guessed.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarityMap {
    table: BTreeMap<String, Polarity>,
}

impl Default for PolarityMap {
    fn default() -> Self {
        let mut table = BTreeMap::new();
        for p in Polarity::ALL {
            table.insert(p.as_str().to_string(), p);
            table.insert(p.as_str().to_lowercase(), p);
        }
        Self { table }
    }
}

impl PolarityMap {
    pub fn insert(&mut self, raw: impl Into<String>, polarity: Polarity) {
        self.table.insert(raw.into(), polarity);
    }

    pub fn get(&self, raw: &str) -> Option<Polarity> {
        self.table.get(raw).copied()
    }

    /// Extends the default table with a JSON object such as
    /// `{"Standard": "Neutral", "both": "Neutral"}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let extra: BTreeMap<String, Polarity> = serde_json::from_str(&text)?;
        let mut map = Self::default();
        for (k, v) in extra {
            map.insert(k, v);
        }
        Ok(map)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestReport {
    pub sentences: Vec<Sentence>,
    /// `(sent_id, reason)` for records dropped in lenient mode.
    pub skipped: Vec<(String, String)>,
}

pub fn load_dataset(path: &Path, mode: IngestMode, polarity: &PolarityMap) -> Result<IngestReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_dataset(&text, mode, polarity)
}

pub fn parse_dataset(json: &str, mode: IngestMode, polarity: &PolarityMap) -> Result<IngestReport> {
    let root: Value = serde_json::from_str(json)?;
    let records = root
        .as_array()
        .ok_or_else(|| Error::data("<file>", "top level must be a JSON array"))?;
    let mut report = IngestReport::default();
    for (i, record) in records.iter().enumerate() {
        let sent_id = record
            .get("sent_id")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{i}"));
        match parse_record(record, &sent_id, polarity) {
            Ok(s) => report.sentences.push(s),
            Err(e) => match mode {
                IngestMode::Strict => return Err(e),
                IngestMode::Lenient => report.skipped.push((sent_id, e.to_string())),
            },
        }
    }
    Ok(report)
}

fn string_list(v: &Value, sent_id: &str, what: &str) -> Result<Vec<String>> {
    v.as_array()
        .ok_or_else(|| Error::data(sent_id, format!("{what} must be an array")))?
        .iter()
        .map(|x| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::data(sent_id, format!("{what} must contain strings")))
        })
        .collect()
}

fn parse_record(record: &Value, sent_id: &str, polarity: &PolarityMap) -> Result<Sentence> {
    let text = record
        .get("text")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::data(sent_id, "missing string field `text`"))?;
    let tokens: Vec<Token> = match record.get("tokens") {
        Some(v) => {
            let words = string_list(v, sent_id, "tokens")?;
            align_tokens(text, &words)
                .ok_or_else(|| Error::data(sent_id, "pre-tokenized words not found in text"))?
        }
        None => tokenize(text),
    };
    if tokens.is_empty() {
        return Err(Error::data(sent_id, "text has no tokens"));
    }
    let text_len = text.chars().count();
    let opinions = record
        .get("opinions")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::data(sent_id, "missing array field `opinions`"))?;

    let mut gold = Vec::with_capacity(opinions.len());
    for op in opinions {
        let field = |name: &str| -> Result<Option<Span>> {
            let v = op
                .get(name)
                .ok_or_else(|| Error::data(sent_id, format!("opinion lacks `{name}`")))?;
            annotation_span(v, name, &tokens, text_len, sent_id)
        };
        let holder = field("Source")?;
        let target = field("Target")?;
        let expression = field("Polar_expression")?
            .ok_or_else(|| Error::data(sent_id, "opinion has an empty Polar_expression"))?;
        let raw = op
            .get("Polarity")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::data(sent_id, "opinion lacks a string `Polarity`"))?;
        let pol = polarity
            .get(raw)
            .ok_or_else(|| Error::data(sent_id, format!("unknown polarity {raw:?}")))?;
        gold.push(SentimentTuple::new(holder, expression, target, pol));
    }

    let words: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
    let pos_tags = match record.get("pos_tags") {
        Some(v) => string_list(v, sent_id, "pos_tags")?,
        None => vec![DEFAULT_POS.to_string(); words.len()],
    };
    let lemmas = match record.get("lemmas") {
        Some(v) => string_list(v, sent_id, "lemmas")?,
        None => words.clone(),
    };
    let sentence = Sentence {
        sent_id: sent_id.to_string(),
        tokens: words,
        pos_tags,
        lemmas,
        gold,
    };
    sentence.validate()?;
    Ok(sentence)
}

/// Token span covering every token whose character range overlaps any of
/// the annotated `b:e` fragments. Empty annotations yield `None`.
fn annotation_span(
    v: &Value,
    name: &str,
    tokens: &[Token],
    text_len: usize,
    sent_id: &str,
) -> Result<Option<Span>> {
    let parts = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::data(sent_id, format!("{name} must be [surfaces, offsets]")))?;
    let offsets = string_list(&parts[1], sent_id, name)?;
    if offsets.is_empty() {
        return Ok(None);
    }
    let mut covered: Option<Span> = None;
    for off in &offsets {
        let (b, e) = off
            .split_once(':')
            .and_then(|(b, e)| {
                Some((
                    b.trim().parse::<usize>().ok()?,
                    e.trim().parse::<usize>().ok()?,
                ))
            })
            .ok_or_else(|| Error::data(sent_id, format!("{name}: malformed offset {off:?}")))?;
        if b >= e || e > text_len {
            return Err(Error::data(
                sent_id,
                format!("{name}: offset {off:?} outside text of {text_len} characters"),
            ));
        }
        for (i, t) in tokens.iter().enumerate() {
            if t.start < e && b < t.end {
                covered = Some(match covered {
                    None => Span::single(i),
                    Some(s) => Span::new(s.start.min(i), s.end.max(i)),
                });
            }
        }
    }
    covered
        .map(Some)
        .ok_or_else(|| Error::data(sent_id, format!("{name}: annotation covers no token")))
}
