//! Token-indexed corpus format:
//! `[{"sent_id", "tokens", "tuples": [{"holder", "target", "expression", "polarity"}]}]`
//! with optional `pos_tags` / `lemmas` columns (omitted when defaulted).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ingest::{parse_dataset, IngestMode, IngestReport, PolarityMap};
use super::{Sentence, SentimentTuple, DEFAULT_POS};
use crate::{Error, Result};

pub type CanonicalTuple = SentimentTuple;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSentence {
    pub sent_id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<String>>,
    pub tuples: Vec<CanonicalTuple>,
}

impl From<&Sentence> for CanonicalSentence {
    fn from(s: &Sentence) -> Self {
        let pos_tags = (!s.pos_tags.iter().all(|p| p == DEFAULT_POS)).then(|| s.pos_tags.clone());
        let lemmas = (s.lemmas != s.tokens).then(|| s.lemmas.clone());
        Self {
            sent_id: s.sent_id.clone(),
            tokens: s.tokens.clone(),
            pos_tags,
            lemmas,
            tuples: s.gold.clone(),
        }
    }
}

impl TryFrom<CanonicalSentence> for Sentence {
    type Error = Error;

    fn try_from(c: CanonicalSentence) -> Result<Self> {
        let n = c.tokens.len();
        let s = Sentence {
            pos_tags: c
                .pos_tags
                .unwrap_or_else(|| vec![DEFAULT_POS.to_string(); n]),
            lemmas: c.lemmas.unwrap_or_else(|| c.tokens.clone()),
            sent_id: c.sent_id,
            tokens: c.tokens,
            gold: c.tuples,
        };
        s.validate()?;
        Ok(s)
    }
}

pub fn write_canonical(sentences: &[Sentence]) -> Result<String> {
    let records: Vec<CanonicalSentence> = sentences.iter().map(CanonicalSentence::from).collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

pub fn read_canonical(json: &str, mode: IngestMode) -> Result<IngestReport> {
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
        let parsed = CanonicalSentence::deserialize(record)
            .map_err(|e| Error::data(&sent_id, e.to_string()))
            .and_then(Sentence::try_from);
        match (parsed, mode) {
            (Ok(s), _) => report.sentences.push(s),
            (Err(e), IngestMode::Strict) => return Err(e),
            (Err(e), IngestMode::Lenient) => report.skipped.push((sent_id, e.to_string())),
        }
    }
    Ok(report)
}

/// Reads either the public release format (records with `opinions`) or the
/// canonical format (records with `tuples`), detected from the first record.
pub fn read_corpus(path: &Path, mode: IngestMode, polarity: &PolarityMap) -> Result<IngestReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let root: Value = serde_json::from_str(&text)?;
    let is_release = root
        .as_array()
        .and_then(|a| a.first())
        .is_some_and(|r| r.get("opinions").is_some());
    if is_release {
        parse_dataset(&text, mode, polarity)
    } else {
        read_canonical(&text, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Polarity, Span};

    #[test]
    fn canonical_json_shape() {
        let s = Sentence::from_words(
            "s1",
            &["I", "like", "it"],
            vec![SentimentTuple::new(
                Some(Span::single(0)),
                Span::single(1),
                None,
                Polarity::Positive,
            )],
        );
        let json = write_canonical(&[s.clone()]).unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v[0]["tuples"][0]["holder"], serde_json::json!([0, 0]));
        assert_eq!(v[0]["tuples"][0]["target"], Value::Null);
        assert_eq!(v[0]["tuples"][0]["polarity"], "Positive");
        assert!(v[0].get("pos_tags").is_none());
        let back = read_canonical(&json, IngestMode::Strict).unwrap();
        assert_eq!(back.sentences, vec![s]);
    }

    #[test]
    fn out_of_range_span_rejected_or_skipped() {
        let json = r#"[{"sent_id": "z", "tokens": ["a"], "tuples": [
            {"holder": null, "target": null, "expression": [0, 3], "polarity": "Negative"}]}]"#;
        assert!(read_canonical(json, IngestMode::Strict).is_err());
        let r = read_canonical(json, IngestMode::Lenient).unwrap();
        assert!(r.sentences.is_empty());
        assert_eq!(r.skipped[0].0, "z");
    }
}
