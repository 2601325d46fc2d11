//! Sentences, sentiment tuples and corpus I/O.

mod canonical;
mod ingest;
mod synth;
mod tokenize;

pub use canonical::{
    read_canonical, read_corpus, write_canonical, CanonicalSentence, CanonicalTuple,
};
pub use ingest::{load_dataset, parse_dataset, IngestMode, IngestReport, PolarityMap};
pub use synth::{generate_synthetic, SynthConfig};
pub use tokenize::{tokenize, Token};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_POS: &str = "X";

/// Inclusive token span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Panics if `start > end`.
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "span start {start} after end {end}");
        Self { start, end }
    }

    pub fn single(index: usize) -> Self {
        Self {
            start: index,
            end: index,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn tokens(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Number of shared tokens.
    pub fn overlap(&self, other: &Span) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if lo <= hi {
            hi - lo + 1
        } else {
            0
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

impl Serialize for Span {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        if start > end {
            return Err(serde::de::Error::custom(format!(
                "span start {start} after end {end}"
            )));
        }
        Ok(Span { start, end })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Neutral,
    Negative,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Neutral, Polarity::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "Positive",
            Polarity::Neutral => "Neutral",
            Polarity::Negative => "Negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(holder, expression, target, polarity)`; holder and target may be absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentimentTuple {
    pub holder: Option<Span>,
    pub target: Option<Span>,
    pub expression: Span,
    pub polarity: Polarity,
}

impl SentimentTuple {
    pub fn new(
        holder: Option<Span>,
        expression: Span,
        target: Option<Span>,
        polarity: Polarity,
    ) -> Self {
        Self {
            holder,
            target,
            expression,
            polarity,
        }
    }

    fn sort_key(&self) -> (Span, Option<Span>, Option<Span>, Polarity) {
        (self.expression, self.holder, self.target, self.polarity)
    }

    pub fn spans(&self) -> impl Iterator<Item = Span> {
        [self.holder, Some(self.expression), self.target]
            .into_iter()
            .flatten()
    }

    /// Distance from the leftmost to the rightmost token of the tuple.
    pub fn extent(&self) -> usize {
        let lo = self.spans().map(|s| s.start).min().unwrap_or(0);
        let hi = self.spans().map(|s| s.end).max().unwrap_or(0);
        hi - lo
    }

    pub fn max_index(&self) -> usize {
        self.spans().map(|s| s.end).max().unwrap_or(0)
    }
}

impl PartialOrd for SentimentTuple {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Expression first, then holder, then target.
impl Ord for SentimentTuple {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// Sorts and removes duplicates in place.
pub fn normalize_tuples(tuples: &mut Vec<SentimentTuple>) {
    tuples.sort();
    tuples.dedup();
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub sent_id: String,
    pub tokens: Vec<String>,
    pub pos_tags: Vec<String>,
    pub lemmas: Vec<String>,
    pub gold: Vec<SentimentTuple>,
}

impl Sentence {
    /// Builds a sentence with default POS tags and lemmas equal to the tokens.
    pub fn new(sent_id: impl Into<String>, tokens: Vec<String>, gold: Vec<SentimentTuple>) -> Self {
        let pos_tags = vec![DEFAULT_POS.to_string(); tokens.len()];
        let lemmas = tokens.clone();
        Self {
            sent_id: sent_id.into(),
            tokens,
            pos_tags,
            lemmas,
            gold,
        }
    }

    pub fn from_words(sent_id: &str, words: &[&str], gold: Vec<SentimentTuple>) -> Self {
        Self::new(sent_id, words.iter().map(|w| w.to_string()).collect(), gold)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(Error::data(&self.sent_id, "sentence has no tokens"));
        }
        if self.pos_tags.len() != n || self.lemmas.len() != n {
            return Err(Error::data(
                &self.sent_id,
                format!(
                    "feature columns misaligned: {} tokens, {} POS tags, {} lemmas",
                    n,
                    self.pos_tags.len(),
                    self.lemmas.len()
                ),
            ));
        }
        for t in &self.gold {
            if let Some(span) = t.spans().find(|s| s.end >= n) {
                return Err(Error::data(
                    &self.sent_id,
                    format!("span {span} outside sentence of {n} tokens"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_overlap_counts() {
        let a = Span::new(3, 5);
        assert_eq!(a.overlap(&Span::new(3, 4)), 2);
        assert_eq!(a.overlap(&Span::new(6, 8)), 0);
        assert!(a.overlaps(&Span::single(5)));
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn span_json_is_pair_and_rejects_inverted() {
        assert_eq!(serde_json::to_string(&Span::new(1, 2)).unwrap(), "[1,2]");
        assert!(serde_json::from_str::<Span>("[3,1]").is_err());
    }

    #[test]
    fn tuple_extent_spans_leftmost_to_rightmost() {
        let t = SentimentTuple::new(
            Some(Span::new(0, 1)),
            Span::new(3, 5),
            Some(Span::new(7, 10)),
            Polarity::Neutral,
        );
        assert_eq!(t.extent(), 10);
        let lone = SentimentTuple::new(None, Span::new(3, 5), None, Polarity::Neutral);
        assert_eq!(lone.extent(), 2);
    }

    #[test]
    fn validation_catches_bad_spans() {
        let s = Sentence::from_words(
            "a",
            &["good", "food"],
            vec![SentimentTuple::new(
                None,
                Span::new(0, 2),
                None,
                Polarity::Positive,
            )],
        );
        assert!(s.validate().is_err());
        assert!(Sentence::new("b", vec![], vec![]).validate().is_err());
    }
}
