//! Token-pair labels for sentiment tuples.
//!
//! Essential labels sit on upper-triangular cells `(i, j)`, `i <= j`, indexed
//! by token position (no sentinel). Whole labels are three binary matrices in
//! model coordinates, where index 0 is the sentinel and token `t` sits at
//! `t + 1`.

mod decode;
mod encode;

pub use decode::{decode, pair_closure};
pub use encode::{encode, encode_essential, encode_whole};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EssentialLabel {
    Holder,
    Target,
    ExpPositive,
    ExpNeutral,
    ExpNegative,
    ExpHeadToHolderHead,
    ExpTailToHolderTail,
    ExpHeadToTargetHead,
    ExpTailToTargetTail,
}

impl EssentialLabel {
    pub const ALL: [EssentialLabel; 9] = [
        EssentialLabel::Holder,
        EssentialLabel::Target,
        EssentialLabel::ExpPositive,
        EssentialLabel::ExpNeutral,
        EssentialLabel::ExpNegative,
        EssentialLabel::ExpHeadToHolderHead,
        EssentialLabel::ExpTailToHolderTail,
        EssentialLabel::ExpHeadToTargetHead,
        EssentialLabel::ExpTailToTargetTail,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EssentialLabel::Holder => "Holder",
            EssentialLabel::Target => "Target",
            EssentialLabel::ExpPositive => "Exp:Positive",
            EssentialLabel::ExpNeutral => "Exp:Neutral",
            EssentialLabel::ExpNegative => "Exp:Negative",
            EssentialLabel::ExpHeadToHolderHead => "ExpHead->HolderHead",
            EssentialLabel::ExpTailToHolderTail => "ExpTail->HolderTail",
            EssentialLabel::ExpHeadToTargetHead => "ExpHead->TargetHead",
            EssentialLabel::ExpTailToTargetTail => "ExpTail->TargetTail",
        }
    }

    pub fn expression(polarity: Polarity) -> Self {
        match polarity {
            Polarity::Positive => EssentialLabel::ExpPositive,
            Polarity::Neutral => EssentialLabel::ExpNeutral,
            Polarity::Negative => EssentialLabel::ExpNegative,
        }
    }

    pub fn polarity(self) -> Option<Polarity> {
        match self {
            EssentialLabel::ExpPositive => Some(Polarity::Positive),
            EssentialLabel::ExpNeutral => Some(Polarity::Neutral),
            EssentialLabel::ExpNegative => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn is_span(self) -> bool {
        self.index() < 5
    }

    pub fn is_relation(self) -> bool {
        !self.is_span()
    }
}

impl fmt::Display for EssentialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EssentialLabel {
    type Err = String;

    /// Accepts the canonical names; `→` is accepted in place of `->`.
    fn from_str(s: &str) -> Result<Self, String> {
        let normalized = s.replace('→', "->");
        EssentialLabel::ALL
            .into_iter()
            .find(|l| l.name() == normalized)
            .ok_or_else(|| format!("unknown essential label {s:?}"))
    }
}

impl Serialize for EssentialLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for EssentialLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One binary label per supervised hidden-layer matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WholeLabel {
    Span,
    Rel,
    Cls,
}

impl WholeLabel {
    pub const ALL: [WholeLabel; 3] = [WholeLabel::Span, WholeLabel::Rel, WholeLabel::Cls];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Three `size × size` binary matrices in model coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WholeLabels {
    size: usize,
    bits: [Vec<bool>; 3],
}

impl WholeLabels {
    pub fn empty(size: usize) -> Self {
        Self {
            size,
            bits: [
                vec![false; size * size],
                vec![false; size * size],
                vec![false; size * size],
            ],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, label: WholeLabel, i: usize, j: usize) -> bool {
        self.bits[label.index()][i * self.size + j]
    }

    pub fn set(&mut self, label: WholeLabel, i: usize, j: usize) {
        self.bits[label.index()][i * self.size + j] = true;
    }

    /// Positive cells of one matrix in row-major order.
    pub fn positives(&self, label: WholeLabel) -> Vec<(usize, usize)> {
        let n = self.size;
        self.bits[label.index()]
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(k, _)| (k / n, k % n))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|m| m.iter().all(|b| !b))
    }
}

/// Essential cell labels plus the whole-label matrices of one sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CellSetJson", try_from = "CellSetJson")]
pub struct LabelCellSet {
    /// Sentence length including the sentinel.
    n: usize,
    cells: BTreeMap<(usize, usize), BTreeSet<EssentialLabel>>,
    whole: WholeLabels,
}

impl LabelCellSet {
    pub fn new(tokens: usize) -> Self {
        Self {
            n: tokens + 1,
            cells: BTreeMap::new(),
            whole: WholeLabels::empty(tokens + 1),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tokens(&self) -> usize {
        self.n - 1
    }

    /// Adds `label` at token cell `(i, j)`. Panics unless `i <= j < tokens`.
    pub fn insert(&mut self, i: usize, j: usize, label: EssentialLabel) {
        assert!(
            i <= j && j < self.tokens(),
            "cell ({i},{j}) outside upper triangle of {}",
            self.tokens()
        );
        self.cells.entry((i, j)).or_default().insert(label);
    }

    pub fn labels(&self, i: usize, j: usize) -> Option<&BTreeSet<EssentialLabel>> {
        self.cells.get(&(i, j))
    }

    pub fn has(&self, i: usize, j: usize, label: EssentialLabel) -> bool {
        self.labels(i, j).is_some_and(|s| s.contains(&label))
    }

    /// Token-coordinate view.
    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), &BTreeSet<EssentialLabel>)> {
        self.cells.iter().map(|(k, v)| (*k, v))
    }

    /// Model-coordinate view (sentinel at 0).
    pub fn shifted_cells(
        &self,
    ) -> impl Iterator<Item = ((usize, usize), &BTreeSet<EssentialLabel>)> {
        self.cells.iter().map(|((i, j), v)| ((i + 1, j + 1), v))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn count(&self, pred: impl Fn(EssentialLabel) -> bool) -> usize {
        self.cells.values().flatten().filter(|l| pred(**l)).count()
    }

    /// Number of cells holding two or more labels.
    pub fn multi_label_cells(&self) -> usize {
        self.cells.values().filter(|s| s.len() >= 2).count()
    }

    pub fn whole(&self) -> &WholeLabels {
        &self.whole
    }

    pub fn whole_mut(&mut self) -> &mut WholeLabels {
        &mut self.whole
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct WholeJson {
    span: Vec<(usize, usize)>,
    rel: Vec<(usize, usize)>,
    cls: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CellSetJson {
    n: usize,
    cells: Vec<(usize, usize, Vec<EssentialLabel>)>,
    whole: WholeJson,
}

impl From<LabelCellSet> for CellSetJson {
    fn from(c: LabelCellSet) -> Self {
        Self {
            n: c.n,
            cells: c
                .cells
                .iter()
                .map(|((i, j), ls)| (*i, *j, ls.iter().copied().collect()))
                .collect(),
            whole: WholeJson {
                span: c.whole.positives(WholeLabel::Span),
                rel: c.whole.positives(WholeLabel::Rel),
                cls: c.whole.positives(WholeLabel::Cls),
            },
        }
    }
}

impl TryFrom<CellSetJson> for LabelCellSet {
    type Error = String;

    fn try_from(j: CellSetJson) -> Result<Self, String> {
        if j.n == 0 {
            return Err("n must count the sentinel and be at least 1".into());
        }
        let mut set = LabelCellSet::new(j.n - 1);
        for (a, b, labels) in j.cells {
            if a > b || b >= j.n - 1 {
                return Err(format!(
                    "cell ({a},{b}) outside upper triangle of {} tokens",
                    j.n - 1
                ));
            }
            for l in labels {
                set.insert(a, b, l);
            }
        }
        for (label, cells) in [
            (WholeLabel::Span, j.whole.span),
            (WholeLabel::Rel, j.whole.rel),
            (WholeLabel::Cls, j.whole.cls),
        ] {
            for (a, b) in cells {
                if a >= j.n || b >= j.n {
                    return Err(format!("whole cell ({a},{b}) outside {}x{}", j.n, j.n));
                }
                set.whole.set(label, a, b);
            }
        }
        Ok(set)
    }
}
