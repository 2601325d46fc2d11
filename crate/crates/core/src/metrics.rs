//! Span, targeted, sentiment-graph and relation F1.
//!
//! Every function takes one tuple list per sentence, `pred[k]` aligned with
//! `gold[k]`. Tuple lists are normalized (sorted, deduplicated) before
//! scoring, so order and repetition never matter. Counts are pooled over the
//! corpus (micro averaging); 0/0 is 0.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_tuples, SentimentTuple, Span};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    /// From matched mass against the predicted and gold totals.
    pub fn from_counts(p_hits: f64, pred: f64, r_hits: f64, gold: f64) -> Self {
        Self::new(ratio(p_hits, pred), ratio(r_hits, gold))
    }
}

fn normalized(tuples: &[SentimentTuple]) -> Vec<SentimentTuple> {
    let mut v = tuples.to_vec();
    normalize_tuples(&mut v);
    v
}

fn check_aligned(pred: &[Vec<SentimentTuple>], gold: &[Vec<SentimentTuple>]) {
    assert_eq!(
        pred.len(),
        gold.len(),
        "prediction and gold corpora must have the same sentence count"
    );
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Holder,
    Target,
    Expression,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Holder, Component::Target, Component::Expression];

    fn span(self, t: &SentimentTuple) -> Option<Span> {
        match self {
            Component::Holder => t.holder,
            Component::Target => t.target,
            Component::Expression => Some(t.expression),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanScores {
    pub holder: Prf,
    pub target: Prf,
    pub expression: Prf,
    pub overall: Prf,
}

fn component_tokens(tuples: &[SentimentTuple], c: Component) -> BTreeSet<usize> {
    tuples
        .iter()
        .filter_map(|t| c.span(t))
        .flat_map(|s| s.tokens())
        .collect()
}

/// Token-level F1 per component over the union of that component's spans.
pub fn span_f1(pred: &[Vec<SentimentTuple>], gold: &[Vec<SentimentTuple>]) -> SpanScores {
    check_aligned(pred, gold);
    // [tp, pred, gold] per component
    let mut counts = [[0usize; 3]; 3];
    for (p, g) in pred.iter().zip(gold) {
        for (k, c) in Component::ALL.into_iter().enumerate() {
            let pt = component_tokens(p, c);
            let gt = component_tokens(g, c);
            counts[k][0] += pt.intersection(&gt).count();
            counts[k][1] += pt.len();
            counts[k][2] += gt.len();
        }
    }
    let prf = |c: [usize; 3]| Prf::from_counts(c[0] as f64, c[1] as f64, c[0] as f64, c[2] as f64);
    let pooled = (0..3).fold([0; 3], |acc, k| {
        [
            acc[0] + counts[k][0],
            acc[1] + counts[k][1],
            acc[2] + counts[k][2],
        ]
    });
    SpanScores {
        holder: prf(counts[0]),
        target: prf(counts[1]),
        expression: prf(counts[2]),
        overall: prf(pooled),
    }
}

/// Exact (target span, polarity) pairs.
pub fn targeted_f1(pred: &[Vec<SentimentTuple>], gold: &[Vec<SentimentTuple>]) -> Prf {
    check_aligned(pred, gold);
    let pairs = |ts: &[SentimentTuple]| -> BTreeSet<_> {
        ts.iter()
            .filter_map(|t| t.target.map(|s| (s, t.polarity)))
            .collect()
    };
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        let (ps, gs) = (pairs(p), pairs(g));
        tp += ps.intersection(&gs).count();
        np += ps.len();
        ng += gs.len();
    }
    Prf::from_counts(tp as f64, np as f64, tp as f64, ng as f64)
}

/// Per-element overlap weight: `|a ∩ b| / |denominator side|`, 1 when both
/// are absent, `None` when they do not overlap (or only one is present).
fn element_weight(a: Option<Span>, b: Option<Span>, by_first: bool) -> Option<f64> {
    match (a, b) {
        (None, None) => Some(1.0),
        (Some(a), Some(b)) if a.overlaps(&b) => {
            let den = if by_first { a.len() } else { b.len() };
            Some(a.overlap(&b) as f64 / den as f64)
        }
        _ => None,
    }
}

/// Mean element weight of `pred` against `gold`, normalized by the pred
/// spans (`for_precision`) or by the gold spans; `None` if they do not match.
fn tuple_weight(
    p: &SentimentTuple,
    g: &SentimentTuple,
    use_polarity: bool,
    for_precision: bool,
) -> Option<f64> {
    if use_polarity && p.polarity != g.polarity {
        return None;
    }
    let h = element_weight(p.holder, g.holder, for_precision)?;
    let t = element_weight(p.target, g.target, for_precision)?;
    let e = element_weight(Some(p.expression), Some(g.expression), for_precision)?;
    Some((h + t + e) / 3.0)
}

/// Greedy one-to-one assignment by descending weight; ties go to the lower
/// (pred, gold) index pair. Returns the total matched weight.
fn greedy_match(mut candidates: Vec<(f64, usize, usize)>, n_pred: usize, n_gold: usize) -> f64 {
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; n_pred];
    let mut used_g = vec![false; n_gold];
    let mut total = 0.0;
    for (w, i, j) in candidates {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            total += w;
        }
    }
    total
}

fn graph_counts(p: &[SentimentTuple], g: &[SentimentTuple], use_polarity: bool) -> (f64, f64) {
    let mut cand_p = Vec::new();
    let mut cand_r = Vec::new();
    for (i, pt) in p.iter().enumerate() {
        for (j, gt) in g.iter().enumerate() {
            if let Some(w) = tuple_weight(pt, gt, use_polarity, true) {
                cand_p.push((w, i, j));
            }
            if let Some(w) = tuple_weight(pt, gt, use_polarity, false) {
                cand_r.push((w, i, j));
            }
        }
    }
    (
        greedy_match(cand_p, p.len(), g.len()),
        greedy_match(cand_r, p.len(), g.len()),
    )
}

/// Sentiment-graph F1: NSF1 without polarity, SF1 with it.
///
/// A pred tuple matches a gold tuple when every element overlaps (absent
/// matches only absent) and, with `use_polarity`, the polarities agree.
/// Precision sums per-match weights `mean(|p∩g| / |p|)` and recall sums
/// `mean(|p∩g| / |g|)`, each under its own greedy one-to-one matching.
pub fn graph_f1(
    pred: &[Vec<SentimentTuple>],
    gold: &[Vec<SentimentTuple>],
    use_polarity: bool,
) -> Prf {
    check_aligned(pred, gold);
    let (mut wp, mut wr, mut np, mut ng) = (0.0, 0.0, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        let (p, g) = (normalized(p), normalized(g));
        let (a, b) = graph_counts(&p, &g, use_polarity);
        wp += a;
        wr += b;
        np += p.len();
        ng += g.len();
    }
    Prf::from_counts(wp, np as f64, wr, ng as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Relation {
    Holder,
    Target,
}

fn relation_pairs(tuples: &[SentimentTuple]) -> Vec<(Relation, Span, Span)> {
    let set: BTreeSet<_> = tuples
        .iter()
        .flat_map(|t| {
            let h = t.holder.map(|h| (Relation::Holder, t.expression, h));
            let g = t.target.map(|g| (Relation::Target, t.expression, g));
            h.into_iter().chain(g)
        })
        .collect();
    set.into_iter().collect()
}

/// Typed (expression, holder) and (expression, target) pairs. A pred pair is
/// a true positive when both spans overlap a gold pair of the same type,
/// under a greedy one-to-one matching by overlap size.
pub fn relation_f1(pred: &[Vec<SentimentTuple>], gold: &[Vec<SentimentTuple>]) -> Prf {
    check_aligned(pred, gold);
    let (mut tp, mut np, mut ng) = (0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        let (pp, gp) = (relation_pairs(p), relation_pairs(g));
        let mut cand = Vec::new();
        for (i, (pr, pe, ps)) in pp.iter().enumerate() {
            for (j, (gr, ge, gs)) in gp.iter().enumerate() {
                if pr == gr && pe.overlaps(ge) && ps.overlaps(gs) {
                    cand.push(((pe.overlap(ge) + ps.overlap(gs)) as f64, i, j));
                }
            }
        }
        let mut used_p = vec![false; pp.len()];
        let mut used_g = vec![false; gp.len()];
        cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (_, i, j) in cand {
            if !used_p[i] && !used_g[j] {
                used_p[i] = true;
                used_g[j] = true;
                tp += 1;
            }
        }
        np += pp.len();
        ng += gp.len();
    }
    Prf::from_counts(tp as f64, np as f64, tp as f64, ng as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketBy {
    /// Expression span length in tokens; scored with expression span F1.
    ExpressionLength,
    /// Distance from the leftmost to the rightmost token of a tuple; scored with SF1.
    TupleExtent,
}

impl BucketBy {
    pub fn default_bounds(self) -> Vec<usize> {
        match self {
            BucketBy::ExpressionLength => vec![1, 2, 3, 4, 5],
            BucketBy::TupleExtent => vec![0, 5, 10, 15, 20],
        }
    }

    fn key(self, t: &SentimentTuple) -> usize {
        match self {
            BucketBy::ExpressionLength => t.expression.len(),
            BucketBy::TupleExtent => t.extent(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    /// Inclusive bounds; `hi` is `None` for the open last bucket.
    pub lo: usize,
    pub hi: Option<usize>,
    pub gold: usize,
    pub pred: usize,
    /// `None` when neither side has an item in the bucket.
    pub f1: Option<f64>,
}

impl Bucket {
    pub fn label(&self) -> String {
        match self.hi {
            Some(hi) if hi == self.lo => format!("{}", self.lo),
            Some(hi) => format!("{}-{}", self.lo, hi),
            None => format!("{}+", self.lo),
        }
    }
}

/// Recomputes the bucket's metric with gold and pred tuples each restricted
/// to those whose attribute falls in the bucket. `bounds` are ascending
/// lower bounds; items below the first bound are ignored.
pub fn bucketize(
    pred: &[Vec<SentimentTuple>],
    gold: &[Vec<SentimentTuple>],
    by: BucketBy,
    bounds: &[usize],
) -> Vec<Bucket> {
    check_aligned(pred, gold);
    let mut out = Vec::with_capacity(bounds.len());
    for (k, &lo) in bounds.iter().enumerate() {
        let hi = bounds.get(k + 1).map(|b| b - 1);
        let inside = |t: &SentimentTuple| {
            let v = by.key(t);
            v >= lo && hi.is_none_or(|h| v <= h)
        };
        let filter = |c: &[Vec<SentimentTuple>]| -> Vec<Vec<SentimentTuple>> {
            c.iter()
                .map(|ts| ts.iter().copied().filter(|t| inside(t)).collect())
                .collect()
        };
        let (p, g) = (filter(pred), filter(gold));
        let count =
            |c: &[Vec<SentimentTuple>]| c.iter().map(|ts| normalized(ts).len()).sum::<usize>();
        let (np, ng) = (count(&p), count(&g));
        let f1 = (np + ng > 0).then(|| match by {
            BucketBy::ExpressionLength => span_f1(&p, &g).expression.f1,
            BucketBy::TupleExtent => graph_f1(&p, &g, true).f1,
        });
        out.push(Bucket {
            lo,
            hi,
            gold: ng,
            pred: np,
            f1,
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sentences: usize,
    pub holder: Prf,
    pub target: Prf,
    pub expression: Prf,
    pub span: Prf,
    pub targeted: Prf,
    pub nsf1: Prf,
    pub sf1: Prf,
    pub relation: Prf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by_expression_length: Option<Vec<Bucket>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by_tuple_extent: Option<Vec<Bucket>>,
}

impl EvalReport {
    pub fn rows(&self) -> [(&'static str, Prf); 8] {
        [
            ("Holder F1", self.holder),
            ("Target F1", self.target),
            ("Exp. F1", self.expression),
            ("Span F1", self.span),
            ("Targeted F1", self.targeted),
            ("NSF1", self.nsf1),
            ("SF1", self.sf1),
            ("Relation F1", self.relation),
        ]
    }

    /// Fixed-order text table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<12} {:>8} {:>8} {:>8}\n", "metric", "P", "R", "F1");
        for (name, p) in self.rows() {
            let _ = writeln!(
                s,
                "{name:<12} {:>8.4} {:>8.4} {:>8.4}",
                p.precision, p.recall, p.f1
            );
        }
        for (title, buckets) in [
            ("Exp. F1 by expression length", &self.by_expression_length),
            ("SF1 by tuple extent", &self.by_tuple_extent),
        ] {
            let Some(buckets) = buckets else { continue };
            let _ = writeln!(s, "\n{title}");
            for b in buckets {
                let v = b.f1.map_or("-".to_string(), |f| format!("{f:.4}"));
                let _ = writeln!(
                    s,
                    "{:<12} {:>8} (gold {}, pred {})",
                    b.label(),
                    v,
                    b.gold,
                    b.pred
                );
            }
        }
        s
    }
}

pub fn evaluate(pred: &[Vec<SentimentTuple>], gold: &[Vec<SentimentTuple>]) -> EvalReport {
    let spans = span_f1(pred, gold);
    EvalReport {
        sentences: gold.len(),
        holder: spans.holder,
        target: spans.target,
        expression: spans.expression,
        span: spans.overall,
        targeted: targeted_f1(pred, gold),
        nsf1: graph_f1(pred, gold, false),
        sf1: graph_f1(pred, gold, true),
        relation: relation_f1(pred, gold),
        by_expression_length: None,
        by_tuple_extent: None,
    }
}

/// `evaluate` plus both bucketed tables with default bounds.
pub fn evaluate_with_buckets(
    pred: &[Vec<SentimentTuple>],
    gold: &[Vec<SentimentTuple>],
) -> EvalReport {
    let mut r = evaluate(pred, gold);
    for by in [BucketBy::ExpressionLength, BucketBy::TupleExtent] {
        let b = Some(bucketize(pred, gold, by, &by.default_bounds()));
        match by {
            BucketBy::ExpressionLength => r.by_expression_length = b,
            BucketBy::TupleExtent => r.by_tuple_extent = b,
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Polarity;

    fn sp(a: usize, b: usize) -> Span {
        Span::new(a, b)
    }

    fn tup(h: Option<Span>, e: Span, t: Option<Span>, p: Polarity) -> SentimentTuple {
        SentimentTuple::new(h, e, t, p)
    }

    #[test]
    fn identical_is_perfect() {
        let g = vec![vec![
            tup(Some(sp(0, 1)), sp(3, 5), Some(sp(7, 10)), Polarity::Neutral),
            tup(None, sp(12, 12), Some(sp(14, 14)), Polarity::Positive),
        ]];
        let r = evaluate(&g, &g);
        for (_, p) in r.rows() {
            assert_eq!(p.f1, 1.0);
        }
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let g = vec![vec![tup(
            Some(sp(0, 0)),
            sp(1, 1),
            Some(sp(2, 2)),
            Polarity::Positive,
        )]];
        let r = evaluate(&[vec![]], &g);
        for (_, p) in r.rows() {
            assert_eq!(p, Prf::default());
        }
    }

    #[test]
    fn expression_token_overlap() {
        let g = vec![vec![tup(None, sp(3, 5), None, Polarity::Positive)]];
        let p = vec![vec![tup(None, sp(3, 4), None, Polarity::Positive)]];
        let e = span_f1(&p, &g).expression;
        assert_eq!(e.precision, 1.0);
        assert!((e.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((e.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn targeted_requires_polarity_and_exact_span() {
        let g = vec![vec![
            tup(None, sp(0, 0), Some(sp(2, 3)), Polarity::Positive),
            tup(None, sp(5, 5), Some(sp(7, 7)), Polarity::Negative),
        ]];
        let p = vec![vec![tup(
            None,
            sp(0, 0),
            Some(sp(2, 3)),
            Polarity::Positive,
        )]];
        let r = targeted_f1(&p, &g);
        assert_eq!((r.precision, r.recall), (1.0, 0.5));
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
        let flipped = vec![vec![tup(
            None,
            sp(0, 0),
            Some(sp(2, 3)),
            Polarity::Negative,
        )]];
        assert_eq!(targeted_f1(&flipped, &g).precision, 0.0);
    }

    #[test]
    fn sixteen_seventeenths() {
        let g = vec![vec![tup(
            Some(sp(0, 1)),
            sp(3, 5),
            Some(sp(7, 10)),
            Polarity::Neutral,
        )]];
        let p = vec![vec![tup(
            Some(sp(0, 1)),
            sp(3, 4),
            Some(sp(7, 10)),
            Polarity::Neutral,
        )]];
        let r = graph_f1(&p, &g, true);
        assert!((r.f1 - 16.0 / 17.0).abs() < 1e-12);
        assert!((r.recall - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn polarity_flip() {
        let g = vec![vec![tup(
            Some(sp(0, 1)),
            sp(3, 5),
            Some(sp(7, 10)),
            Polarity::Neutral,
        )]];
        let p = vec![vec![tup(
            Some(sp(0, 1)),
            sp(3, 5),
            Some(sp(7, 10)),
            Polarity::Negative,
        )]];
        assert_eq!(graph_f1(&p, &g, true).f1, 0.0);
        assert_eq!(graph_f1(&p, &g, false).f1, 1.0);
    }

    #[test]
    fn absent_versus_present_never_matches() {
        let g = vec![vec![tup(
            None,
            sp(3, 5),
            Some(sp(7, 10)),
            Polarity::Neutral,
        )]];
        let p = vec![vec![tup(
            Some(sp(0, 1)),
            sp(3, 5),
            Some(sp(7, 10)),
            Polarity::Neutral,
        )]];
        assert_eq!(graph_f1(&p, &g, false).f1, 0.0);
    }

    #[test]
    fn greedy_uses_each_gold_once() {
        let g = vec![vec![tup(None, sp(3, 5), None, Polarity::Neutral)]];
        let p = vec![vec![
            tup(None, sp(3, 5), None, Polarity::Neutral),
            tup(None, sp(4, 5), None, Polarity::Neutral),
        ]];
        let r = graph_f1(&p, &g, true);
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 1.0);
    }

    #[test]
    fn relation_cases() {
        let g = vec![vec![tup(
            Some(sp(0, 2)),
            sp(4, 6),
            None,
            Polarity::Positive,
        )]];
        let inside = vec![vec![tup(
            Some(sp(1, 1)),
            sp(5, 5),
            None,
            Polarity::Negative,
        )]];
        assert_eq!(relation_f1(&inside, &g).f1, 1.0);
        let swapped = vec![vec![tup(
            None,
            sp(4, 6),
            Some(sp(0, 2)),
            Polarity::Positive,
        )]];
        assert_eq!(relation_f1(&swapped, &g).f1, 0.0);
        let two = vec![vec![
            tup(Some(sp(0, 2)), sp(4, 6), None, Polarity::Positive),
            tup(Some(sp(8, 8)), sp(9, 9), None, Polarity::Positive),
        ]];
        let r = relation_f1(&two, &g);
        assert_eq!((r.precision, r.recall), (0.5, 1.0));
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn buckets() {
        let g = vec![vec![
            tup(None, sp(0, 0), None, Polarity::Positive),
            tup(None, sp(2, 5), None, Polarity::Positive),
        ]];
        let p = vec![vec![
            tup(None, sp(0, 0), None, Polarity::Positive),
            tup(None, sp(2, 3), None, Polarity::Positive),
        ]];
        let b = bucketize(&p, &g, BucketBy::ExpressionLength, &[1, 2, 3, 4]);
        assert_eq!(b[0].f1, Some(1.0));
        // Length-2 pred against no gold of that length.
        assert_eq!(b[1].f1, Some(0.0));
        assert_eq!(b[2].f1, None);
        // Length-4 gold against no pred of that length.
        assert_eq!(b[3].f1, Some(0.0));
        assert_eq!(b[3].label(), "4+");

        let one = bucketize(&p, &g, BucketBy::ExpressionLength, &[1]);
        assert_eq!(one[0].f1, Some(span_f1(&p, &g).expression.f1));
    }

    #[test]
    fn report_json_roundtrip() {
        let g = vec![vec![tup(
            Some(sp(0, 1)),
            sp(3, 5),
            Some(sp(7, 10)),
            Polarity::Neutral,
        )]];
        let r = evaluate_with_buckets(&g, &g);
        let json = serde_json::to_string(&r).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(r.table().contains("SF1"));
    }
}
