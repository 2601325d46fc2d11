use std::collections::{BTreeMap, BTreeSet};

use super::{EssentialLabel, LabelCellSet};
use crate::corpus::{normalize_tuples, Polarity, SentimentTuple, Span};

fn linked(
    cells: &LabelCellSet,
    e: Span,
    other: Span,
    head: EssentialLabel,
    tail: EssentialLabel,
) -> bool {
    let cell = |a: usize, b: usize| (a.min(b), a.max(b));
    let (hi, hj) = cell(e.start, other.start);
    let (ti, tj) = cell(e.end, other.end);
    cells.has(hi, hj, head) || cells.has(ti, tj, tail)
}

/// Cross product of `present`, or a single absent member when it is empty.
fn members(present: Vec<Span>) -> Vec<Option<Span>> {
    if present.is_empty() {
        vec![None]
    } else {
        present.into_iter().map(Some).collect()
    }
}

/// Reads spans off span-label cells, links each expression to every holder
/// and target that shares either a head or a tail relation label with it,
/// and emits the per-expression cross product. Total for any cell set.
pub fn decode(cells: &LabelCellSet) -> Vec<SentimentTuple> {
    let mut holders = BTreeSet::new();
    let mut targets = BTreeSet::new();
    let mut expressions = BTreeSet::new();
    for ((i, j), labels) in cells.cells() {
        let span = Span::new(i, j);
        for label in labels {
            match label {
                EssentialLabel::Holder => {
                    holders.insert(span);
                }
                EssentialLabel::Target => {
                    targets.insert(span);
                }
                l => {
                    if let Some(p) = l.polarity() {
                        expressions.insert((span, p));
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    for (e, polarity) in expressions {
        let hs: Vec<Span> = holders
            .iter()
            .copied()
            .filter(|h| {
                linked(
                    cells,
                    e,
                    *h,
                    EssentialLabel::ExpHeadToHolderHead,
                    EssentialLabel::ExpTailToHolderTail,
                )
            })
            .collect();
        let ts: Vec<Span> = targets
            .iter()
            .copied()
            .filter(|t| {
                linked(
                    cells,
                    e,
                    *t,
                    EssentialLabel::ExpHeadToTargetHead,
                    EssentialLabel::ExpTailToTargetTail,
                )
            })
            .collect();
        let ts = members(ts);
        for h in members(hs) {
            for t in &ts {
                out.push(SentimentTuple::new(h, e, *t, polarity));
            }
        }
    }
    normalize_tuples(&mut out);
    out
}

/// What boundary labels can express about a tuple set: tuples grouped by
/// expression span and polarity, expanded to the cross product of the
/// group's holders and targets. A side is absent only when no tuple in the
/// group has it.
pub fn pair_closure(tuples: &[SentimentTuple]) -> Vec<SentimentTuple> {
    let mut groups: BTreeMap<(Span, Polarity), (BTreeSet<Span>, BTreeSet<Span>)> = BTreeMap::new();
    for t in tuples {
        let (hs, ts) = groups.entry((t.expression, t.polarity)).or_default();
        hs.extend(t.holder);
        ts.extend(t.target);
    }
    let mut out = Vec::new();
    for ((e, p), (hs, ts)) in groups {
        let ts = members(ts.into_iter().collect());
        for h in members(hs.into_iter().collect()) {
            for t in &ts {
                out.push(SentimentTuple::new(h, e, *t, p));
            }
        }
    }
    normalize_tuples(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::encode_essential;

    fn sp(a: usize, b: usize) -> Span {
        Span::new(a, b)
    }

    #[test]
    fn moscow_roundtrip() {
        let t = SentimentTuple::new(Some(sp(0, 1)), sp(3, 5), Some(sp(7, 10)), Polarity::Neutral);
        let cells = encode_essential(12, &[t]).unwrap();
        assert_eq!(decode(&cells), vec![t]);
    }

    #[test]
    fn lone_expression() {
        let mut cells = LabelCellSet::new(8);
        cells.insert(3, 5, EssentialLabel::ExpPositive);
        assert_eq!(
            decode(&cells),
            vec![SentimentTuple::new(
                None,
                sp(3, 5),
                None,
                Polarity::Positive
            )]
        );
    }

    #[test]
    fn two_holders_share_expression() {
        let mut cells = LabelCellSet::new(12);
        cells.insert(3, 5, EssentialLabel::ExpNeutral);
        cells.insert(0, 1, EssentialLabel::Holder);
        cells.insert(0, 0, EssentialLabel::Holder);
        cells.insert(0, 3, EssentialLabel::ExpHeadToHolderHead);
        cells.insert(0, 5, EssentialLabel::ExpTailToHolderTail);
        let out = decode(&cells);
        assert_eq!(
            out,
            vec![
                SentimentTuple::new(Some(sp(0, 0)), sp(3, 5), None, Polarity::Neutral),
                SentimentTuple::new(Some(sp(0, 1)), sp(3, 5), None, Polarity::Neutral),
            ]
        );
    }

    #[test]
    fn either_boundary_label_links() {
        let mut cells = LabelCellSet::new(12);
        cells.insert(3, 5, EssentialLabel::ExpNegative);
        cells.insert(7, 10, EssentialLabel::Target);
        cells.insert(5, 10, EssentialLabel::ExpTailToTargetTail);
        assert_eq!(decode(&cells)[0].target, Some(sp(7, 10)));
    }

    #[test]
    fn unlinked_holder_is_dropped() {
        let mut cells = LabelCellSet::new(6);
        cells.insert(0, 0, EssentialLabel::Holder);
        assert!(decode(&cells).is_empty());
    }

    #[test]
    fn closure_cross_product() {
        let e = sp(3, 5);
        let (h1, h2, t1, t2) = (sp(0, 0), sp(1, 1), sp(7, 7), sp(9, 9));
        let p = Polarity::Positive;
        let out = pair_closure(&[
            SentimentTuple::new(Some(h1), e, Some(t1), p),
            SentimentTuple::new(Some(h2), e, Some(t2), p),
        ]);
        let expected: BTreeSet<SentimentTuple> = [
            SentimentTuple::new(Some(h1), e, Some(t1), p),
            SentimentTuple::new(Some(h1), e, Some(t2), p),
            SentimentTuple::new(Some(h2), e, Some(t1), p),
            SentimentTuple::new(Some(h2), e, Some(t2), p),
        ]
        .into_iter()
        .collect();
        assert_eq!(out.into_iter().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn closure_trivial_cases() {
        assert!(pair_closure(&[]).is_empty());
        let t = SentimentTuple::new(None, sp(2, 2), Some(sp(4, 5)), Polarity::Negative);
        assert_eq!(pair_closure(&[t]), vec![t]);
    }
}
