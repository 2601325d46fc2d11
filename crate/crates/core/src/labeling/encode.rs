use super::{EssentialLabel, LabelCellSet, WholeLabel};
use crate::corpus::{Sentence, SentimentTuple, Span};
use crate::{Error, Result};

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn check_spans(tokens: usize, tuples: &[SentimentTuple]) -> Result<()> {
    for t in tuples {
        if let Some(span) = t.spans().find(|s| s.end >= tokens) {
            return Err(Error::data(
                "<encode>",
                format!("span {span} outside sentence of {tokens} tokens"),
            ));
        }
    }
    Ok(())
}

/// Boundary-token labels: one span label per component and head/tail
/// relation labels between the expression and its holder and target.
pub fn encode_essential(tokens: usize, tuples: &[SentimentTuple]) -> Result<LabelCellSet> {
    check_spans(tokens, tuples)?;
    let mut cells = LabelCellSet::new(tokens);
    for t in tuples {
        let e = t.expression;
        cells.insert(e.start, e.end, EssentialLabel::expression(t.polarity));
        let sides = [
            (
                t.holder,
                EssentialLabel::Holder,
                EssentialLabel::ExpHeadToHolderHead,
                EssentialLabel::ExpTailToHolderTail,
            ),
            (
                t.target,
                EssentialLabel::Target,
                EssentialLabel::ExpHeadToTargetHead,
                EssentialLabel::ExpTailToTargetTail,
            ),
        ];
        for (span, span_label, head, tail) in sides {
            let Some(s) = span else { continue };
            cells.insert(s.start, s.end, span_label);
            let (i, j) = ordered(e.start, s.start);
            cells.insert(i, j, head);
            let (i, j) = ordered(e.end, s.end);
            cells.insert(i, j, tail);
        }
    }
    Ok(cells)
}

/// Fills the three whole-label matrices of `cells` (model coordinates).
pub fn encode_whole(cells: &mut LabelCellSet, tuples: &[SentimentTuple]) -> Result<()> {
    check_spans(cells.tokens(), tuples)?;
    let whole = cells.whole_mut();
    for t in tuples {
        for s in t.spans() {
            for a in s.tokens() {
                whole.set(WholeLabel::Cls, 0, a + 1);
                for b in a + 1..=s.end {
                    whole.set(WholeLabel::Span, a + 1, b + 1);
                }
            }
        }
        let others: Vec<Span> = t.holder.into_iter().chain(t.target).collect();
        for a in t.expression.tokens() {
            for s in &others {
                for b in s.tokens() {
                    let (i, j) = ordered(a, b);
                    whole.set(WholeLabel::Rel, i + 1, j + 1);
                }
            }
        }
    }
    Ok(())
}

/// Essential and whole labels for a sentence's gold tuples.
pub fn encode(sentence: &Sentence) -> Result<LabelCellSet> {
    let mut cells = encode_essential(sentence.len(), &sentence.gold)
        .map_err(|e| relabel(e, &sentence.sent_id))?;
    encode_whole(&mut cells, &sentence.gold).map_err(|e| relabel(e, &sentence.sent_id))?;
    Ok(cells)
}

fn relabel(e: Error, sent_id: &str) -> Error {
    match e {
        Error::Data { message, .. } => Error::data(sent_id, message),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Polarity;
    use EssentialLabel::*;

    fn moscow() -> SentimentTuple {
        SentimentTuple::new(
            Some(Span::new(0, 1)),
            Span::new(3, 5),
            Some(Span::new(7, 10)),
            Polarity::Neutral,
        )
    }

    fn cell_list(c: &LabelCellSet) -> Vec<((usize, usize), Vec<EssentialLabel>)> {
        c.cells()
            .map(|(k, v)| (k, v.iter().copied().collect()))
            .collect()
    }

    #[test]
    fn moscow_essential_cells() {
        let c = encode_essential(12, &[moscow()]).unwrap();
        assert_eq!(
            cell_list(&c),
            vec![
                ((0, 1), vec![Holder]),
                ((0, 3), vec![ExpHeadToHolderHead]),
                ((1, 5), vec![ExpTailToHolderTail]),
                ((3, 5), vec![ExpNeutral]),
                ((3, 7), vec![ExpHeadToTargetHead]),
                ((5, 10), vec![ExpTailToTargetTail]),
                ((7, 10), vec![Target]),
            ]
        );
    }

    #[test]
    fn no_tuples_no_cells() {
        let mut c = encode_essential(5, &[]).unwrap();
        assert!(c.is_empty());
        encode_whole(&mut c, &[]).unwrap();
        assert!(c.whole().is_empty());
    }

    #[test]
    fn shared_expression_two_holders() {
        let e = Span::new(3, 5);
        let tuples = [
            SentimentTuple::new(Some(Span::new(0, 1)), e, None, Polarity::Neutral),
            SentimentTuple::new(Some(Span::new(0, 0)), e, None, Polarity::Neutral),
        ];
        let c = encode_essential(12, &tuples).unwrap();
        assert_eq!(c.labels(0, 3).unwrap().len(), 1);
        assert!(c.has(0, 3, ExpHeadToHolderHead));
        assert!(c.has(1, 5, ExpTailToHolderTail));
        assert!(c.has(0, 5, ExpTailToHolderTail));
        assert!(c.has(0, 0, Holder));
    }

    #[test]
    fn out_of_range_span_rejected() {
        assert!(encode_essential(10, &[moscow()]).is_err());
    }

    #[test]
    fn whole_span_pairs_of_target() {
        let mut c = encode_essential(12, &[moscow()]).unwrap();
        encode_whole(&mut c, &[moscow()]).unwrap();
        let unshifted: Vec<(usize, usize)> = c
            .whole()
            .positives(WholeLabel::Span)
            .into_iter()
            .map(|(i, j)| (i - 1, j - 1))
            .filter(|(i, _)| *i >= 7)
            .collect();
        assert_eq!(
            unshifted,
            vec![(7, 8), (7, 9), (7, 10), (8, 9), (8, 10), (9, 10)]
        );
    }

    #[test]
    fn whole_rel_and_cls() {
        let mut c = encode_essential(12, &[moscow()]).unwrap();
        encode_whole(&mut c, &[moscow()]).unwrap();
        // Moscow (0) → expressed (3), shifted by the sentinel.
        assert!(c.whole().get(WholeLabel::Rel, 1, 4));
        // [CLS] → expressed.
        assert!(c.whole().get(WholeLabel::Cls, 0, 4));
        // Tokens outside every component have no [CLS] label.
        assert!(!c.whole().get(WholeLabel::Cls, 0, 3));
        assert!(!c.whole().get(WholeLabel::Cls, 0, 12));
        let rel = c.whole().positives(WholeLabel::Rel).len();
        assert_eq!(rel, 3 * (2 + 4));
    }
}
