//! Scores a handful of predictions against gold and prints every metric.

use tgls::corpus::{Polarity, SentimentTuple, Span};
use tgls::metrics::{evaluate_with_buckets, graph_f1};

fn tuple(
    h: Option<(usize, usize)>,
    e: (usize, usize),
    t: Option<(usize, usize)>,
    p: Polarity,
) -> SentimentTuple {
    let span = |(a, b)| Span::new(a, b);
    SentimentTuple::new(h.map(span), span(e), t.map(span), p)
}

fn main() -> tgls::Result<()> {
    use Polarity::*;
    // "Moscow government has expressed the wish to import the Mongolian meat ."
    let gold = tuple(Some((0, 1)), (3, 5), Some((7, 10)), Neutral);
    let short_expression = tuple(Some((0, 1)), (3, 4), Some((7, 10)), Neutral);
    let r = graph_f1(&[vec![short_expression]], &[vec![gold]], true);
    println!(
        "one token missing from the expression: SF1 = {:.4} (16/17)\n",
        r.f1
    );

    let gold = vec![
        vec![gold],
        vec![
            tuple(None, (0, 0), Some((1, 1)), Positive),
            tuple(None, (3, 3), Some((4, 4)), Negative),
        ],
        vec![tuple(Some((0, 0)), (1, 1), Some((2, 3)), Positive)],
    ];
    let pred = vec![
        vec![short_expression],
        vec![
            tuple(None, (0, 0), Some((1, 1)), Positive),
            tuple(None, (3, 3), Some((4, 4)), Positive),
        ],
        vec![],
    ];
    let report = evaluate_with_buckets(&pred, &gold);
    print!("{}", report.table());
    println!("\n{}", serde_json::to_string(&report)?);
    Ok(())
}
