//! Two opinions that share an expression and a relation cell. A single-label
//! tagger must drop one of them; the cell set keeps both labels.

use tgls::corpus::{Polarity, Sentence, SentimentTuple, Span};
use tgls::labeling::{decode, encode};

fn main() -> tgls::Result<()> {
    // "I love the pasta and the wine"; both targets are loved by the same holder.
    let words = ["I", "love", "the", "pasta", "and", "the", "wine"];
    let love = Span::single(1);
    let pasta = SentimentTuple::new(
        Some(Span::single(0)),
        love,
        Some(Span::new(2, 3)),
        Polarity::Positive,
    );
    let wine = SentimentTuple::new(
        Some(Span::single(0)),
        love,
        Some(Span::new(5, 6)),
        Polarity::Positive,
    );
    let sentence = Sentence::from_words("overlap", &words, vec![pasta, wine]);

    let cells = encode(&sentence)?;
    println!("multi-label cells: {}", cells.multi_label_cells());
    for ((i, j), labels) in cells.cells().filter(|(_, l)| l.len() > 1) {
        let names: Vec<&str> = labels.iter().map(|l| l.name()).collect();
        println!("  ({i}, {j}) {}", names.join(" + "));
    }

    let mut decoded = decode(&cells);
    decoded.sort();
    println!("decoded {} tuples:", decoded.len());
    for t in &decoded {
        let text = |s: Span| words[s.start..=s.end].join(" ");
        println!(
            "  holder {:?} expression {:?} target {:?} {}",
            t.holder.map(text),
            text(t.expression),
            t.target.map(text),
            t.polarity.as_str()
        );
    }
    assert_eq!(decoded.len(), 2);
    Ok(())
}
