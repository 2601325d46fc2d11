//! Encodes one annotated sentence into token-pair label cells and decodes it
//! back.

use tgls::corpus::{Polarity, Sentence, SentimentTuple, Span};
use tgls::labeling::{decode, encode, pair_closure};

fn main() -> tgls::Result<()> {
    let words = [
        "The", "waiter", "said", "the", "soup", "was", "really", "cold",
    ];
    let tuple = SentimentTuple::new(
        Some(Span::new(0, 1)),
        Span::new(6, 7),
        Some(Span::new(3, 4)),
        Polarity::Negative,
    );
    let sentence = Sentence::from_words("waiter", &words, vec![tuple]);

    let cells = encode(&sentence)?;
    println!(
        "{} tokens, {} labelled cells",
        cells.tokens(),
        cells.cells().count()
    );
    for ((i, j), labels) in cells.cells() {
        let names: Vec<&str> = labels.iter().map(|l| l.name()).collect();
        println!(
            "  ({i}, {j}) {:<10} {}",
            format!("{}..{}", words[i], words[j]),
            names.join(" ")
        );
    }
    println!("\nserialized:\n{}", serde_json::to_string(&cells)?);

    let decoded = decode(&cells);
    println!("\ndecoded: {decoded:?}");
    assert_eq!(decoded, pair_closure(&sentence.gold));
    Ok(())
}
