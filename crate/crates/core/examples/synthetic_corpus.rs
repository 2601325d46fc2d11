//! Generates a seeded synthetic corpus and summarises what it contains.
//!
//! cargo run --example synthetic_corpus -- [count] [overlap_fraction]

use tgls::corpus::{generate_synthetic, write_canonical, SynthConfig};
use tgls::labeling::encode;

fn main() -> tgls::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = SynthConfig {
        count: args.next().map_or(200, |a| a.parse().expect("count")),
        overlap_fraction: args
            .next()
            .map_or(0.25, |a| a.parse().expect("overlap fraction")),
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic(&cfg);

    let tuples: usize = corpus.iter().map(|s| s.gold.len()).sum();
    let tokens: usize = corpus.iter().map(|s| s.len()).sum();
    let mut multi = 0;
    let (mut no_holder, mut no_target, mut single, mut long) = (0, 0, 0, 0);
    for s in &corpus {
        if encode(s)?.multi_label_cells() > 0 {
            multi += 1;
        }
        for t in &s.gold {
            no_holder += usize::from(t.holder.is_none());
            no_target += usize::from(t.target.is_none());
            for span in t.spans() {
                single += usize::from(span.len() == 1);
                long += usize::from(span.len() >= 4);
            }
        }
    }
    println!("sentences            {}", corpus.len());
    println!("tokens               {tokens}");
    println!("tuples               {tuples}");
    println!("multi-label cells in {multi} sentences");
    println!("absent holders       {no_holder}");
    println!("absent targets       {no_target}");
    println!("single-token spans   {single}");
    println!("spans of ≥ 4 tokens  {long}");

    let json = write_canonical(&corpus[..1])?;
    println!("\nfirst sentence:\n{json}");
    Ok(())
}
