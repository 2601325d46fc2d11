//! Reads sentences in the benchmark JSON layout (character offsets, raw
//! polarity strings) and shows the resulting token spans. Pass a file path to
//! load your own data; `--lenient` skips malformed records.

use tgls::corpus::{load_dataset, parse_dataset, IngestMode, PolarityMap};

const SAMPLE: &str = r#"[
  {"sent_id": "s1",
   "text": "Moscow government has expressed the wish to import the Mongolian meat .",
   "opinions": [{"Source": [["Moscow government"], ["0:17"]],
                 "Target": [["import the Mongolian meat"], ["44:69"]],
                 "Polar_expression": [["expressed the wish"], ["22:40"]],
                 "Polarity": "Neutral", "Intensity": "Standard"}]},
  {"sent_id": "s2",
   "text": "Great food , terrible service .",
   "opinions": [{"Source": [[], []], "Target": [["food"], ["6:10"]],
                 "Polar_expression": [["Great"], ["0:5"]], "Polarity": "Positive"},
                {"Source": [[], []], "Target": [["service"], ["22:29"]],
                 "Polar_expression": [["terrible"], ["13:21"]], "Polarity": "Negative"}]},
  {"sent_id": "broken", "text": "No opinions field here ."}
]"#;

fn main() -> tgls::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lenient = args.iter().any(|a| a == "--lenient");
    let mode = if lenient {
        IngestMode::Lenient
    } else {
        IngestMode::Strict
    };
    let polarity = PolarityMap::default();
    let report = match args.iter().find(|a| !a.starts_with("--")) {
        Some(path) => load_dataset(path.as_ref(), mode, &polarity)?,
        // The built-in sample has one bad record, so it always loads leniently.
        None => parse_dataset(SAMPLE, IngestMode::Lenient, &polarity)?,
    };

    for s in &report.sentences {
        println!("{} ({} tokens)", s.sent_id, s.len());
        for t in &s.gold {
            let text = |sp: tgls::corpus::Span| s.tokens[sp.start..=sp.end].join(" ");
            println!(
                "  holder {:<22} expression {:<22} target {:<28} {}",
                t.holder.map_or("-".into(), text),
                text(t.expression),
                t.target.map_or("-".into(), text),
                t.polarity.as_str()
            );
        }
    }
    for (id, reason) in &report.skipped {
        println!("skipped {id}: {reason}");
    }
    Ok(())
}
