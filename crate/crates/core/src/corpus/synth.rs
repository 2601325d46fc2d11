//! Seeded generator of templated sentences with known sentiment tuples.
//!
//! Component spans inside one sentence are pairwise disjoint, an expression
//! span never doubles as a holder or target, and each expression carries a
//! single polarity. Under those constraints the boundary-label codec
//! reconstructs tuples exactly, so generated corpora double as codec and
//! overfit fixtures.
//!
//! A configurable share of sentences is *overlapped*: two tuples share a
//! token-pair cell, either because one span is the holder of one tuple and
//! the target of another, or because a single-token expression with a
//! single-token holder points at two targets.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Polarity, Sentence, SentimentTuple, Span};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub count: usize,
    pub seed: u64,
    pub holder_words: usize,
    pub target_words: usize,
    /// Expression head words per polarity.
    pub expression_words: usize,
    pub modifier_words: usize,
    pub filler_words: usize,
    pub max_tuples: usize,
    pub single_token_rate: f64,
    /// Share of component spans with length 4 to 6.
    pub long_span_rate: f64,
    pub absent_holder_rate: f64,
    pub absent_target_rate: f64,
    pub overlap_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 100,
            seed: 0,
            holder_words: 12,
            target_words: 16,
            expression_words: 8,
            modifier_words: 10,
            filler_words: 20,
            max_tuples: 2,
            single_token_rate: 0.35,
            long_span_rate: 0.15,
            absent_holder_rate: 0.3,
            absent_target_rate: 0.15,
            overlap_fraction: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Holder,
    Target,
    Expression(Polarity),
}

struct Lexicon {
    holders: Vec<String>,
    targets: Vec<String>,
    expressions: [Vec<String>; 3],
    modifiers: Vec<String>,
    fillers: Vec<String>,
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

fn pseudo_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables)
        .map(|_| {
            format!(
                "{}{}",
                ONSETS.choose(rng).expect("non-empty"),
                VOWELS.choose(rng).expect("non-empty")
            )
        })
        .collect()
}

impl Lexicon {
    fn new(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut seen = HashSet::new();
        let mut draw = |n: usize, syllables: usize, capitalize: bool| -> Vec<String> {
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let mut w = pseudo_word(rng, syllables);
                if capitalize {
                    w[..1].make_ascii_uppercase();
                }
                if seen.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        };
        Self {
            holders: draw(cfg.holder_words.max(1), 2, true),
            targets: draw(cfg.target_words.max(1), 3, false),
            expressions: [
                draw(cfg.expression_words.max(1), 2, false),
                draw(cfg.expression_words.max(1), 2, false),
                draw(cfg.expression_words.max(1), 2, false),
            ],
            modifiers: draw(cfg.modifier_words.max(1), 1, false),
            fillers: draw(cfg.filler_words.max(1), 1, false),
        }
    }

    fn words_for(
        &self,
        role: Role,
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<(String, &'static str)> {
        (0..len)
            .map(|i| match role {
                Role::Holder => (
                    self.holders.choose(rng).expect("non-empty").clone(),
                    "PROPN",
                ),
                Role::Target => (self.targets.choose(rng).expect("non-empty").clone(), "NOUN"),
                Role::Expression(p) if i == 0 => {
                    let bank = &self.expressions[Polarity::ALL
                        .iter()
                        .position(|q| *q == p)
                        .expect("known polarity")];
                    (bank.choose(rng).expect("non-empty").clone(), "ADJ")
                }
                Role::Expression(_) => (
                    self.modifiers.choose(rng).expect("non-empty").clone(),
                    "ADV",
                ),
            })
            .collect()
    }
}

/// Tuple skeleton over slot indices.
struct Plan {
    slots: Vec<Role>,
    single: Vec<bool>,
    tuples: Vec<(Option<usize>, usize, Option<usize>)>,
}

impl Plan {
    fn new() -> Self {
        Self {
            slots: Vec::new(),
            single: Vec::new(),
            tuples: Vec::new(),
        }
    }

    fn slot(&mut self, role: Role) -> usize {
        self.slots.push(role);
        self.single.push(false);
        self.slots.len() - 1
    }

    fn single_slot(&mut self, role: Role) -> usize {
        let i = self.slot(role);
        self.single[i] = true;
        i
    }
}

fn random_polarity(rng: &mut ChaCha8Rng) -> Polarity {
    *Polarity::ALL.choose(rng).expect("non-empty")
}

fn plain_plan(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Plan {
    let mut plan = Plan::new();
    let k = rng.gen_range(1..=cfg.max_tuples.max(1));
    for _ in 0..k {
        let e = plan.slot(Role::Expression(random_polarity(rng)));
        let h = (!rng.gen_bool(cfg.absent_holder_rate)).then(|| plan.slot(Role::Holder));
        let t = (!rng.gen_bool(cfg.absent_target_rate)).then(|| plan.slot(Role::Target));
        plan.tuples.push((h, e, t));
    }
    plan
}

fn overlapped_plan(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Plan {
    let mut plan = Plan::new();
    if rng.gen_bool(0.5) {
        // One span is the holder of the first tuple and the target of the second.
        let shared = plan.slot(Role::Holder);
        let e1 = plan.slot(Role::Expression(random_polarity(rng)));
        let t1 = (!rng.gen_bool(cfg.absent_target_rate)).then(|| plan.slot(Role::Target));
        let e2 = plan.slot(Role::Expression(random_polarity(rng)));
        let h2 = (!rng.gen_bool(cfg.absent_holder_rate)).then(|| plan.slot(Role::Holder));
        plan.tuples.push((Some(shared), e1, t1));
        plan.tuples.push((h2, e2, Some(shared)));
    } else {
        // Single-token holder and expression share a head/tail relation cell
        // across two tuples that differ only in their target.
        let h = plan.single_slot(Role::Holder);
        let e = plan.single_slot(Role::Expression(random_polarity(rng)));
        let t1 = plan.slot(Role::Target);
        let t2 = plan.slot(Role::Target);
        plan.tuples.push((Some(h), e, Some(t1)));
        plan.tuples.push((Some(h), e, Some(t2)));
    }
    plan
}

fn span_len(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    if u < cfg.single_token_rate {
        1
    } else if u < cfg.single_token_rate + cfg.long_span_rate {
        rng.gen_range(4..=6)
    } else {
        rng.gen_range(2..=3)
    }
}

fn realize(
    plan: Plan,
    id: String,
    cfg: &SynthConfig,
    lex: &Lexicon,
    rng: &mut ChaCha8Rng,
) -> Sentence {
    let mut order: Vec<usize> = (0..plan.slots.len()).collect();
    order.shuffle(rng);

    let mut words: Vec<(String, &'static str)> = Vec::new();
    let filler = |rng: &mut ChaCha8Rng, out: &mut Vec<(String, &'static str)>, n: usize| {
        for _ in 0..n {
            out.push((lex.fillers.choose(rng).expect("non-empty").clone(), "ADP"));
        }
    };
    let lead = rng.gen_range(0..=1);
    filler(rng, &mut words, lead);
    let mut spans = vec![Span::single(0); plan.slots.len()];
    for (pos, &slot) in order.iter().enumerate() {
        let len = if plan.single[slot] {
            1
        } else {
            span_len(cfg, rng)
        };
        let start = words.len();
        words.extend(lex.words_for(plan.slots[slot], len, rng));
        spans[slot] = Span::new(start, start + len - 1);
        if pos + 1 < order.len() {
            let gap = rng.gen_range(1..=2);
            filler(rng, &mut words, gap);
        }
    }
    words.push((".".to_string(), "PUNCT"));

    let gold = plan
        .tuples
        .iter()
        .map(|&(h, e, t)| {
            let Role::Expression(polarity) = plan.slots[e] else {
                unreachable!("expression slot holds an expression role")
            };
            SentimentTuple::new(h.map(|i| spans[i]), spans[e], t.map(|i| spans[i]), polarity)
        })
        .collect();
    let tokens: Vec<String> = words.iter().map(|(w, _)| w.clone()).collect();
    Sentence {
        sent_id: id,
        lemmas: tokens.iter().map(|t| t.to_lowercase()).collect(),
        pos_tags: words.iter().map(|(_, p)| p.to_string()).collect(),
        tokens,
        gold,
    }
}

/// Generates `cfg.count` sentences. Exactly `round(overlap_fraction · count)`
/// of them are overlapped. Output is a pure function of the config.
pub fn generate_synthetic(cfg: &SynthConfig) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lex = Lexicon::new(cfg, &mut rng);
    let overlapped_count =
        ((cfg.overlap_fraction.clamp(0.0, 1.0) * cfg.count as f64).round() as usize).min(cfg.count);
    let mut overlapped = vec![false; cfg.count];
    overlapped[..overlapped_count]
        .iter_mut()
        .for_each(|o| *o = true);
    overlapped.shuffle(&mut rng);

    overlapped
        .into_iter()
        .enumerate()
        .map(|(i, ov)| {
            let plan = if ov {
                overlapped_plan(cfg, &mut rng)
            } else {
                plain_plan(cfg, &mut rng)
            };
            realize(plan, format!("synth-{i:05}"), cfg, &lex, &mut rng)
        })
        .collect()
}
