use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::Sentence;
use crate::{Error, Result};

pub const UNK: &str = "<unk>";

/// String ↔ index table; index 0 is always the unknown entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Index {
    items: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl Default for Index {
    fn default() -> Self {
        Self::from_items(Vec::new())
    }
}

impl Index {
    fn from_items(items: impl IntoIterator<Item = String>) -> Self {
        let mut idx = Self {
            items: vec![UNK.to_string()],
            lookup: HashMap::from([(UNK.to_string(), 0)]),
        };
        for it in items {
            idx.add(&it);
        }
        idx
    }

    pub fn add(&mut self, item: &str) -> usize {
        if let Some(&i) = self.lookup.get(item) {
            return i;
        }
        self.items.push(item.to_string());
        self.lookup.insert(item.to_string(), self.items.len() - 1);
        self.items.len() - 1
    }

    pub fn get(&self, item: &str) -> usize {
        self.lookup.get(item).copied().unwrap_or(0)
    }

    pub fn contains(&self, item: &str) -> bool {
        self.lookup.contains_key(item)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// One entry per line; the line number is the index.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.items.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut lines = text.lines();
        if lines.next() != Some(UNK) {
            return Err(Error::Config(format!(
                "{}: first line must be {UNK}",
                path.display()
            )));
        }
        Ok(Self::from_items(lines.map(str::to_string)))
    }
}

/// Token-level feature ids of one sentence (no sentinel).
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSentence {
    pub words: Vec<usize>,
    pub pos: Vec<usize>,
    pub lemmas: Vec<usize>,
    pub chars: Vec<Vec<usize>>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocab {
    pub words: Index,
    pub pos: Index,
    pub lemmas: Index,
    pub chars: Index,
}

impl Vocab {
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Self {
        let mut v = Self::default();
        for s in sentences {
            for t in &s.tokens {
                v.words.add(t);
                for c in t.chars() {
                    v.chars.add(&c.to_string());
                }
            }
            for p in &s.pos_tags {
                v.pos.add(p);
            }
            for l in &s.lemmas {
                v.lemmas.add(l);
            }
        }
        v
    }

    pub fn encode(&self, s: &Sentence) -> EncodedSentence {
        EncodedSentence {
            words: s.tokens.iter().map(|t| self.words.get(t)).collect(),
            pos: s.pos_tags.iter().map(|p| self.pos.get(p)).collect(),
            lemmas: s.lemmas.iter().map(|l| self.lemmas.get(l)).collect(),
            chars: s
                .tokens
                .iter()
                .map(|t| {
                    let ids: Vec<usize> =
                        t.chars().map(|c| self.chars.get(&c.to_string())).collect();
                    if ids.is_empty() {
                        vec![0]
                    } else {
                        ids
                    }
                })
                .collect(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.words.save(&dir.join("words.txt"))?;
        self.pos.save(&dir.join("pos.txt"))?;
        self.lemmas.save(&dir.join("lemmas.txt"))?;
        self.chars.save(&dir.join("chars.txt"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            words: Index::load(&dir.join("words.txt"))?,
            pos: Index::load(&dir.join("pos.txt"))?,
            lemmas: Index::load(&dir.join("lemmas.txt"))?,
            chars: Index::load(&dir.join("chars.txt"))?,
        })
    }
}
