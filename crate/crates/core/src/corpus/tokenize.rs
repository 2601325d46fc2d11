/// A token with its character range `[start, end)` in the source text.
/// Offsets count Unicode scalar values, not bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whitespace tokenisation with punctuation split off: every maximal run of
/// word characters is a token and every other non-space character stands
/// alone.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    for (i, c) in text.chars().enumerate() {
        if is_word_char(c) {
            match current.as_mut() {
                Some((_, buf)) => buf.push(c),
                None => current = Some((i, c.to_string())),
            }
            continue;
        }
        if let Some((start, buf)) = current.take() {
            let end = start + buf.chars().count();
            tokens.push(Token {
                text: buf,
                start,
                end,
            });
        }
        if !c.is_whitespace() {
            tokens.push(Token {
                text: c.to_string(),
                start: i,
                end: i + 1,
            });
        }
    }
    if let Some((start, buf)) = current {
        let end = start + buf.chars().count();
        tokens.push(Token {
            text: buf,
            start,
            end,
        });
    }
    tokens
}

/// Locates pre-split tokens in `text`, left to right.
pub(crate) fn align_tokens(text: &str, words: &[String]) -> Option<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut cursor = 0;
    let mut out = Vec::with_capacity(words.len());
    for w in words {
        let wc: Vec<char> = w.chars().collect();
        if wc.is_empty() {
            return None;
        }
        let start = (cursor..=chars.len().saturating_sub(wc.len()))
            .find(|&s| chars[s..s + wc.len()] == wc[..])?;
        cursor = start + wc.len();
        out.push(Token {
            text: w.clone(),
            start,
            end: cursor,
        });
    }
    Some(out)
}
