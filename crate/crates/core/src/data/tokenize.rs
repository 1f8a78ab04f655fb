/// A token with its character span `[start, end)` in the source text.
///
/// Offsets count Unicode scalar values, matching the character offsets used
/// by SQuAD-style annotations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '“' | '”' | '‘' | '’' | '«' | '»' | '—' | '–' | '…' | '¿' | '¡')
}

/// Whitespace split, then leading and trailing punctuation become separate
/// one-character tokens. A trailing period stays attached when the word
/// already contains a period (`U.S.`).
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_word(&chars, start, i, &mut tokens);
    }
    tokens
}

fn split_word(chars: &[char], start: usize, end: usize, out: &mut Vec<Token>) {
    let single = |i: usize| Token {
        text: chars[i].to_string(),
        start: i,
        end: i + 1,
    };
    let mut lo = start;
    let mut hi = end;
    while lo < hi && is_punct(chars[lo]) {
        out.push(single(lo));
        lo += 1;
    }
    let mut trailing = Vec::new();
    while hi > lo && is_punct(chars[hi - 1]) {
        let c = chars[hi - 1];
        if c == '.' && chars[lo..hi - 1].contains(&'.') && chars[lo..hi - 1].iter().any(|c| c.is_alphanumeric()) {
            break;
        }
        trailing.push(single(hi - 1));
        hi -= 1;
    }
    if lo < hi {
        out.push(Token {
            text: chars[lo..hi].iter().collect(),
            start: lo,
            end: hi,
        });
    }
    out.extend(trailing.into_iter().rev());
}

/// Characters `[start, end)` of `text`.
pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}
