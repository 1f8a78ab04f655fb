//! TREC question classification lines: `COARSE:fine question text ...`.

use std::io::{BufRead, Write};

use super::tokenize::tokenize;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    pub label: String,
}

fn parse_line(line: &str, line_no: usize) -> Result<LabeledSentence> {
    let (label, text) = line
        .split_once(char::is_whitespace)
        .ok_or_else(|| Error::format(line_no, "missing question text"))?;
    let valid = label
        .split_once(':')
        .map_or(false, |(c, f)| !c.is_empty() && !f.is_empty() && c.chars().all(|ch| ch.is_ascii_uppercase()));
    if !valid {
        return Err(Error::format(line_no, format!("missing COARSE:fine label prefix in {label:?}")));
    }
    let tokens: Vec<String> = tokenize(text).into_iter().map(|t| t.text).collect();
    if tokens.is_empty() {
        return Err(Error::format(line_no, "empty question"));
    }
    Ok(LabeledSentence {
        tokens,
        label: label.to_string(),
    })
}

/// Streams labeled questions, skipping blank lines.
pub fn trec_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<LabeledSentence>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(parse_line(l.trim_end_matches('\r'), i + 1)),
    })
}

pub fn read_trec_qc(path: &std::path::Path) -> Result<Vec<LabeledSentence>> {
    trec_lines(std::io::BufReader::new(std::fs::File::open(path)?)).collect()
}

pub fn write_trec<W: Write>(mut w: W, sents: &[LabeledSentence]) -> Result<()> {
    for s in sents {
        writeln!(w, "{} {}", s.label, s.tokens.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_label_and_tokens() {
        let s: Vec<_> = trec_lines("NUM:date When did X happen ?\n".as_bytes())
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(s[0].label, "NUM:date");
        assert_eq!(s[0].tokens.len(), 5);
    }

    #[test]
    fn missing_label_prefix() {
        let r: Result<Vec<_>> = trec_lines("\nWhen did X happen ?\n".as_bytes()).collect();
        assert!(matches!(r, Err(Error::Format { line: 2, .. })));
    }
}
