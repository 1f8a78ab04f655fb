//! CoNLL-style NER columns: `token<TAB>tag`, blank line between sentences.

use std::io::{BufRead, Write};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSequence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

/// Relabels `I-X` after `O`, after `I-Y`/`B-Y` with `Y != X`, or at the
/// start of a sentence to `B-X`. Returns the number of repairs.
pub fn repair_bio(tags: &mut [String]) -> usize {
    let mut fixed = 0;
    let mut prev: Option<String> = None;
    for tag in tags.iter_mut() {
        if let Some(ty) = tag.strip_prefix("I-") {
            let continues = prev.as_deref().map_or(false, |p| {
                p.strip_prefix("B-").or_else(|| p.strip_prefix("I-")) == Some(ty)
            });
            if !continues {
                *tag = format!("B-{ty}");
                fixed += 1;
            }
        }
        prev = Some(tag.clone());
    }
    fixed
}

/// True when no `I-X` follows `O`, a different type, or the sentence start.
pub fn is_bio_valid(tags: &[String]) -> bool {
    let mut copy = tags.to_vec();
    repair_bio(&mut copy) == 0
}

/// Streaming reader; repaired-tag counts accumulate in [`ConllReader::repairs`].
pub struct ConllReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    repairs: usize,
    done: bool,
}

impl<R: BufRead> ConllReader<R> {
    pub fn new(reader: R) -> Self {
        ConllReader {
            lines: reader.lines(),
            line_no: 0,
            repairs: 0,
            done: false,
        }
    }

    pub fn repairs(&self) -> usize {
        self.repairs
    }
}

impl<R: BufRead> Iterator for ConllReader<R> {
    type Item = Result<LabeledSequence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut seq = LabeledSequence {
            tokens: Vec::new(),
            tags: Vec::new(),
        };
        loop {
            let line = match self.lines.next() {
                None => {
                    self.done = true;
                    break;
                }
                Some(Err(e)) => return Some(Err(e.into())),
                Some(Ok(l)) => l,
            };
            self.line_no += 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                if seq.tokens.is_empty() {
                    continue;
                }
                break;
            }
            let cols: Vec<&str> = trimmed.split(['\t', ' ']).filter(|c| !c.is_empty()).collect();
            if cols.len() != 2 {
                return Some(Err(Error::format(
                    self.line_no,
                    format!("expected token and tag columns, found {}", cols.len()),
                )));
            }
            let tag = cols[1];
            if tag != "O" && !(tag.starts_with("B-") || tag.starts_with("I-")) || tag.len() == 2 {
                return Some(Err(Error::format(self.line_no, format!("not a BIO tag: {tag}"))));
            }
            seq.tokens.push(cols[0].to_string());
            seq.tags.push(tag.to_string());
        }
        if seq.tokens.is_empty() {
            return None;
        }
        let fixed = repair_bio(&mut seq.tags);
        if fixed > 0 {
            log::warn!("repaired {fixed} BIO tag(s) in sentence ending at line {}", self.line_no);
        }
        self.repairs += fixed;
        Some(Ok(seq))
    }
}

/// Reads a whole file, returning sequences and the repair count.
pub fn read_conll_ner(path: &std::path::Path) -> Result<(Vec<LabeledSequence>, usize)> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut reader = ConllReader::new(file);
    let seqs = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((seqs, reader.repairs()))
}

pub fn write_conll<W: Write>(mut w: W, seqs: &[LabeledSequence]) -> Result<()> {
    for s in seqs {
        if s.tokens.len() != s.tags.len() {
            return Err(Error::Data("token/tag count mismatch".into()));
        }
        for (t, g) in s.tokens.iter().zip(&s.tags) {
            writeln!(w, "{t}\t{g}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> (Result<Vec<LabeledSequence>>, usize) {
        let mut r = ConllReader::new(s.as_bytes());
        let out = r.by_ref().collect();
        (out, r.repairs())
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn valid_sentence_unchanged() {
        let (seqs, fixed) = read("John\tB-PER\nlives\tO\n\nParis\tB-LOC\n");
        let seqs = seqs.unwrap();
        assert_eq!(fixed, 0);
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].tokens, strings(&["John", "lives"]));
        assert_eq!(seqs[0].tags, strings(&["B-PER", "O"]));
    }

    #[test]
    fn repairs_inside_after_outside() {
        let (seqs, fixed) = read("the\tO\nSmith\tI-PER\n");
        assert_eq!(seqs.unwrap()[0].tags, strings(&["O", "B-PER"]));
        assert_eq!(fixed, 1);
    }

    #[test]
    fn repairs_type_switch() {
        let mut tags = strings(&["B-PER", "I-LOC", "I-LOC"]);
        assert_eq!(repair_bio(&mut tags), 1);
        assert_eq!(tags, strings(&["B-PER", "B-LOC", "I-LOC"]));
    }

    #[test]
    fn ragged_line_is_format_error() {
        let (seqs, _) = read("John\tB-PER\nlives\n");
        match seqs {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
