//! Sentence-pair TSV: `label<TAB>sentence1<TAB>sentence2`.

use std::io::{BufRead, Write};

use super::labels::LabelSet;
use super::tokenize::tokenize;
use crate::{Error, Result};

pub const TE_LABELS: [&str; 3] = ["entailment", "neutral", "contradiction"];

/// The six PPDB 2.0 relation classes.
pub const PPDB_LABELS: [&str; 6] = [
    "Equivalence",
    "ForwardEntailment",
    "ReverseEntailment",
    "Exclusion",
    "OtherRelated",
    "Independent",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledPair {
    pub premise: Vec<String>,
    pub hypothesis: Vec<String>,
    pub label: String,
}

fn parse_line(line: &str, line_no: usize, expected: &LabelSet) -> Result<LabeledPair> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 3 {
        return Err(Error::format(line_no, format!("expected 3 tab-separated fields, got {}", cols.len())));
    }
    expected
        .index(cols[0])
        .map_err(|_| Error::Data(format!("line {line_no}: unknown label {:?}", cols[0])))?;
    let toks = |s: &str| -> Vec<String> { tokenize(s).into_iter().map(|t| t.text).collect() };
    let (premise, hypothesis) = (toks(cols[1]), toks(cols[2]));
    if premise.is_empty() || hypothesis.is_empty() {
        return Err(Error::Data(format!("line {line_no}: empty sentence field")));
    }
    Ok(LabeledPair {
        premise,
        hypothesis,
        label: cols[0].to_string(),
    })
}

pub fn pair_lines<'a, R: BufRead + 'a>(
    reader: R,
    expected: &'a LabelSet,
) -> impl Iterator<Item = Result<LabeledPair>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(parse_line(l.trim_end_matches('\r'), i + 1, expected)),
    })
}

pub fn read_pairs(path: &std::path::Path, expected: &LabelSet) -> Result<Vec<LabeledPair>> {
    pair_lines(std::io::BufReader::new(std::fs::File::open(path)?), expected).collect()
}

pub fn write_pairs<W: Write>(mut w: W, pairs: &[LabeledPair]) -> Result<()> {
    for p in pairs {
        writeln!(w, "{}\t{}\t{}", p.label, p.premise.join(" "), p.hypothesis.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entailment_example() {
        let te = LabelSet::new(TE_LABELS).unwrap();
        let p: Vec<_> = pair_lines("entailment\tDogs like eating food .\tAnimals like eating .".as_bytes(), &te)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(p[0].premise.len(), 5);
        assert_eq!(p[0].hypothesis, ["Animals", "like", "eating", "."]);
    }

    #[test]
    fn seventh_ppdb_label_rejected() {
        let ppdb = LabelSet::new(PPDB_LABELS).unwrap();
        let r: Result<Vec<_>> = pair_lines("Synonym\ta\tb".as_bytes(), &ppdb).collect();
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn empty_sentence_rejected() {
        let te = LabelSet::new(TE_LABELS).unwrap();
        let r: Result<Vec<_>> = pair_lines("neutral\t \tb".as_bytes(), &te).collect();
        assert!(matches!(r, Err(Error::Data(_))));
    }
}
