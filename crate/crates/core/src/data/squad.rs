//! SQuAD v1.1 JSON and its alignment onto tokenizer spans.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::{char_slice, tokenize, Token};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquadFile {
    #[serde(default)]
    pub version: String,
    pub data: Vec<Article>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Article {
    #[serde(default)]
    pub title: String,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub context: String,
    pub qas: Vec<Qa>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qa {
    pub id: String,
    pub question: String,
    pub answers: Vec<Answer>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub answer_start: usize,
}

/// One question over a tokenized document with its gold token span.
#[derive(Clone, Debug, PartialEq)]
pub struct RcExample {
    pub id: String,
    pub paragraph_id: String,
    pub context: String,
    pub doc: Vec<Token>,
    pub question: Vec<String>,
    /// Inclusive token span `(start, end)` of the first gold answer.
    pub span: (usize, usize),
    /// Every gold answer string, for evaluation.
    pub answers: Vec<String>,
}

impl RcExample {
    pub fn doc_words(&self) -> Vec<&str> {
        self.doc.iter().map(|t| t.text.as_str()).collect()
    }

    /// Source text covered by the inclusive token span `(i, j)`.
    pub fn span_text(&self, i: usize, j: usize) -> String {
        char_slice(&self.context, self.doc[i].start, self.doc[j].end)
    }
}

/// Smallest token span covering characters `[start, end)`.
pub fn align_span(tokens: &[Token], start: usize, end: usize) -> Option<(usize, usize)> {
    if start >= end {
        return None;
    }
    let s = tokens.iter().position(|t| t.end > start)?;
    let e = tokens.iter().rposition(|t| t.start < end)?;
    (s <= e).then_some((s, e))
}

impl SquadFile {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    /// Paragraph ids in file order, `"{article}-{paragraph}"`.
    pub fn paragraph_ids(&self) -> Vec<String> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(a, art)| (0..art.paragraphs.len()).map(move |p| format!("{a}-{p}")))
            .collect()
    }

    pub fn num_paragraphs(&self) -> usize {
        self.data.iter().map(|a| a.paragraphs.len()).sum()
    }

    pub fn num_questions(&self) -> usize {
        self.data.iter().flat_map(|a| &a.paragraphs).map(|p| p.qas.len()).sum()
    }

    /// Aligns every question; returns the examples and the number dropped
    /// because their first answer could not be aligned.
    pub fn examples(&self) -> (Vec<RcExample>, usize) {
        let mut out = Vec::new();
        let mut dropped = 0;
        for (a, art) in self.data.iter().enumerate() {
            for (p, para) in art.paragraphs.iter().enumerate() {
                let doc = tokenize(&para.context);
                let n_chars = para.context.chars().count();
                for qa in &para.qas {
                    let Some(first) = qa.answers.first() else {
                        dropped += 1;
                        continue;
                    };
                    let end = first.answer_start + first.text.chars().count();
                    let span = (end <= n_chars)
                        .then(|| char_slice(&para.context, first.answer_start, end) == first.text)
                        .filter(|ok| *ok)
                        .and_then(|_| align_span(&doc, first.answer_start, end));
                    let question: Vec<String> = tokenize(&qa.question).into_iter().map(|t| t.text).collect();
                    match span {
                        Some(span) if !question.is_empty() => out.push(RcExample {
                            id: qa.id.clone(),
                            paragraph_id: format!("{a}-{p}"),
                            context: para.context.clone(),
                            doc: doc.clone(),
                            question,
                            span,
                            answers: qa.answers.iter().map(|x| x.text.clone()).collect(),
                        }),
                        _ => dropped += 1,
                    }
                }
            }
        }
        (out, dropped)
    }

    /// Keeps only the listed paragraphs, in file order; empty articles go.
    pub fn retain_paragraphs(&self, keep: &std::collections::HashSet<String>) -> SquadFile {
        let data = self
            .data
            .iter()
            .enumerate()
            .filter_map(|(a, art)| {
                let paragraphs: Vec<Paragraph> = art
                    .paragraphs
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| keep.contains(&format!("{a}-{p}")))
                    .map(|(_, para)| para.clone())
                    .collect();
                (!paragraphs.is_empty()).then(|| Article {
                    title: art.title.clone(),
                    paragraphs,
                })
            })
            .collect();
        SquadFile {
            version: self.version.clone(),
            data,
        }
    }
}

pub fn read_squad(path: &Path) -> Result<(Vec<RcExample>, usize)> {
    let file = SquadFile::read(path).map_err(|e| match e {
        Error::Json(j) => Error::format(j.line(), j.to_string()),
        other => other,
    })?;
    Ok(file.examples())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(context: &str, answers: &[(&str, usize)]) -> SquadFile {
        SquadFile {
            version: "1.1".into(),
            data: vec![Article {
                title: "t".into(),
                paragraphs: vec![Paragraph {
                    context: context.into(),
                    qas: answers
                        .iter()
                        .enumerate()
                        .map(|(i, (text, start))| Qa {
                            id: format!("q{i}"),
                            question: "What ?".into(),
                            answers: vec![Answer {
                                text: text.to_string(),
                                answer_start: *start,
                            }],
                        })
                        .collect(),
                }],
            }],
        }
    }

    #[test]
    fn aligns_number_inside_punctuation() {
        let ctx = "It opened in 1999, they said.";
        let (ex, dropped) = file(ctx, &[("1999", 13)]).examples();
        assert_eq!(dropped, 0);
        let e = &ex[0];
        assert_eq!(e.doc[e.span.0].text, "1999");
        assert_eq!(e.span.0, e.span.1);
        assert!(e.span_text(e.span.0, e.span.1).contains("1999"));
    }

    #[test]
    fn aligns_two_token_answer() {
        let ctx = "She moved to New York in May.";
        let (ex, _) = file(ctx, &[("New York", 13)]).examples();
        let (s, e) = ex[0].span;
        assert_eq!(e - s + 1, 2);
        assert_eq!(ex[0].span_text(s, e), "New York");
    }

    #[test]
    fn partial_token_answer_uses_covering_span() {
        let ctx = "The U.S.-based firm";
        let (ex, _) = file(ctx, &[("U.S.", 4)]).examples();
        let (s, e) = ex[0].span;
        assert!(ex[0].span_text(s, e).contains("U.S."));
    }

    #[test]
    fn out_of_range_answer_dropped() {
        let (ex, dropped) = file("short", &[("x", 40)]).examples();
        assert!(ex.is_empty());
        assert_eq!(dropped, 1);
    }

    #[test]
    fn malformed_json_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(&p, "{\"data\": [").unwrap();
        assert!(matches!(read_squad(&p), Err(Error::Format { .. })));
    }
}
