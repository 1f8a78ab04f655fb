use std::collections::BTreeSet;

use crate::{Error, Result};

/// Dense index over a fixed set of label strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    /// Labels in the given order; duplicates rejected.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::Data("duplicate label".into()));
        }
        if labels.is_empty() {
            return Err(Error::Data("empty label set".into()));
        }
        Ok(LabelSet { labels })
    }

    /// Sorted set of every label observed.
    pub fn observed<'a, I: IntoIterator<Item = &'a str>>(labels: I) -> Result<Self> {
        let set: BTreeSet<&str> = labels.into_iter().collect();
        LabelSet::new(set)
    }

    /// BIO inventory: `O` first, then the observed `B-`/`I-` tags sorted.
    pub fn bio<'a, I: IntoIterator<Item = &'a str>>(tags: I) -> Result<Self> {
        let mut types: BTreeSet<&str> = BTreeSet::new();
        for t in tags {
            if let Some(ty) = t.strip_prefix("B-").or_else(|| t.strip_prefix("I-")) {
                types.insert(ty);
            } else if t != "O" {
                return Err(Error::Data(format!("not a BIO tag: {t}")));
            }
        }
        let mut labels = vec!["O".to_string()];
        for ty in types {
            labels.push(format!("B-{ty}"));
            labels.push(format!("I-{ty}"));
        }
        LabelSet::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Data(format!("label {label:?} outside the declared set")))
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}
