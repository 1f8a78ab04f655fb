use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskId {
    Ner,
    Qtc,
    Te,
    Ppdb,
    /// Full reading comprehension model (same container format).
    Rc,
}

impl TaskId {
    /// Skill tasks in ensemble order.
    pub const SKILLS: [TaskId; 4] = [TaskId::Ner, TaskId::Qtc, TaskId::Te, TaskId::Ppdb];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Ner => "ner",
            TaskId::Qtc => "qtc",
            TaskId::Te => "te",
            TaskId::Ppdb => "ppdb",
            TaskId::Rc => "rc",
        }
    }

    /// Whether the transferred output carries soft label vectors.
    pub fn has_label_output(self) -> bool {
        matches!(self, TaskId::Ner | TaskId::Qtc)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ner" => Ok(TaskId::Ner),
            "qtc" | "qc" => Ok(TaskId::Qtc),
            "te" => Ok(TaskId::Te),
            "ppdb" => Ok(TaskId::Ppdb),
            "rc" => Ok(TaskId::Rc),
            other => Err(Error::Config(format!("unknown task id {other:?}"))),
        }
    }
}

/// How the question-type classifier turns token vectors into one label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SupervisionMode {
    /// `softmax(sum_t (c_t W + b))`
    Token,
    /// `softmax(max_t(c_t) W + b)`
    Sentence,
}

impl SupervisionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SupervisionMode::Token => "token",
            SupervisionMode::Sentence => "sentence",
        }
    }
}

impl FromStr for SupervisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(SupervisionMode::Token),
            "sentence" => Ok(SupervisionMode::Sentence),
            other => Err(Error::Config(format!("unknown supervision mode {other:?}"))),
        }
    }
}
