//! Recovering opinion triplets from generated text and projecting them onto
//! the individual ABSA tasks.
//!
//! The seq2seq parsers are total: any string parses, and every clause that
//! does not match the label grammar is dropped and reported in
//! [`ParsedOutput::diagnostics`].

mod project;
mod seq2seq;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{OpinionTriplet, Polarity};
use crate::error::{Error, Result};
use crate::prompting::Verbalizer;

pub use project::{polarity_prediction, project_task, Item, PredictionRecord, TaskPrediction};
pub use seq2seq::{parse_mask_output, parse_output, parse_sentinel_output, parse_traditional_output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Acd,
    Ate,
    Acte,
    Tasd,
    Apd,
    Sc,
}

impl Task {
    pub const TUPLE_TASKS: [Task; 4] = [Task::Acd, Task::Ate, Task::Acte, Task::Tasd];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Acd => "acd",
            Task::Ate => "ate",
            Task::Acte => "acte",
            Task::Tasd => "tasd",
            Task::Apd => "apd",
            Task::Sc => "sc",
        }
    }

    /// Tuple tasks are scored with micro F1, the rest with accuracy.
    pub fn is_tuple_task(self) -> bool {
        Self::TUPLE_TASKS.contains(&self)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acd" => Ok(Task::Acd),
            "ate" => Ok(Task::Ate),
            "acte" => Ok(Task::Acte),
            "tasd" => Ok(Task::Tasd),
            "apd" => Ok(Task::Apd),
            "sc" => Ok(Task::Sc),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    UnknownCategory,
    UnknownPolarityWord,
    MalformedClause,
    EmptyTerm,
    IncompleteGroup,
    SeparatorMissing,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::UnknownCategory => "unknown category",
            FailureReason::UnknownPolarityWord => "unknown polarity word",
            FailureReason::MalformedClause => "malformed clause",
            FailureReason::EmptyTerm => "empty term",
            FailureReason::IncompleteGroup => "incomplete group",
            FailureReason::SeparatorMissing => "separator missing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub clause: String,
    pub reason: FailureReason,
}

/// Triplets recovered from one generated string.
///
/// `triplets.len() + dropped_clauses` is the number of clauses attempted.
/// A missing mask-regime separator is reported in `diagnostics` without
/// counting as a dropped clause.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedOutput {
    pub triplets: Vec<OpinionTriplet>,
    pub dropped_clauses: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParsedOutput {
    pub fn attempted(&self) -> usize {
        self.triplets.len() + self.dropped_clauses
    }

    pub(crate) fn drop_clause(&mut self, clause: &str, reason: FailureReason) {
        self.dropped_clauses += 1;
        self.diagnostics.push(Diagnostic {
            clause: clause.to_string(),
            reason,
        });
    }
}

/// Inverts the word an MLM backend chose for the answer slot.
pub fn parse_mlm_output(top_token: &str, v: &Verbalizer) -> Result<Polarity> {
    v.inverse(top_token)
        .ok_or_else(|| Error::UnconstrainedOutput(top_token.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlm_words() {
        let v = Verbalizer::czech();
        assert_eq!(parse_mlm_output("dobrý", &v).unwrap(), Polarity::Positive);
        assert_eq!(parse_mlm_output("ok", &v).unwrap(), Polarity::Neutral);
        assert_eq!(parse_mlm_output("špatný", &v).unwrap(), Polarity::Negative);
        let err = parse_mlm_output("wonderful", &v).unwrap_err();
        assert!(err.to_string().contains("unconstrained backend output"), "{err}");
    }

    #[test]
    fn task_names() {
        for t in [Task::Acd, Task::Ate, Task::Acte, Task::Tasd, Task::Apd, Task::Sc] {
            assert_eq!(t.as_str().parse::<Task>().unwrap(), t);
        }
        assert!("absa".parse::<Task>().is_err());
    }
}
