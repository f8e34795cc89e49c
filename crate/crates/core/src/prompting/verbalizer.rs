use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;
use crate::error::{Error, Result};

/// Bijective polarity ↔ word mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VerbalizerTable", into = "VerbalizerTable")]
pub struct Verbalizer {
    // indexed in `Polarity::ALL` order
    words: [String; 3],
}

#[derive(Serialize, Deserialize)]
struct VerbalizerTable {
    positive: String,
    neutral: String,
    negative: String,
}

impl TryFrom<VerbalizerTable> for Verbalizer {
    type Error = Error;

    fn try_from(t: VerbalizerTable) -> Result<Self> {
        Verbalizer::new(&t.positive, &t.neutral, &t.negative)
    }
}

impl From<Verbalizer> for VerbalizerTable {
    fn from(v: Verbalizer) -> Self {
        VerbalizerTable {
            positive: v.word(Polarity::Positive).to_string(),
            neutral: v.word(Polarity::Neutral).to_string(),
            negative: v.word(Polarity::Negative).to_string(),
        }
    }
}

fn slot(p: Polarity) -> usize {
    match p {
        Polarity::Positive => 0,
        Polarity::Negative => 1,
        Polarity::Neutral => 2,
    }
}

fn normalize(word: &str) -> String {
    word.trim().to_lowercase()
}

impl Verbalizer {
    pub fn new(positive: &str, neutral: &str, negative: &str) -> Result<Self> {
        let words = [positive, negative, neutral].map(|w| w.trim().to_string());
        for w in &words {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("verbalizer word {w:?} must be a single word")));
            }
        }
        for i in 0..3 {
            for j in i + 1..3 {
                if normalize(&words[i]) == normalize(&words[j]) {
                    return Err(Error::Config(format!(
                        "verbalizer word {:?} is used for two polarities",
                        words[i]
                    )));
                }
            }
        }
        Ok(Self { words })
    }

    /// Label words for seq2seq targets: great / ok / bad.
    pub fn english() -> Self {
        Self::new("great", "ok", "bad").expect("static table is bijective")
    }

    /// Czech answer words for MLM prompts: dobrý / ok / špatný.
    pub fn czech() -> Self {
        Self::new("dobrý", "ok", "špatný").expect("static table is bijective")
    }

    pub fn word(&self, polarity: Polarity) -> &str {
        &self.words[slot(polarity)]
    }

    /// Exact match after lower-casing and trimming.
    pub fn inverse(&self, word: &str) -> Option<Polarity> {
        let key = normalize(word);
        Polarity::ALL.into_iter().find(|&p| normalize(self.word(p)) == key)
    }

    /// The three words in tie-break order (positive, negative, neutral).
    pub fn candidates(&self) -> Vec<String> {
        self.words.to_vec()
    }
}
