//! Annotated corpora: domain types, readers for the ABSA XML and polarity TSV
//! formats, deterministic splits, and pre-training corpus deduplication.

mod dedup;
mod split;
mod tsv;
mod xml;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use dedup::{dedup_pretrain_corpus, normalize_review, AnnotatedSet, Dedup, DedupStats};
pub use split::{hold_out_validation, make_split, write_jsonl, SplitSpec};
pub use tsv::{load_polarity_corpus, parse_polarity_tsv};
pub use xml::{load_absa_corpus, parse_absa_xml, write_absa_xml};

/// Sentiment polarity of an opinion or a whole document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    /// All polarities in the fixed tie-break order.
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            other => Err(Error::UnknownPolarity(other.to_string())),
        }
    }
}

/// Maps a 0–5 star rating to its distantly supervised polarity label.
///
/// 0–1 stars are negative, 2–3 neutral and 4–5 positive.
pub fn star_to_polarity(stars: i64) -> Result<Polarity> {
    match stars {
        0 | 1 => Ok(Polarity::Negative),
        2 | 3 => Ok(Polarity::Neutral),
        4 | 5 => Ok(Polarity::Positive),
        other => Err(Error::StarsOutOfRange(other)),
    }
}

/// An entity–attribute pair such as `FOOD#QUALITY`.
///
/// Both halves are stored upper-case; the canonical string form is
/// `ENTITY#ATTRIBUTE`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AspectCategory {
    entity: String,
    attribute: String,
}

impl AspectCategory {
    pub fn new(entity: &str, attribute: &str) -> Result<Self> {
        let entity = entity.trim();
        let attribute = attribute.trim();
        let valid = |s: &str| !s.is_empty() && !s.contains('#') && !s.chars().any(char::is_whitespace);
        if !valid(entity) || !valid(attribute) {
            return Err(Error::MalformedCategory(format!("{entity}#{attribute}")));
        }
        Ok(Self {
            entity: entity.to_uppercase(),
            attribute: attribute.to_uppercase(),
        })
    }

    pub fn entity(&self) -> &str {
        &self.entity
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn canonical(&self) -> String {
        format!("{}#{}", self.entity, self.attribute)
    }
}

impl fmt::Display for AspectCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.entity, self.attribute)
    }
}

impl FromStr for AspectCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once('#') {
            Some((entity, attribute)) => AspectCategory::new(entity, attribute),
            None => Err(Error::MalformedCategory(s.to_string())),
        }
    }
}

impl Serialize for AspectCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AspectCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The closed set of categories a corpus may use.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategorySet(BTreeSet<AspectCategory>);

impl CategorySet {
    pub fn new(categories: impl IntoIterator<Item = AspectCategory>) -> Self {
        Self(categories.into_iter().collect())
    }

    /// Every category used by at least one triplet, in canonical order.
    pub fn observed<'a>(sentences: impl IntoIterator<Item = &'a AbsaSentence>) -> Self {
        Self(
            sentences
                .into_iter()
                .flat_map(|s| s.triplets.iter().map(|t| t.category.clone()))
                .collect(),
        )
    }

    pub fn contains(&self, category: &AspectCategory) -> bool {
        self.0.contains(category)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AspectCategory> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn check(&self, category: &AspectCategory) -> Result<()> {
        if self.contains(category) {
            Ok(())
        } else {
            Err(Error::UnknownCategory {
                category: category.canonical(),
                allowed: self
                    .0
                    .iter()
                    .map(AspectCategory::canonical)
                    .collect::<Vec<_>>()
                    .join(", "),
            })
        }
    }
}

impl FromIterator<AspectCategory> for CategorySet {
    fn from_iter<I: IntoIterator<Item = AspectCategory>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// One (category, term, polarity) opinion. A `None` term is the NULL term of
/// an implicit aspect.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OpinionTriplet {
    pub category: AspectCategory,
    #[serde(deserialize_with = "deserialize_term")]
    pub term: Option<String>,
    pub polarity: Polarity,
}

fn deserialize_term<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    let term = Option::<String>::deserialize(d)?;
    match term {
        Some(t) if t.trim().is_empty() => Err(serde::de::Error::custom("aspect term is empty")),
        other => Ok(other),
    }
}

impl OpinionTriplet {
    /// Builds a triplet; an explicit term must be non-empty after trimming.
    pub fn new(category: AspectCategory, term: Option<String>, polarity: Polarity) -> Result<Self> {
        if let Some(t) = &term {
            if t.trim().is_empty() {
                return Err(Error::Validation(format!(
                    "empty aspect term for category {category}"
                )));
            }
        }
        Ok(Self {
            category,
            term,
            polarity,
        })
    }

    pub fn term_or_null(&self) -> &str {
        self.term.as_deref().unwrap_or(NULL_TERM)
    }
}

/// Textual marker of an implicit aspect term.
pub const NULL_TERM: &str = "NULL";

/// One annotated sentence of an ABSA corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsaSentence {
    pub review_id: String,
    pub sentence_id: String,
    pub text: String,
    pub triplets: Vec<OpinionTriplet>,
}

/// One document of a sentiment classification corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarityDocument {
    pub doc_id: String,
    pub text: String,
    pub label: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stars: Option<u8>,
}

impl PolarityDocument {
    pub fn new(doc_id: String, text: String, label: Polarity, stars: Option<u8>) -> Result<Self> {
        if let Some(s) = stars {
            let derived = star_to_polarity(i64::from(s))?;
            if derived != label {
                return Err(Error::Validation(format!(
                    "document {doc_id}: label {label} disagrees with {s} stars ({derived})"
                )));
            }
        }
        Ok(Self {
            doc_id,
            text,
            label,
            stars,
        })
    }
}

/// Per-label counts of a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

impl LabelCounts {
    pub fn add(&mut self, p: Polarity) {
        match p {
            Polarity::Positive => self.positive += 1,
            Polarity::Negative => self.negative += 1,
            Polarity::Neutral => self.neutral += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative + self.neutral
    }

    pub fn of_documents(docs: &[PolarityDocument]) -> Self {
        let mut counts = Self::default();
        docs.iter().for_each(|d| counts.add(d.label));
        counts
    }

    /// Sentiment labels counted per opinion, as used for APD and TASD.
    pub fn of_opinions(sentences: &[AbsaSentence]) -> Self {
        let mut counts = Self::default();
        sentences
            .iter()
            .flat_map(|s| &s.triplets)
            .for_each(|t| counts.add(t.polarity));
        counts
    }
}
