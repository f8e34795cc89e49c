//! Turning annotated examples into model inputs and expected targets.
//!
//! Four regimes are supported:
//!
//! | Regime | Input | Target |
//! |--------|-------|--------|
//! | [`Regime::Traditional`] | review | `c is w, given the expression: a` labels joined by `; ` |
//! | [`Regime::Sentinel`] | review + ` \| ` + template with `<extra_id_N>` slots | slot fills separated by sentinels |
//! | [`Regime::Mask`] | review + ` \| ` + template with `<mask>` slots | the whole input with slots filled |
//! | [`Regime::Mlm`] | review + prompt with one `[MASK]` answer slot | one verbalizer word |

mod render;
mod tables;
mod verbalizer;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AspectCategory, CategorySet};
use crate::error::{Error, Result};

pub use render::{
    render, render_apd_traditional_input, render_mask_prompt, render_mlm_prompt, render_sentinel_prompt,
    render_traditional, render_triplet_label, sentinel, trim_to_units, MlmExample, MlmTask, MASK_TOKEN,
    MLM_SLOT,
};
pub use tables::{CategoryTables, TemplateTables};
pub use verbalizer::Verbalizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Traditional,
    Sentinel,
    Mask,
    Mlm,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Traditional => "traditional",
            Regime::Sentinel => "sentinel",
            Regime::Mask => "mask",
            Regime::Mlm => "mlm",
        }
    }

    pub fn is_seq2seq(self) -> bool {
        !matches!(self, Regime::Mlm)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traditional" => Ok(Regime::Traditional),
            "sentinel" => Ok(Regime::Sentinel),
            "mask" => Ok(Regime::Mask),
            "mlm" => Ok(Regime::Mlm),
            other => Err(Error::Config(format!(
                "unknown regime {other:?} (expected traditional, sentinel, mask or mlm)"
            ))),
        }
    }
}

/// Language of label templates and MLM prompts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    En,
    Cs,
}

/// Fixed words of the `c is w, given the expression: a` label.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LabelGrammar {
    pub copula: &'static str,
    pub given: &'static str,
}

impl Language {
    pub(crate) fn grammar(self) -> LabelGrammar {
        match self {
            Language::En => LabelGrammar {
                copula: " is ",
                given: ", given the expression: ",
            },
            Language::Cs => LabelGrammar {
                copula: " je ",
                given: ", dáno výrazem: ",
            },
        }
    }
}

/// English display form: `FOOD#QUALITY` becomes `Food quality`.
pub fn english_display(category: &AspectCategory) -> String {
    let entity = category.entity().replace('_', " ").to_lowercase();
    let attribute = category.attribute().replace('_', " ").to_lowercase();
    let mut chars = entity.chars();
    let capitalized: String = match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    format!("{capitalized} {attribute}")
}

pub(crate) fn lookup_key(display: &str) -> String {
    display.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Display strings for the allowed categories, invertible for parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    display: BTreeMap<AspectCategory, String>,
    inverse: HashMap<String, AspectCategory>,
}

impl CategoryTable {
    /// Rule-based English rendering of every category in `allowed`.
    pub fn english(allowed: &CategorySet) -> Result<Self> {
        Self::from_map(allowed.iter().map(|c| (c.clone(), english_display(c))).collect())
    }

    /// Uses `translations`, which must cover every allowed category.
    pub fn translated(allowed: &CategorySet, translations: &BTreeMap<AspectCategory, String>) -> Result<Self> {
        let missing: Vec<String> = allowed
            .iter()
            .filter(|c| !translations.contains_key(*c))
            .map(AspectCategory::canonical)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "category translation table is missing {}",
                missing.join(", ")
            )));
        }
        Self::from_map(
            allowed
                .iter()
                .map(|c| (c.clone(), translations[c].trim().to_string()))
                .collect(),
        )
    }

    fn from_map(display: BTreeMap<AspectCategory, String>) -> Result<Self> {
        let mut inverse = HashMap::new();
        for (category, shown) in &display {
            if shown.is_empty() {
                return Err(Error::Config(format!("empty display name for {category}")));
            }
            if let Some(prev) = inverse.insert(lookup_key(shown), category.clone()) {
                return Err(Error::Config(format!(
                    "categories {prev} and {category} share the display name {shown:?}"
                )));
            }
        }
        Ok(Self { display, inverse })
    }

    pub fn display(&self, category: &AspectCategory) -> Result<&str> {
        self.display
            .get(category)
            .map(String::as_str)
            .ok_or_else(|| Error::Render(format!("category {category} has no display form")))
    }

    /// Case-insensitive, whitespace-normalized inverse lookup.
    pub fn lookup(&self, display: &str) -> Option<&AspectCategory> {
        self.inverse.get(&lookup_key(display))
    }

    pub fn categories(&self) -> impl Iterator<Item = &AspectCategory> {
        self.display.keys()
    }
}

/// Everything a renderer or parser needs besides the verbalizer.
#[derive(Debug, Clone)]
pub struct TemplateConfig {
    pub regime: Regime,
    pub language: Language,
    pub categories: CategoryTable,
    /// Joins the review and the template.
    pub separator: String,
    /// Joins per-triplet labels.
    pub triplet_joiner: String,
    /// Whitespace-word budget for MLM inputs.
    pub max_input_units: usize,
    /// Whether MLM prompts end with a period.
    pub mlm_final_period: bool,
}

pub const DEFAULT_SEPARATOR: &str = " | ";
pub const DEFAULT_TRIPLET_JOINER: &str = "; ";
pub const DEFAULT_MAX_INPUT_UNITS: usize = 400;

impl TemplateConfig {
    pub fn new(regime: Regime, language: Language, categories: CategoryTable) -> Self {
        Self {
            regime,
            language,
            categories,
            separator: DEFAULT_SEPARATOR.to_string(),
            triplet_joiner: DEFAULT_TRIPLET_JOINER.to_string(),
            max_input_units: DEFAULT_MAX_INPUT_UNITS,
            mlm_final_period: true,
        }
    }

    pub fn with_regime(&self, regime: Regime) -> Self {
        Self { regime, ..self.clone() }
    }
}

/// One rendered example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRendering {
    #[serde(rename = "id")]
    pub example_id: String,
    #[serde(rename = "input")]
    pub model_input: String,
    #[serde(rename = "target")]
    pub expected_target: String,
    pub regime: Regime,
    #[serde(rename = "n_triplets")]
    pub triplet_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(s: &str) -> AspectCategory {
        s.parse().unwrap()
    }

    #[test]
    fn english_display_rule() {
        assert_eq!(english_display(&cat("FOOD#QUALITY")), "Food quality");
        assert_eq!(english_display(&cat("SERVICE#GENERAL")), "Service general");
        assert_eq!(english_display(&cat("DRINKS#STYLE_OPTIONS")), "Drinks style options");
    }

    #[test]
    fn lookup_is_case_and_space_insensitive() {
        let set = CategorySet::new([cat("FOOD#QUALITY"), cat("FOOD#PRICES")]);
        let table = CategoryTable::english(&set).unwrap();
        assert_eq!(table.lookup("  food   QUALITY "), Some(&cat("FOOD#QUALITY")));
        assert_eq!(table.lookup("Food qualities"), None);
    }

    #[test]
    fn translations_must_be_total() {
        let set = CategorySet::new([cat("FOOD#QUALITY"), cat("FOOD#PRICES")]);
        let mut tr = BTreeMap::new();
        tr.insert(cat("FOOD#QUALITY"), "Kvalita jídla".to_string());
        assert!(CategoryTable::translated(&set, &tr).is_err());
        tr.insert(cat("FOOD#PRICES"), "Ceny jídla".to_string());
        let t = CategoryTable::translated(&set, &tr).unwrap();
        assert_eq!(t.display(&cat("FOOD#PRICES")).unwrap(), "Ceny jídla");
    }

    #[test]
    fn colliding_display_names_rejected() {
        let set = CategorySet::new([cat("FOOD#QUALITY"), cat("FOOD#PRICES")]);
        let mut tr = BTreeMap::new();
        tr.insert(cat("FOOD#QUALITY"), "Jídlo".to_string());
        tr.insert(cat("FOOD#PRICES"), "jídlo".to_string());
        assert!(CategoryTable::translated(&set, &tr).is_err());
    }
}
