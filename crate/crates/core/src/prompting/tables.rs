use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CategoryTable, Language, Regime, TemplateConfig, Verbalizer};
use super::{DEFAULT_MAX_INPUT_UNITS, DEFAULT_SEPARATOR, DEFAULT_TRIPLET_JOINER};
use crate::corpus::{AspectCategory, CategorySet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryTables {
    /// Allowed pairs; when absent the pairs observed in the training data
    /// are used.
    #[serde(default)]
    pub allowed: Option<Vec<AspectCategory>>,
    /// Czech display names, required when any template is Czech.
    #[serde(default)]
    pub cs: BTreeMap<AspectCategory, String>,
    /// Overrides of the rule-based English display names.
    #[serde(default)]
    pub en: BTreeMap<AspectCategory, String>,
}

fn default_language() -> Language {
    Language::En
}

fn default_mlm_language() -> Language {
    Language::Cs
}

fn default_separator() -> String {
    DEFAULT_SEPARATOR.to_string()
}

fn default_joiner() -> String {
    DEFAULT_TRIPLET_JOINER.to_string()
}

fn default_max_units() -> usize {
    DEFAULT_MAX_INPUT_UNITS
}

fn default_true() -> bool {
    true
}

/// Template, verbalizer and category-translation settings as read from a
/// TOML config file.
///
/// ```toml
/// language = "en"          # seq2seq label language
/// mlm_language = "cs"      # MLM prompt language
///
/// [verbalizer]
/// positive = "great"
/// neutral = "ok"
/// negative = "bad"
///
/// [categories.cs]
/// "FOOD#QUALITY" = "Kvalita jídla"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateTables {
    #[serde(default = "default_language")]
    pub language: Language,
    #[serde(default = "default_mlm_language")]
    pub mlm_language: Language,
    #[serde(default = "default_separator")]
    pub separator: String,
    #[serde(default = "default_joiner")]
    pub triplet_joiner: String,
    #[serde(default = "default_max_units")]
    pub max_input_units: usize,
    #[serde(default = "default_true")]
    pub mlm_final_period: bool,
    /// Label words of seq2seq targets.
    #[serde(default)]
    pub verbalizer: Option<Verbalizer>,
    /// Answer words of MLM prompts.
    #[serde(default)]
    pub mlm_verbalizer: Option<Verbalizer>,
    #[serde(default)]
    pub categories: CategoryTables,
}

impl Default for TemplateTables {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

fn default_verbalizer(language: Language) -> Verbalizer {
    match language {
        Language::En => Verbalizer::english(),
        Language::Cs => Verbalizer::czech(),
    }
}

impl TemplateTables {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&src)
    }

    /// Configured allowed pairs, if any.
    pub fn allowed(&self) -> Option<CategorySet> {
        self.categories.allowed.as_ref().map(|a| a.iter().cloned().collect())
    }

    pub fn language_for(&self, regime: Regime) -> Language {
        if regime == Regime::Mlm {
            self.mlm_language
        } else {
            self.language
        }
    }

    pub fn verbalizer_for(&self, regime: Regime) -> Verbalizer {
        let configured = if regime == Regime::Mlm {
            &self.mlm_verbalizer
        } else {
            &self.verbalizer
        };
        configured
            .clone()
            .unwrap_or_else(|| default_verbalizer(self.language_for(regime)))
    }

    pub fn category_table(&self, language: Language, allowed: &CategorySet) -> Result<CategoryTable> {
        match language {
            Language::Cs => CategoryTable::translated(allowed, &self.categories.cs),
            Language::En if self.categories.en.is_empty() => CategoryTable::english(allowed),
            Language::En => {
                let mut names: BTreeMap<AspectCategory, String> =
                    allowed.iter().map(|c| (c.clone(), super::english_display(c))).collect();
                for (c, name) in &self.categories.en {
                    if let Some(slot) = names.get_mut(c) {
                        slot.clone_from(name);
                    }
                }
                CategoryTable::translated(allowed, &names)
            }
        }
    }

    pub fn template_config(&self, regime: Regime, allowed: &CategorySet) -> Result<TemplateConfig> {
        let language = self.language_for(regime);
        if self.max_input_units == 0 {
            return Err(Error::Config("max_input_units must be positive".into()));
        }
        Ok(TemplateConfig {
            regime,
            language,
            categories: self.category_table(language, allowed)?,
            separator: self.separator.clone(),
            triplet_joiner: self.triplet_joiner.clone(),
            max_input_units: self.max_input_units,
            mlm_final_period: self.mlm_final_period,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn allowed() -> CategorySet {
        CategorySet::new(["FOOD#QUALITY".parse().unwrap(), "SERVICE#GENERAL".parse().unwrap()])
    }

    #[test]
    fn defaults() {
        let t = TemplateTables::default();
        assert_eq!(t.separator, " | ");
        assert_eq!(t.max_input_units, 400);
        assert_eq!(t.verbalizer_for(Regime::Sentinel), Verbalizer::english());
        assert_eq!(t.verbalizer_for(Regime::Mlm), Verbalizer::czech());
        assert!(t.template_config(Regime::Traditional, &allowed()).is_ok());
        // Czech MLM prompts need translations
        assert!(t.template_config(Regime::Mlm, &allowed()).is_err());
    }

    #[test]
    fn reads_tables() {
        let t = TemplateTables::from_toml_str(
            r#"
max_input_units = 128

[verbalizer]
positive = "good"
neutral = "meh"
negative = "awful"

[categories]
allowed = ["FOOD#QUALITY", "SERVICE#GENERAL"]

[categories.cs]
"FOOD#QUALITY" = "Kvalita jídla"
"SERVICE#GENERAL" = "Obsluha"

[categories.en]
"SERVICE#GENERAL" = "Service"
"#,
        )
        .unwrap();
        assert_eq!(t.allowed().unwrap(), allowed());
        assert_eq!(t.verbalizer_for(Regime::Traditional).word(crate::corpus::Polarity::Neutral), "meh");
        let mlm = t.template_config(Regime::Mlm, &allowed()).unwrap();
        assert_eq!(mlm.categories.display(&"SERVICE#GENERAL".parse().unwrap()).unwrap(), "Obsluha");
        let en = t.template_config(Regime::Traditional, &allowed()).unwrap();
        assert_eq!(en.categories.display(&"SERVICE#GENERAL".parse().unwrap()).unwrap(), "Service");
        assert_eq!(en.max_input_units, 128);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(TemplateTables::from_toml_str("[verbalizer]\npositive = \"a\"\nneutral = \"a\"\nnegative = \"b\"\n").is_err());
        assert!(TemplateTables::from_toml_str("[categories]\nallowed = [\"FOOD\"]\n").is_err());
    }
}
