use crate::corpus::{AbsaSentence, AspectCategory, OpinionTriplet, Polarity, NULL_TERM};
use crate::error::{Error, Result};

use super::{Language, PromptRendering, Regime, TemplateConfig, Verbalizer};

/// Slot token of the BART-style reconstruction prompt.
pub const MASK_TOKEN: &str = "<mask>";
/// Answer slot of MLM classification prompts.
pub const MLM_SLOT: &str = "[MASK]";

pub fn sentinel(id: usize) -> String {
    format!("<extra_id_{id}>")
}

/// `<category> is <word>, given the expression: <term or NULL>`
pub fn render_triplet_label(t: &OpinionTriplet, cfg: &TemplateConfig, v: &Verbalizer) -> Result<String> {
    let g = cfg.language.grammar();
    Ok(format!(
        "{}{}{}{}{}",
        cfg.categories.display(&t.category)?,
        g.copula,
        v.word(t.polarity),
        g.given,
        t.term_or_null()
    ))
}

fn filled_template(example: &AbsaSentence, cfg: &TemplateConfig, v: &Verbalizer) -> Result<String> {
    let labels = example
        .triplets
        .iter()
        .map(|t| render_triplet_label(t, cfg, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(labels.join(&cfg.triplet_joiner))
}

/// Template with every slot replaced by `slot(i)`, slots numbered from zero
/// in category, polarity, term order.
fn slotted_template(n: usize, cfg: &TemplateConfig, slot: impl Fn(usize) -> String) -> String {
    let g = cfg.language.grammar();
    (0..n)
        .map(|k| format!("{}{}{}{}{}", slot(3 * k), g.copula, slot(3 * k + 1), g.given, slot(3 * k + 2)))
        .collect::<Vec<_>>()
        .join(&cfg.triplet_joiner)
}

pub fn render_traditional(example: &AbsaSentence, cfg: &TemplateConfig, v: &Verbalizer) -> Result<PromptRendering> {
    Ok(PromptRendering {
        example_id: example.sentence_id.clone(),
        model_input: example.text.clone(),
        expected_target: filled_template(example, cfg, v)?,
        regime: Regime::Traditional,
        triplet_count: example.triplets.len(),
    })
}

pub fn render_sentinel_prompt(
    example: &AbsaSentence,
    cfg: &TemplateConfig,
    v: &Verbalizer,
) -> Result<PromptRendering> {
    let n = example.triplets.len();
    let model_input = format!("{}{}{}", example.text, cfg.separator, slotted_template(n, cfg, sentinel));

    let mut parts = Vec::with_capacity(6 * n + 1);
    for (k, t) in example.triplets.iter().enumerate() {
        parts.push(sentinel(3 * k));
        parts.push(cfg.categories.display(&t.category)?.to_string());
        parts.push(sentinel(3 * k + 1));
        parts.push(v.word(t.polarity).to_string());
        parts.push(sentinel(3 * k + 2));
        parts.push(t.term_or_null().to_string());
    }
    parts.push(sentinel(3 * n));

    Ok(PromptRendering {
        example_id: example.sentence_id.clone(),
        model_input,
        expected_target: parts.join(" "),
        regime: Regime::Sentinel,
        triplet_count: n,
    })
}

pub fn render_mask_prompt(example: &AbsaSentence, cfg: &TemplateConfig, v: &Verbalizer) -> Result<PromptRendering> {
    let n = example.triplets.len();
    let prefix = format!("{}{}", example.text, cfg.separator);
    Ok(PromptRendering {
        example_id: example.sentence_id.clone(),
        model_input: format!("{prefix}{}", slotted_template(n, cfg, |_| MASK_TOKEN.to_string())),
        expected_target: format!("{prefix}{}", filled_template(example, cfg, v)?),
        regime: Regime::Mask,
        triplet_count: n,
    })
}

/// Renders a sentence under the seq2seq regime selected by `cfg.regime`.
pub fn render(example: &AbsaSentence, cfg: &TemplateConfig, v: &Verbalizer) -> Result<PromptRendering> {
    match cfg.regime {
        Regime::Traditional => render_traditional(example, cfg, v),
        Regime::Sentinel => render_sentinel_prompt(example, cfg, v),
        Regime::Mask => render_mask_prompt(example, cfg, v),
        Regime::Mlm => Err(Error::Render(
            "the mlm regime classifies one aspect at a time; use render_mlm_prompt".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlmTask {
    /// Document-level sentiment classification (movie reviews).
    ScCsfd,
    /// Polarity of one given (category, term) aspect.
    AbsaApd,
}

/// Input to [`render_mlm_prompt`].
#[derive(Debug, Clone, Copy)]
pub struct MlmExample<'a> {
    pub id: &'a str,
    pub text: &'a str,
    pub task: MlmTask,
    /// Required for [`MlmTask::AbsaApd`].
    pub aspect: Option<(&'a AspectCategory, Option<&'a str>)>,
    pub polarity: Polarity,
}

/// Keeps at most `max_units` whitespace-delimited words from the start of
/// `text`, preserving the original spacing between kept words.
pub fn trim_to_units(text: &str, max_units: usize) -> &str {
    let text = text.trim();
    if max_units == 0 {
        return "";
    }
    let mut words = 0;
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_word {
                in_word = false;
                if words == max_units {
                    return &text[..i];
                }
            }
        } else if !in_word {
            in_word = true;
            words += 1;
        }
    }
    text
}

fn mlm_suffix(ex: &MlmExample<'_>, cfg: &TemplateConfig) -> Result<String> {
    let mut prompt = match (ex.task, cfg.language) {
        (MlmTask::ScCsfd, Language::Cs) => format!("Je to {MLM_SLOT} film"),
        (MlmTask::ScCsfd, Language::En) => format!("It is a {MLM_SLOT} movie"),
        (MlmTask::AbsaApd, lang) => {
            let (category, term) = ex
                .aspect
                .ok_or_else(|| Error::Render(format!("APD example {} has no aspect tuple", ex.id)))?;
            let g = lang.grammar();
            format!(
                "{}{}{MLM_SLOT}{}{}",
                cfg.categories.display(category)?,
                g.copula,
                g.given,
                term.unwrap_or(NULL_TERM)
            )
        }
    };
    if cfg.mlm_final_period {
        prompt.push('.');
    }
    Ok(prompt)
}

/// Review text followed by a prompt with one answer slot. Long reviews are
/// cut from the end so the whole input fits `cfg.max_input_units` words.
pub fn render_mlm_prompt(ex: &MlmExample<'_>, cfg: &TemplateConfig, v: &Verbalizer) -> Result<PromptRendering> {
    let prompt = mlm_suffix(ex, cfg)?;
    let prompt_units = prompt.split_whitespace().count();
    if prompt_units > cfg.max_input_units {
        return Err(Error::Render(format!(
            "prompt for {} alone has {prompt_units} words, over the {}-word limit",
            ex.id, cfg.max_input_units
        )));
    }
    let review = trim_to_units(ex.text, cfg.max_input_units - prompt_units);
    let model_input = if review.is_empty() {
        prompt
    } else {
        format!("{review} {prompt}")
    };
    Ok(PromptRendering {
        example_id: ex.id.to_string(),
        model_input,
        expected_target: v.word(ex.polarity).to_string(),
        regime: Regime::Mlm,
        triplet_count: usize::from(ex.task == MlmTask::AbsaApd),
    })
}

/// `<category> | <term or NULL> | <review>` for classification-head APD.
pub fn render_apd_traditional_input(
    text: &str,
    category: &AspectCategory,
    term: Option<&str>,
    cfg: &TemplateConfig,
) -> Result<String> {
    Ok(format!(
        "{}{sep}{}{sep}{text}",
        cfg.categories.display(category)?,
        term.unwrap_or(NULL_TERM),
        sep = cfg.separator
    ))
}
