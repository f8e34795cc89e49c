use std::sync::LazyLock;

use regex::Regex;

use super::{FailureReason, ParsedOutput};
use crate::corpus::{OpinionTriplet, NULL_TERM};
use crate::prompting::{Language, Regime, TemplateConfig, Verbalizer};

static CLAUSE_EN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?is)^(?P<cat>.+?)\s+is\s+(?P<pol>\S+?)\s*,\s*given\s+the\s+expression\s*:(?P<term>.*)$")
        .expect("valid regex")
});
static CLAUSE_CS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?is)^(?P<cat>.+?)\s+je\s+(?P<pol>\S+?)\s*,\s*dáno\s+výrazem\s*:(?P<term>.*)$")
        .expect("valid regex")
});
static SENTINEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<extra_id_\d+>").expect("valid regex"));

fn build_triplet(
    category: &str,
    word: &str,
    term: &str,
    cfg: &TemplateConfig,
    v: &Verbalizer,
) -> Result<OpinionTriplet, FailureReason> {
    let category = cfg
        .categories
        .lookup(category)
        .ok_or(FailureReason::UnknownCategory)?;
    let polarity = v.inverse(word).ok_or(FailureReason::UnknownPolarityWord)?;
    let term = match term.trim() {
        "" => return Err(FailureReason::EmptyTerm),
        NULL_TERM => None,
        t => Some(t.to_string()),
    };
    OpinionTriplet::new(category.clone(), term, polarity).map_err(|_| FailureReason::EmptyTerm)
}

fn parse_clause(clause: &str, cfg: &TemplateConfig, v: &Verbalizer) -> Result<OpinionTriplet, FailureReason> {
    let grammar = match cfg.language {
        Language::En => &*CLAUSE_EN,
        Language::Cs => &*CLAUSE_CS,
    };
    let caps = grammar.captures(clause).ok_or(FailureReason::MalformedClause)?;
    build_triplet(&caps["cat"], &caps["pol"], &caps["term"], cfg, v)
}

/// Parses `label; label; ...` output of the traditional regime.
pub fn parse_traditional_output(raw: &str, cfg: &TemplateConfig, v: &Verbalizer) -> ParsedOutput {
    let mut out = ParsedOutput::default();
    let joiner = match cfg.triplet_joiner.trim() {
        "" => cfg.triplet_joiner.as_str(),
        trimmed => trimmed,
    };
    for clause in raw.split(joiner).map(str::trim).filter(|c| !c.is_empty()) {
        match parse_clause(clause, cfg, v) {
            Ok(t) => out.triplets.push(t),
            Err(reason) => out.drop_clause(clause, reason),
        }
    }
    out
}

/// Parses `<extra_id_0> category <extra_id_1> word <extra_id_2> term ...`.
///
/// Field values are grouped positionally in threes; a trailing group with
/// one or two fields is dropped.
pub fn parse_sentinel_output(raw: &str, v: &Verbalizer, cfg: &TemplateConfig) -> ParsedOutput {
    let cleaned = raw.replace("<pad>", " ").replace("</s>", " ");
    let mut fields: Vec<&str> = SENTINEL.split(&cleaned).skip(1).map(str::trim).collect();
    // the terminating sentinel leaves an empty trailing field
    if fields.last().is_some_and(|f| f.is_empty()) {
        fields.pop();
    }

    let mut out = ParsedOutput::default();
    for group in fields.chunks(3) {
        match group {
            [category, word, term] => match build_triplet(category, word, term, cfg, v) {
                Ok(t) => out.triplets.push(t),
                Err(reason) => out.drop_clause(&group.join(" | "), reason),
            },
            partial => out.drop_clause(&partial.join(" | "), FailureReason::IncompleteGroup),
        }
    }
    out
}

/// Parses a full-input reconstruction: the text after the last separator is
/// the filled template. Without a separator the whole string is treated as
/// the template.
pub fn parse_mask_output(raw: &str, v: &Verbalizer, cfg: &TemplateConfig) -> ParsedOutput {
    let sep = cfg.separator.as_str();
    let split = raw
        .rfind(sep)
        .map(|i| &raw[i + sep.len()..])
        .or_else(|| {
            let bare = sep.trim();
            (!bare.is_empty())
                .then(|| raw.rfind(bare).map(|i| &raw[i + bare.len()..]))
                .flatten()
        });
    match split {
        Some(template) => parse_traditional_output(template, cfg, v),
        None => {
            let mut out = parse_traditional_output(raw, cfg, v);
            out.diagnostics.insert(
                0,
                super::Diagnostic {
                    clause: raw.to_string(),
                    reason: FailureReason::SeparatorMissing,
                },
            );
            out
        }
    }
}

/// Dispatches on `cfg.regime`. MLM output is a single word, not a parse
/// target; it yields an empty result here.
pub fn parse_output(raw: &str, cfg: &TemplateConfig, v: &Verbalizer) -> ParsedOutput {
    match cfg.regime {
        Regime::Traditional => parse_traditional_output(raw, cfg, v),
        Regime::Sentinel => parse_sentinel_output(raw, v, cfg),
        Regime::Mask => parse_mask_output(raw, v, cfg),
        Regime::Mlm => ParsedOutput::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AspectCategory, CategorySet, Polarity};
    use crate::prompting::CategoryTable;

    fn cat(s: &str) -> AspectCategory {
        s.parse().unwrap()
    }

    fn cfg(regime: Regime) -> TemplateConfig {
        let set = CategorySet::new([cat("FOOD#QUALITY"), cat("FOOD#PRICES"), cat("SERVICE#GENERAL")]);
        TemplateConfig::new(regime, Language::En, CategoryTable::english(&set).unwrap())
    }

    #[test]
    fn traditional_worked_example() {
        let p = parse_traditional_output(
            "Food quality is great, given the expression: steak",
            &cfg(Regime::Traditional),
            &Verbalizer::english(),
        );
        assert_eq!(p.dropped_clauses, 0);
        assert_eq!(
            p.triplets,
            vec![OpinionTriplet::new(cat("FOOD#QUALITY"), Some("steak".into()), Polarity::Positive).unwrap()]
        );
    }

    #[test]
    fn traditional_empty_and_rejections() {
        let c = cfg(Regime::Traditional);
        let v = Verbalizer::english();
        let p = parse_traditional_output("", &c, &v);
        assert_eq!((p.triplets.len(), p.dropped_clauses), (0, 0));

        let p = parse_traditional_output("Food quality is amazing, given the expression: steak", &c, &v);
        assert_eq!((p.triplets.len(), p.dropped_clauses), (0, 1));
        assert_eq!(p.diagnostics[0].reason.to_string(), "unknown polarity word");

        let p = parse_traditional_output(
            "Drinks quality is great, given the expression: beer; nonsense; food QUALITY is BAD , given the expression:  NULL ",
            &c,
            &v,
        );
        assert_eq!(p.triplets.len(), 1);
        assert_eq!(p.triplets[0].term, None);
        assert_eq!(p.triplets[0].polarity, Polarity::Negative);
        let reasons: Vec<_> = p.diagnostics.iter().map(|d| d.reason).collect();
        assert_eq!(reasons, [FailureReason::UnknownCategory, FailureReason::MalformedClause]);

        let p = parse_traditional_output("Food quality is great, given the expression:   ", &c, &v);
        assert_eq!(p.diagnostics[0].reason, FailureReason::EmptyTerm);
    }

    #[test]
    fn czech_grammar() {
        let mut c = cfg(Regime::Traditional);
        c.language = Language::Cs;
        let p = parse_traditional_output("Food quality je dobrý, dáno výrazem: řízek", &c, &Verbalizer::czech());
        assert_eq!(p.triplets.len(), 1);
        assert_eq!(p.triplets[0].term.as_deref(), Some("řízek"));
    }

    #[test]
    fn sentinel_outputs() {
        let c = cfg(Regime::Sentinel);
        let v = Verbalizer::english();
        let p = parse_sentinel_output("<extra_id_0> Food quality <extra_id_1> great <extra_id_2> steak <extra_id_3>", &v, &c);
        assert_eq!(p.triplets.len(), 1);
        assert_eq!(p.triplets[0].term.as_deref(), Some("steak"));

        let p = parse_sentinel_output("<extra_id_0> Food quality <extra_id_1> great", &v, &c);
        assert_eq!((p.triplets.len(), p.dropped_clauses), (0, 1));
        assert_eq!(p.diagnostics[0].reason, FailureReason::IncompleteGroup);

        let p = parse_sentinel_output("<pad><extra_id_0>Food quality<extra_id_1>great<extra_id_2>NULL</s>", &v, &c);
        assert_eq!(p.triplets.len(), 1);
        assert_eq!(p.triplets[0].term, None);

        let p = parse_sentinel_output("<extra_id_0>", &v, &c);
        assert_eq!(p, ParsedOutput::default());
        assert_eq!(parse_sentinel_output("no markers at all", &v, &c), ParsedOutput::default());
    }

    #[test]
    fn mask_outputs() {
        let c = cfg(Regime::Mask);
        let v = Verbalizer::english();
        let p = parse_mask_output(
            "The steak was very tasty | Food quality is great, given the expression: steak",
            &v,
            &c,
        );
        assert_eq!(p.triplets.len(), 1);
        assert!(p.diagnostics.is_empty());

        let p = parse_mask_output("Food quality is great, given the expression: steak", &v, &c);
        assert_eq!(p.triplets.len(), 1);
        assert_eq!(p.diagnostics[0].reason, FailureReason::SeparatorMissing);
        assert_eq!(p.dropped_clauses, 0);

        let p = parse_mask_output("text | garbage; more garbage", &v, &c);
        assert_eq!((p.triplets.len(), p.dropped_clauses), (0, 2));

        // trailing space of the separator lost by the generator
        let p = parse_mask_output("text |", &v, &c);
        assert!(p.diagnostics.is_empty() && p.triplets.is_empty());
    }
}
