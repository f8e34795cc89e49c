#![allow(dead_code)]

use std::path::PathBuf;

use absa_promptkit::corpus::{load_absa_corpus, load_polarity_corpus};
use absa_promptkit::prompting::TemplateTables;
use absa_promptkit::{AbsaSentence, AspectCategory, CategorySet, OpinionTriplet, Polarity, PolarityDocument};
use absa_promptkit::{Regime, TemplateConfig, Verbalizer};
use proptest::prelude::*;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn tables() -> TemplateTables {
    TemplateTables::load(data_path("tables.toml")).unwrap()
}

pub fn allowed() -> CategorySet {
    tables().allowed().unwrap()
}

pub fn fixture_sentences() -> Vec<AbsaSentence> {
    load_absa_corpus(data_path("absa_fixture.xml"), Some(&allowed())).unwrap()
}

pub fn fixture_documents() -> Vec<PolarityDocument> {
    load_polarity_corpus(data_path("polarity_fixture.tsv")).unwrap()
}

pub fn config(regime: Regime) -> (TemplateConfig, Verbalizer) {
    let t = tables();
    (t.template_config(regime, &allowed()).unwrap(), t.verbalizer_for(regime))
}

pub fn sorted(mut v: Vec<OpinionTriplet>) -> Vec<OpinionTriplet> {
    v.sort();
    v
}

pub fn polarity() -> impl Strategy<Value = Polarity> {
    prop_oneof![Just(Polarity::Positive), Just(Polarity::Negative), Just(Polarity::Neutral)]
}

pub fn category() -> impl Strategy<Value = AspectCategory> {
    let cats: Vec<AspectCategory> = allowed().iter().cloned().collect();
    proptest::sample::select(cats)
}

/// Terms free of the label grammar's delimiters, never the NULL marker.
pub fn term() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        1 => Just(None),
        4 => "[a-zA-Záčďéěíňóřšťúůýž0-9][a-zA-Záčďéěíňóřšťúůýž0-9 '-]{0,18}[a-zA-Záčďéěíňóřšťúůýž0-9]?"
            .prop_filter("not the NULL marker", |t| t.trim() != "NULL")
            .prop_map(|t| Some(t.trim().to_string())),
    ]
}

pub fn triplet() -> impl Strategy<Value = OpinionTriplet> {
    (category(), term(), polarity()).prop_map(|(c, t, p)| OpinionTriplet::new(c, t, p).unwrap())
}

pub fn sentence() -> impl Strategy<Value = AbsaSentence> {
    ("[0-9]{1,6}", "\\PC{0,80}", proptest::collection::vec(triplet(), 0..5)).prop_map(|(id, text, triplets)| {
        AbsaSentence {
            review_id: "r".into(),
            sentence_id: format!("s{id}"),
            text,
            triplets,
        }
    })
}
