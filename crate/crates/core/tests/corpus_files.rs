mod common;

use std::io::Write;

use absa_promptkit::corpus::{
    load_absa_corpus, load_polarity_corpus, parse_absa_xml, write_absa_xml, write_jsonl, LabelCounts,
};
use absa_promptkit::{CategorySet, Error, Polarity};
use common::*;

#[test]
fn fixture_shape() {
    let s = fixture_sentences();
    assert_eq!(s.len(), 60);
    assert!(s.iter().any(|x| x.triplets.is_empty()));
    assert!(s.iter().flat_map(|x| &x.triplets).any(|t| t.term.is_none()));
    assert_eq!(s[0].review_id, "rev000");
    assert!(s[0].text.contains('&'));
    let counts = LabelCounts::of_opinions(&s);
    assert_eq!(counts.total(), s.iter().map(|x| x.triplets.len()).sum::<usize>());
}

#[test]
fn serialize_then_load_is_semantically_identical() {
    let s = fixture_sentences();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("again.xml");
    std::fs::write(&path, write_absa_xml(&s)).unwrap();
    let again = load_absa_corpus(&path, Some(&allowed())).unwrap();
    assert_eq!(s.len(), again.len());
    for (a, b) in s.iter().zip(&again) {
        assert_eq!((&a.sentence_id, &a.text), (&b.sentence_id, &b.text));
        assert_eq!(sorted(a.triplets.clone()), sorted(b.triplets.clone()));
    }
}

#[test]
fn observed_categories_default() {
    let s = load_absa_corpus(data_path("absa_fixture.xml"), None).unwrap();
    let observed = CategorySet::observed(&s);
    assert!(observed.len() <= allowed().len());
    assert!(observed.iter().all(|c| allowed().contains(c)));
    let xml = write_absa_xml(&s);
    parse_absa_xml(&xml, Some(&observed)).unwrap();
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_absa_corpus("/nonexistent/x.xml", None), Err(Error::Io { .. })));
    assert!(matches!(load_polarity_corpus("/nonexistent/x.tsv"), Err(Error::Io { .. })));
}

#[test]
fn polarity_fixture() {
    let docs = fixture_documents();
    assert_eq!(docs.len(), 30);
    let c = LabelCounts::of_documents(&docs);
    assert_eq!((c.positive, c.negative, c.neutral), (10, 10, 10));
    assert!(docs.iter().all(|d| d.stars.is_some()));
    assert_eq!(docs[0].label, Polarity::Positive);
}

#[test]
fn split_jsonl_preserves_order() {
    let s = fixture_sentences();
    let mut buf = Vec::new();
    write_jsonl(&s[..5], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let ids: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["sentence_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, s[..5].iter().map(|x| x.sentence_id.clone()).collect::<Vec<_>>());
}

#[test]
fn tsv_with_crlf_and_bom() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.tsv");
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all("\u{feff}label\ttext\r\nneutral\tUjde\r\n".as_bytes()).unwrap();
    let docs = load_polarity_corpus(&path).unwrap();
    assert_eq!(docs.len(), 1);
    assert_eq!(docs[0].text, "Ujde");
}
