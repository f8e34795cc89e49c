//! SemEval-2016 style ABSA XML.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};

use super::{AbsaSentence, AspectCategory, CategorySet, OpinionTriplet, Polarity, NULL_TERM};
use crate::error::{Error, Result};

/// Reads an ABSA XML file.
///
/// When `allowed` is `None` every well-formed `ENTITY#ATTRIBUTE` is accepted;
/// callers wanting the observed-pairs default build it with
/// [`CategorySet::observed`] from the training file.
pub fn load_absa_corpus(path: impl AsRef<Path>, allowed: Option<&CategorySet>) -> Result<Vec<AbsaSentence>> {
    let path = path.as_ref();
    let xml = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_absa_xml(&xml, allowed)
}

fn line_at(src: &str, pos: u64) -> usize {
    let end = (pos as usize).min(src.len());
    src.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

fn attr(src: &str, reader: &Reader<&[u8]>, e: &BytesStart<'_>, name: &str) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| Error::Xml {
            line: line_at(src, reader.buffer_position()),
            message: err.to_string(),
        })?;
        if a.key.as_ref() == name {
            let value = a.normalized_value(XmlVersion::Implicit1_0).map_err(|err| Error::Xml {
                line: line_at(src, reader.buffer_position()),
                message: err.to_string(),
            })?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

struct PendingSentence {
    id: String,
    text: Option<String>,
    triplets: Vec<OpinionTriplet>,
}

pub fn parse_absa_xml(src: &str, allowed: Option<&CategorySet>) -> Result<Vec<AbsaSentence>> {
    let mut reader = Reader::from_str(src);
    let mut sentences = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut review_id = String::new();
    let mut current: Option<PendingSentence> = None;
    let mut text_buf: Option<String> = None;

    let xml_err = |reader: &Reader<&[u8]>, message: String| Error::Xml {
        line: line_at(src, reader.buffer_position()),
        message,
    };

    loop {
        let event = reader.read_event().map_err(|e| Error::Xml {
            line: line_at(src, reader.error_position()),
            message: e.to_string(),
        })?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    "Review" => {
                        review_id = attr(src, &reader, e, "rid")?.unwrap_or_default();
                    }
                    "sentence" => {
                        if current.is_some() {
                            return Err(xml_err(&reader, "nested <sentence>".into()));
                        }
                        let id = attr(src, &reader, e, "id")?
                            .ok_or_else(|| xml_err(&reader, "<sentence> without id".into()))?;
                        current = Some(PendingSentence {
                            id,
                            text: if is_empty { Some(String::new()) } else { None },
                            triplets: Vec::new(),
                        });
                        if is_empty {
                            finish_sentence(&mut current, &review_id, &mut seen_ids, &mut sentences)?;
                        }
                    }
                    "text" if current.is_some() => {
                        if is_empty {
                            if let Some(s) = current.as_mut() {
                                s.text = Some(String::new());
                            }
                        } else {
                            text_buf = Some(String::new());
                        }
                    }
                    "Opinion" => {
                        let line = line_at(src, reader.buffer_position());
                        let sentence = current
                            .as_mut()
                            .ok_or_else(|| xml_err(&reader, "<Opinion> outside <sentence>".into()))?;
                        let triplet = read_opinion(src, &reader, e, allowed, line)?;
                        sentence.triplets.push(triplet);
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let Some(buf) = text_buf.as_mut() {
                    buf.push_str(&t.xml10_content());
                }
            }
            Event::CData(t) => {
                if let Some(buf) = text_buf.as_mut() {
                    buf.push_str(&t.xml10_content());
                }
            }
            Event::GeneralRef(r) => {
                if let Some(buf) = text_buf.as_mut() {
                    let resolved = match r.resolve_char_ref() {
                        Ok(Some(c)) => Some(c.to_string()),
                        Ok(None) => resolve_predefined_entity(&r.xml10_content()).map(str::to_string),
                        Err(e) => return Err(xml_err(&reader, e.to_string())),
                    };
                    match resolved {
                        Some(s) => buf.push_str(&s),
                        None => {
                            return Err(xml_err(
                                &reader,
                                format!("unknown entity &{};", r.xml10_content()),
                            ))
                        }
                    }
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                "text" => {
                    if let (Some(buf), Some(s)) = (text_buf.take(), current.as_mut()) {
                        s.text = Some(buf);
                    }
                }
                "sentence" => finish_sentence(&mut current, &review_id, &mut seen_ids, &mut sentences)?,
                "Review" => review_id.clear(),
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if current.is_some() {
        return Err(Error::Xml {
            line: line_at(src, src.len() as u64),
            message: "unterminated <sentence>".into(),
        });
    }
    Ok(sentences)
}

fn finish_sentence(
    current: &mut Option<PendingSentence>,
    review_id: &str,
    seen: &mut HashSet<String>,
    out: &mut Vec<AbsaSentence>,
) -> Result<()> {
    let Some(s) = current.take() else {
        return Ok(());
    };
    if !seen.insert(s.id.clone()) {
        return Err(Error::Validation(format!("duplicate sentence id {:?}", s.id)));
    }
    out.push(AbsaSentence {
        review_id: review_id.to_string(),
        sentence_id: s.id,
        text: s.text.unwrap_or_default(),
        triplets: s.triplets,
    });
    Ok(())
}

fn read_opinion(
    src: &str,
    reader: &Reader<&[u8]>,
    e: &BytesStart<'_>,
    allowed: Option<&CategorySet>,
    line: usize,
) -> Result<OpinionTriplet> {
    let missing = |name: &str| Error::Xml {
        line,
        message: format!("<Opinion> without {name} attribute"),
    };
    let category = attr(src, reader, e, "category")?.ok_or_else(|| missing("category"))?;
    let polarity = attr(src, reader, e, "polarity")?.ok_or_else(|| missing("polarity"))?;
    let target = attr(src, reader, e, "target")?;

    let category: AspectCategory = category.parse()?;
    if let Some(allowed) = allowed {
        allowed.check(&category)?;
    }
    let polarity: Polarity = polarity.parse()?;
    let term = match target {
        None => None,
        Some(t) if t == NULL_TERM => None,
        Some(t) => Some(t),
    };
    OpinionTriplet::new(category, term, polarity)
}

/// Serializes sentences back to ABSA XML, grouping consecutive sentences by
/// review id. Character offsets are not written.
pub fn write_absa_xml(sentences: &[AbsaSentence]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<Reviews>\n");
    let mut open_review: Option<&str> = None;
    for s in sentences {
        if open_review != Some(s.review_id.as_str()) {
            if open_review.is_some() {
                out.push_str("    </sentences>\n  </Review>\n");
            }
            let _ = writeln!(out, "  <Review rid=\"{}\">\n    <sentences>", escape(s.review_id.as_str()));
            open_review = Some(&s.review_id);
        }
        let _ = writeln!(out, "      <sentence id=\"{}\">", escape(s.sentence_id.as_str()));
        let _ = writeln!(out, "        <text>{}</text>", escape(s.text.as_str()));
        if !s.triplets.is_empty() {
            out.push_str("        <Opinions>\n");
            for t in &s.triplets {
                let _ = writeln!(
                    out,
                    "          <Opinion target=\"{}\" category=\"{}\" polarity=\"{}\"/>",
                    escape(t.term_or_null()),
                    t.category,
                    t.polarity
                );
            }
            out.push_str("        </Opinions>\n");
        }
        out.push_str("      </sentence>\n");
    }
    if open_review.is_some() {
        out.push_str("    </sentences>\n  </Review>\n");
    }
    out.push_str("</Reviews>\n");
    out
}
