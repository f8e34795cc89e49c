use std::path::Path;

use super::{PolarityDocument, Polarity};
use crate::error::{Error, Result};

/// Reads a polarity TSV file (`label<TAB>text[<TAB>stars]` with a header row).
///
/// Documents are numbered by data row starting from 0; that number is the
/// document id.
pub fn load_polarity_corpus(path: impl AsRef<Path>) -> Result<Vec<PolarityDocument>> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_polarity_tsv(&src)
}

pub fn parse_polarity_tsv(src: &str) -> Result<Vec<PolarityDocument>> {
    let mut lines = src.lines().enumerate();
    let with_stars = match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, header)) => {
            let cols: Vec<&str> = header.trim_start_matches('\u{feff}').split('\t').collect();
            match cols.as_slice() {
                ["label", "text"] => false,
                ["label", "text", "stars"] => true,
                _ => {
                    return Err(Error::Tsv {
                        row: 1,
                        message: format!("expected header label<TAB>text[<TAB>stars], got {header:?}"),
                    })
                }
            }
        }
    };
    let expected_cols = if with_stars { 3 } else { 2 };

    let mut docs = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != expected_cols {
            return Err(Error::Tsv {
                row,
                message: format!("expected {expected_cols} columns, found {}", cols.len()),
            });
        }
        let label: Polarity = cols[0].parse()?;
        let stars = match cols.get(2).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => {
                let n: i64 = s.parse().map_err(|_| Error::Tsv {
                    row,
                    message: format!("stars {s:?} is not an integer"),
                })?;
                if !(0..=5).contains(&n) {
                    return Err(Error::StarsOutOfRange(n));
                }
                Some(n as u8)
            }
        };
        docs.push(PolarityDocument::new(docs.len().to_string(), cols[1].to_string(), label, stars)?);
    }
    Ok(docs)
}
