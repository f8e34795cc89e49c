use std::collections::HashSet;

use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

/// NFC, whitespace runs collapsed to one space, trimmed.
pub fn normalize_review(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn digest(normalized: &str) -> [u8; 16] {
    let full = Sha256::digest(normalized.as_bytes());
    let mut out = [0u8; 16];
    out.copy_from_slice(&full[..16]);
    out
}

/// Hashes of the normalized annotated reviews. Read-only once built, so one
/// set can back several concurrent dedup streams.
#[derive(Debug, Clone, Default)]
pub struct AnnotatedSet {
    hashes: HashSet<[u8; 16]>,
}

impl AnnotatedSet {
    pub fn new<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            hashes: texts.into_iter().map(|t| digest(&normalize_review(t.as_ref()))).collect(),
        }
    }

    pub fn contains(&self, text: &str) -> bool {
        self.hashes.contains(&digest(&normalize_review(text)))
    }

    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DedupStats {
    pub kept: usize,
    pub removed: usize,
}

/// Streaming filter returned by [`dedup_pretrain_corpus`]. Counts are
/// available through [`Dedup::stats`] at any point of the iteration.
pub struct Dedup<'a, I> {
    raw: I,
    annotated: &'a AnnotatedSet,
    stats: DedupStats,
}

impl<I> Dedup<'_, I> {
    pub fn stats(&self) -> DedupStats {
        self.stats
    }
}

impl<I, S> Iterator for Dedup<'_, I>
where
    I: Iterator<Item = S>,
    S: AsRef<str>,
{
    type Item = S;

    fn next(&mut self) -> Option<S> {
        for review in self.raw.by_ref() {
            if self.annotated.contains(review.as_ref()) {
                self.stats.removed += 1;
            } else {
                self.stats.kept += 1;
                return Some(review);
            }
        }
        None
    }
}

/// Drops every raw review whose normalized form matches an annotated one,
/// preserving the order of the rest.
pub fn dedup_pretrain_corpus<I, S>(raw: I, annotated: &AnnotatedSet) -> Dedup<'_, I::IntoIter>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Dedup {
        raw: raw.into_iter(),
        annotated,
        stats: DedupStats::default(),
    }
}
