use std::io::Write;
use std::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which part of a training file a run consumes. Splits never shuffle: the
/// file order is the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    Full,
    FewShot(NonZeroUsize),
    ZeroShot,
}

impl SplitSpec {
    pub fn few_shot(n: usize) -> Result<Self> {
        NonZeroUsize::new(n)
            .map(SplitSpec::FewShot)
            .ok_or_else(|| Error::Validation("few-shot size must be positive".into()))
    }

    /// Row label in the style of the result tables.
    pub fn setting_label(&self) -> String {
        match self {
            SplitSpec::Full => "Fine-tuning (full)".into(),
            SplitSpec::FewShot(n) => format!("Fine-tuning (few-shot {n})"),
            SplitSpec::ZeroShot => "Zero-shot".into(),
        }
    }
}

/// Selects the training examples for `spec`: the first `n` for few-shot,
/// everything for full and nothing for zero-shot.
pub fn make_split<T: Clone>(corpus: &[T], spec: SplitSpec) -> Result<Vec<T>> {
    match spec {
        SplitSpec::Full => Ok(corpus.to_vec()),
        SplitSpec::ZeroShot => Ok(Vec::new()),
        SplitSpec::FewShot(n) => {
            let n = n.get();
            if n > corpus.len() {
                return Err(Error::SplitTooLarge {
                    requested: n,
                    available: corpus.len(),
                });
            }
            Ok(corpus[..n].to_vec())
        }
    }
}

/// Splits off the last `ceil(frac * len)` examples as validation data.
pub fn hold_out_validation<T: Clone>(train: &[T], frac: f64) -> Result<(Vec<T>, Vec<T>)> {
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::Validation(format!("validation fraction {frac} not in [0, 1)")));
    }
    let n_val = (frac * train.len() as f64).ceil() as usize;
    let cut = train.len() - n_val.min(train.len());
    Ok((train[..cut].to_vec(), train[cut..].to_vec()))
}

/// Writes one JSON object per line, in slice order.
pub fn write_jsonl<T: Serialize, W: Write>(records: &[T], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}
