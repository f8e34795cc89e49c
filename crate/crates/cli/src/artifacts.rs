//! On-disk layout of a run directory and the file helpers around it.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use absa_promptkit::corpus::write_jsonl;
use absa_promptkit::Task;
use anyhow::{Context as _, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Example families; one rendered file each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    /// Seq2seq examples shared by ACD, ATE, ACTE and TASD.
    Absa,
    Apd,
    Sc,
}

impl Kind {
    pub fn of(task: Task) -> Kind {
        match task {
            Task::Apd => Kind::Apd,
            Task::Sc => Kind::Sc,
            _ => Kind::Absa,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Absa => "absa",
            Kind::Apd => "apd",
            Kind::Sc => "sc",
        }
    }

    /// Distinct kinds needed by `tasks`, in a fixed order.
    pub fn needed(tasks: &[Task]) -> Vec<Kind> {
        let mut kinds: Vec<Kind> = tasks.iter().map(|&t| Kind::of(t)).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

/// ```text
/// corpus/{absa,csfd}_{train,test}.jsonl, categories.json, stats.json
/// split/{absa,csfd}_train.jsonl (+ _val.jsonl)
/// render/{absa,apd,sc}.jsonl
/// predict/seed-N/{absa,apd,sc}.jsonl
/// score/seed-N/scores.json, <task>.jsonl
/// scores.json, report.tsv, report.json, manifest.json
/// ```
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn corpus(&self, name: &str) -> PathBuf {
        self.root.join("corpus").join(format!("{name}.jsonl"))
    }

    pub fn categories(&self) -> PathBuf {
        self.root.join("corpus/categories.json")
    }

    pub fn stats(&self) -> PathBuf {
        self.root.join("corpus/stats.json")
    }

    pub fn split(&self, name: &str) -> PathBuf {
        self.root.join("split").join(format!("{name}.jsonl"))
    }

    pub fn rendered(&self, kind: Kind) -> PathBuf {
        self.root.join("render").join(format!("{}.jsonl", kind.name()))
    }

    pub fn outputs(&self, seed: u64, kind: Kind) -> PathBuf {
        self.root.join(format!("predict/seed-{seed}/{}.jsonl", kind.name()))
    }

    pub fn predictions(&self, seed: u64, task: Task) -> PathBuf {
        self.root.join(format!("score/seed-{seed}/{task}.jsonl"))
    }

    pub fn seed_scores(&self, seed: u64) -> PathBuf {
        self.root.join(format!("score/seed-{seed}/scores.json"))
    }

    pub fn scores(&self) -> PathBuf {
        self.root.join("scores.json")
    }

    pub fn report_tsv(&self) -> PathBuf {
        self.root.join("report.tsv")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = create(path)?;
    write_jsonl(records, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Reads a JSONL artifact; `producer` names the command that writes it.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, producer: &str) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("missing {}; run `{producer}` first", path.display()))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(l) if l.trim().is_empty()))
        .map(|(i, line)| {
            let line = line?;
            serde_json::from_str(&line).with_context(|| format!("{}:{}: bad record", path.display(), i + 1))
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, producer: &str) -> Result<T> {
    let src = fs::read_to_string(path).with_context(|| format!("missing {}; run `{producer}` first", path.display()))?;
    serde_json::from_str(&src).with_context(|| format!("{} is not valid", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}
