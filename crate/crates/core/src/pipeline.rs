//! Render → query → parse → project → score, shared by the CLI and tests.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, BackendRequest, BackendResponse, GoldStore, RequestKind};
use crate::corpus::{AbsaSentence, AspectCategory, OpinionTriplet, Polarity, PolarityDocument};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, micro_f1, MicroCounts, Prf};
use crate::parsing::{
    parse_mlm_output, parse_output, polarity_prediction, project_task, PredictionRecord, Task, TaskPrediction,
};
use crate::prompting::{
    render, render_apd_traditional_input, render_mlm_prompt, MlmExample, MlmTask, PromptRendering, Regime,
    TemplateConfig, Verbalizer,
};

/// Default generation budget for seq2seq requests.
pub const DEFAULT_MAX_OUTPUT_UNITS: u32 = 256;

/// Which backend answers the requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendSpec {
    Gold,
    Corrupt(f64),
    Http(String),
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "gold" {
            return Ok(BackendSpec::Gold);
        }
        if let Some(rate) = s.strip_prefix("corrupt:") {
            let d: f64 = rate
                .parse()
                .map_err(|_| Error::Config(format!("corruption rate {rate:?} is not a number")))?;
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::Config(format!("corruption rate {d} is outside [0, 1]")));
            }
            return Ok(BackendSpec::Corrupt(d));
        }
        if let Some(url) = s.strip_prefix("http:") {
            let url = if url.starts_with("//") { format!("http:{url}") } else { url.to_string() };
            return Ok(BackendSpec::Http(url));
        }
        Err(Error::Config(format!(
            "unknown backend {s:?} (expected gold, corrupt:<d> or http:<url>)"
        )))
    }
}

impl TryFrom<String> for BackendSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BackendSpec> for String {
    fn from(b: BackendSpec) -> String {
        b.to_string()
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Gold => f.write_str("gold"),
            BackendSpec::Corrupt(d) => write!(f, "corrupt:{d}"),
            BackendSpec::Http(url) => write!(f, "http:{url}"),
        }
    }
}

/// Gold answer of a prepared example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldLabel {
    Triplets(Vec<OpinionTriplet>),
    Polarity(Polarity),
}

/// A rendered example together with the request that evaluates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedExample {
    pub rendering: PromptRendering,
    pub request: BackendRequest,
    pub gold: GoldLabel,
    /// Source sentence of seq2seq examples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<AbsaSentence>,
}

/// One aspect of an annotated sentence, the unit of APD.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectExample<'a> {
    pub id: String,
    pub text: &'a str,
    pub category: &'a AspectCategory,
    pub term: Option<&'a str>,
    pub polarity: Polarity,
}

/// One example per gold triplet, id `<sentence id>#<k>`. Sentences without
/// opinions contribute nothing.
pub fn apd_examples(sentences: &[AbsaSentence]) -> Vec<AspectExample<'_>> {
    sentences
        .iter()
        .flat_map(|s| {
            s.triplets.iter().enumerate().map(move |(k, t)| AspectExample {
                id: format!("{}#{k}", s.sentence_id),
                text: &s.text,
                category: &t.category,
                term: t.term.as_deref(),
                polarity: t.polarity,
            })
        })
        .collect()
}

fn into_core(e: BackendError) -> Error {
    Error::Backend(e)
}

/// Seq2seq examples for the tuple tasks under `cfg.regime`.
pub fn prepare_absa(
    sentences: &[AbsaSentence],
    cfg: &TemplateConfig,
    v: &Verbalizer,
    max_output_units: u32,
) -> Result<Vec<PreparedExample>> {
    sentences
        .iter()
        .map(|s| {
            let rendering = render(s, cfg, v)?;
            let request = BackendRequest::generate(&rendering.example_id, &rendering.model_input, max_output_units)
                .map_err(into_core)?;
            Ok(PreparedExample {
                rendering,
                request,
                gold: GoldLabel::Triplets(s.triplets.clone()),
                sentence: Some(s.clone()),
            })
        })
        .collect()
}

fn classification_example(
    id: &str,
    mlm: MlmExample<'_>,
    traditional_input: impl FnOnce() -> Result<String>,
    cfg: &TemplateConfig,
    v: &Verbalizer,
) -> Result<PreparedExample> {
    let (rendering, request) = match cfg.regime {
        Regime::Mlm => {
            let rendering = render_mlm_prompt(&mlm, cfg, v)?;
            let request = BackendRequest::fill_mask(id, &rendering.model_input, v.candidates()).map_err(into_core)?;
            (rendering, request)
        }
        Regime::Traditional => {
            let input = traditional_input()?;
            let rendering = PromptRendering {
                example_id: id.to_string(),
                model_input: input,
                expected_target: v.word(mlm.polarity).to_string(),
                regime: Regime::Traditional,
                triplet_count: usize::from(mlm.task == MlmTask::AbsaApd),
            };
            let request = BackendRequest::generate(id, &rendering.model_input, 1).map_err(into_core)?;
            (rendering, request)
        }
        other => {
            return Err(Error::Config(format!(
                "classification tasks use the mlm or traditional regime, not {other}"
            )))
        }
    };
    Ok(PreparedExample {
        rendering,
        request,
        gold: GoldLabel::Polarity(mlm.polarity),
        sentence: None,
    })
}

/// APD examples: an MLM prompt per aspect, or the `category | term | text`
/// input for a classification backend under the traditional regime.
pub fn prepare_apd(sentences: &[AbsaSentence], cfg: &TemplateConfig, v: &Verbalizer) -> Result<Vec<PreparedExample>> {
    apd_examples(sentences)
        .iter()
        .map(|a| {
            let mlm = MlmExample {
                id: &a.id,
                text: a.text,
                task: MlmTask::AbsaApd,
                aspect: Some((a.category, a.term)),
                polarity: a.polarity,
            };
            classification_example(
                &a.id,
                mlm,
                || render_apd_traditional_input(a.text, a.category, a.term, cfg),
                cfg,
                v,
            )
        })
        .collect()
}

/// Document-level sentiment classification examples.
pub fn prepare_sc(docs: &[PolarityDocument], cfg: &TemplateConfig, v: &Verbalizer) -> Result<Vec<PreparedExample>> {
    docs.iter()
        .map(|d| {
            let mlm = MlmExample {
                id: &d.doc_id,
                text: &d.text,
                task: MlmTask::ScCsfd,
                aspect: None,
                polarity: d.label,
            };
            classification_example(&d.doc_id, mlm, || Ok(d.text.clone()), cfg, v)
        })
        .collect()
}

pub fn gold_store(examples: &[PreparedExample]) -> GoldStore {
    let mut store = GoldStore::new();
    for e in examples {
        store.insert(&e.rendering, e.sentence.clone());
    }
    store
}

/// Raw backend output for one example, as stored between `predict` and
/// `score`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawOutput {
    pub id: String,
    pub output: String,
}

impl RawOutput {
    pub fn from_response(id: &str, response: &BackendResponse) -> Self {
        Self {
            id: id.to_string(),
            output: response.text().to_string(),
        }
    }
}

/// Score of one task on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: Task,
    /// Micro F1 for tuple tasks, accuracy otherwise.
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prf: Option<Prf<f64>>,
    pub n_examples: usize,
    /// Clauses or answers the parser could not use.
    pub dropped: usize,
}

impl TaskScore {
    pub fn counts(&self) -> Option<MicroCounts> {
        self.prf.map(|p| p.counts)
    }
}

/// Scores and parsed predictions of one seed.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub scores: Vec<TaskScore>,
    pub predictions: BTreeMap<Task, Vec<PredictionRecord>>,
}

fn outputs_by_id<'a>(examples: &[PreparedExample], outputs: &'a [RawOutput]) -> Result<Vec<&'a str>> {
    let map: std::collections::HashMap<&str, &str> =
        outputs.iter().map(|o| (o.id.as_str(), o.output.as_str())).collect();
    examples
        .iter()
        .map(|e| {
            map.get(e.rendering.example_id.as_str())
                .copied()
                .ok_or_else(|| Error::IdMismatch(format!("no output for example {}", e.rendering.example_id)))
        })
        .collect()
}

/// Parses `outputs` and scores every task in `tasks`.
///
/// Tuple tasks need seq2seq examples (one generation serves all four);
/// APD and SC need classification examples.
pub fn evaluate(
    examples: &[PreparedExample],
    outputs: &[RawOutput],
    tasks: &[Task],
    cfg: &TemplateConfig,
    v: &Verbalizer,
) -> Result<Evaluation> {
    let raw = outputs_by_id(examples, outputs)?;
    let mut eval = Evaluation::default();
    for &task in tasks {
        if task.is_tuple_task() {
            let mut gold = Vec::with_capacity(examples.len());
            let mut pred = Vec::with_capacity(examples.len());
            let mut records = Vec::with_capacity(examples.len());
            let mut dropped = 0;
            for (e, out) in examples.iter().zip(&raw) {
                let GoldLabel::Triplets(gold_triplets) = &e.gold else {
                    return Err(Error::Config(format!("task {task} needs seq2seq examples")));
                };
                let id = &e.rendering.example_id;
                let parsed = parse_output(out, cfg, v);
                dropped += parsed.dropped_clauses;
                let p = project_task(id, &parsed.triplets, task)?;
                records.push(PredictionRecord::new(&p, parsed.dropped_clauses));
                pred.push(p);
                gold.push(project_task(id, gold_triplets, task)?);
            }
            let prf: Prf<f64> = micro_f1(&gold, &pred)?;
            eval.scores.push(TaskScore {
                task,
                score: prf.f1,
                prf: Some(prf),
                n_examples: examples.len(),
                dropped,
            });
            eval.predictions.insert(task, records);
        } else {
            let mut gold = Vec::with_capacity(examples.len());
            let mut pred = Vec::with_capacity(examples.len());
            let mut records = Vec::with_capacity(examples.len());
            let mut dropped = 0;
            for (e, out) in examples.iter().zip(&raw) {
                let GoldLabel::Polarity(g) = e.gold else {
                    return Err(Error::Config(format!("task {task} needs classification examples")));
                };
                let id = &e.rendering.example_id;
                let p = match (&e.request.kind, parse_mlm_output(out, v)) {
                    (_, Ok(p)) => Some(p),
                    // a fill-mask backend must stay inside the candidate set
                    (RequestKind::FillMask { .. }, Err(err)) => return Err(err),
                    (RequestKind::Generate { .. }, Err(_)) => None,
                };
                let record = match p {
                    Some(p) => PredictionRecord::new(&polarity_prediction(id, task, p), 0),
                    None => {
                        dropped += 1;
                        PredictionRecord {
                            id: id.clone(),
                            task,
                            items: Vec::new(),
                            dropped: 1,
                        }
                    }
                };
                records.push(record);
                gold.push(Some(g));
                pred.push(p);
            }
            let acc: f64 = accuracy(&gold, &pred)?;
            eval.scores.push(TaskScore {
                task,
                score: acc,
                prf: None,
                n_examples: examples.len(),
                dropped,
            });
            eval.predictions.insert(task, records);
        }
    }
    Ok(eval)
}

/// Gold predictions of one task, for scoring stored prediction files.
pub fn gold_predictions(examples: &[PreparedExample], task: Task) -> Result<Vec<TaskPrediction>> {
    examples
        .iter()
        .map(|e| match &e.gold {
            GoldLabel::Triplets(t) => project_task(&e.rendering.example_id, t, task),
            GoldLabel::Polarity(p) => Ok(polarity_prediction(&e.rendering.example_id, task, *p)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_spec_parsing() {
        assert_eq!("gold".parse::<BackendSpec>().unwrap(), BackendSpec::Gold);
        assert_eq!("corrupt:0.3".parse::<BackendSpec>().unwrap(), BackendSpec::Corrupt(0.3));
        assert_eq!(
            "http://localhost:8080".parse::<BackendSpec>().unwrap(),
            BackendSpec::Http("http://localhost:8080".into())
        );
        assert_eq!(
            "http:https://model.example".parse::<BackendSpec>().unwrap(),
            BackendSpec::Http("https://model.example".into())
        );
        assert!("corrupt:1.2".parse::<BackendSpec>().is_err());
        assert!("corrupt:x".parse::<BackendSpec>().is_err());
        assert!("gpu".parse::<BackendSpec>().is_err());
        let s: String = BackendSpec::Corrupt(0.5).into();
        assert_eq!(s.parse::<BackendSpec>().unwrap(), BackendSpec::Corrupt(0.5));
    }
}
