//! Non-neural machinery for prompt-based aspect-based sentiment analysis.
//!
//! - [`corpus`]: ABSA XML and polarity TSV ingestion, first-n splits,
//!   pre-training corpus dedup
//! - [`prompting`]: label linearization and prompt construction for the
//!   traditional, sentinel, mask and MLM regimes
//! - [`parsing`]: generated text back to triplets, task projection
//! - [`metrics`]: micro F1, accuracy, multi-seed confidence intervals
//! - [`backend`]: gold and corruption oracles, HTTP model client
//! - [`pipeline`]: the above chained for one evaluation run
//!
//! Scores are generic over the float type; the aliases below fix it to
//! `f64` (or `f32` where noted).

pub mod backend;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod parsing;
pub mod pipeline;
pub mod prompting;

pub use corpus::{AbsaSentence, AspectCategory, CategorySet, OpinionTriplet, Polarity, PolarityDocument, SplitSpec};
pub use error::{Error, Result};
pub use metrics::{MicroCounts, ReportWarning};
pub use parsing::{ParsedOutput, Task, TaskPrediction};
pub use prompting::{PromptRendering, Regime, TemplateConfig, Verbalizer};

pub type MetricReport = metrics::MetricReport<f64>;
pub type MetricReportF32 = metrics::MetricReport<f32>;
pub type Prf = metrics::Prf<f64>;
pub type PrfF32 = metrics::Prf<f32>;
pub type ReportTable = metrics::ReportTable<f64>;
pub type ReportRow = metrics::ReportRow<f64>;
