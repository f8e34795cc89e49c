//! Micro F1 for tuple tasks, accuracy for classification tasks, and
//! multi-seed aggregation with Student-t confidence intervals.
//!
//! Scores are generic over the float type; the crate root exposes `f64`
//! aliases.

mod report;

use std::collections::HashMap;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::parsing::{Task, TaskPrediction};

pub use report::{format_cell, ReportRow, ReportTable};

/// Floating-point type scores are computed in.
pub trait Score: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T> Score for T where T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

fn lit<F: Score>(x: f64) -> F {
    F::from_f64(x).expect("finite literal fits any float type")
}

fn ratio<F: Score>(num: usize, den: usize) -> F {
    if den == 0 {
        F::zero()
    } else {
        lit::<F>(num as f64) / lit::<F>(den as f64)
    }
}

/// Pooled true positive, false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MicroCounts {
    pub fn precision<F: Score>(&self) -> F {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall<F: Score>(&self) -> F {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1<F: Score>(&self) -> F {
        let p: F = self.precision();
        let r: F = self.recall();
        if p + r > F::zero() {
            lit::<F>(2.0) * p * r / (p + r)
        } else {
            F::zero()
        }
    }
}

impl Add for MicroCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

impl AddAssign for MicroCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for MicroCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub counts: MicroCounts,
}

impl<F: Score> From<MicroCounts> for Prf<F> {
    fn from(counts: MicroCounts) -> Self {
        Self {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
        }
    }
}

fn index_by_id<'a>(side: &str, preds: &'a [TaskPrediction]) -> Result<HashMap<&'a str, &'a TaskPrediction>> {
    let mut map = HashMap::with_capacity(preds.len());
    for p in preds {
        if map.insert(p.id.as_str(), p).is_some() {
            return Err(Error::IdMismatch(format!("duplicate {side} id {:?}", p.id)));
        }
    }
    Ok(map)
}

fn describe_ids(label: &str, mut ids: Vec<&str>) -> Option<String> {
    if ids.is_empty() {
        return None;
    }
    ids.sort_unstable();
    let shown = ids.iter().take(5).copied().collect::<Vec<_>>().join(", ");
    let more = if ids.len() > 5 { format!(" and {} more", ids.len() - 5) } else { String::new() };
    Some(format!("{label}: {shown}{more}"))
}

/// Pairs gold and predictions by example id. Both sides must cover exactly
/// the same ids.
pub fn align<'a>(
    gold: &'a [TaskPrediction],
    pred: &'a [TaskPrediction],
) -> Result<Vec<(&'a TaskPrediction, &'a TaskPrediction)>> {
    let pred_by_id = index_by_id("prediction", pred)?;
    let gold_by_id = index_by_id("gold", gold)?;
    let missing: Vec<&str> = gold
        .iter()
        .filter(|g| !pred_by_id.contains_key(g.id.as_str()))
        .map(|g| g.id.as_str())
        .collect();
    let extra: Vec<&str> = pred
        .iter()
        .filter(|p| !gold_by_id.contains_key(p.id.as_str()))
        .map(|p| p.id.as_str())
        .collect();
    let problems: Vec<String> = [
        describe_ids("missing predictions", missing),
        describe_ids("predictions without gold", extra),
    ]
    .into_iter()
    .flatten()
    .collect();
    if !problems.is_empty() {
        return Err(Error::IdMismatch(problems.join("; ")));
    }
    gold.iter()
        .map(|g| {
            let p = pred_by_id[g.id.as_str()];
            if p.task != g.task {
                return Err(Error::Metric(format!(
                    "example {}: gold task {} but predicted task {}",
                    g.id, g.task, p.task
                )));
            }
            Ok((g, p))
        })
        .collect()
}

/// Counts for one example under set semantics.
pub fn example_counts(gold: &TaskPrediction, pred: &TaskPrediction) -> MicroCounts {
    let tp = gold.items.intersection(&pred.items).count();
    MicroCounts {
        tp,
        fp: pred.items.len() - tp,
        fn_: gold.items.len() - tp,
    }
}

/// Micro-averaged precision, recall and F1 over examples aligned by id.
pub fn micro_f1<F: Score>(gold: &[TaskPrediction], pred: &[TaskPrediction]) -> Result<Prf<F>> {
    let counts: MicroCounts = align(gold, pred)?
        .into_iter()
        .map(|(g, p)| example_counts(g, p))
        .sum();
    Ok(counts.into())
}

/// Fraction of positions where `pred` equals `gold`.
pub fn accuracy<F: Score, T: PartialEq>(gold: &[T], pred: &[T]) -> Result<F> {
    if gold.len() != pred.len() {
        return Err(Error::Metric(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Metric("no examples".into()));
    }
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    Ok(ratio(correct, gold.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReportWarning {
    /// One score only; the interval is reported as zero width.
    SingleSeed,
    SeedCountMismatch { expected: usize, actual: usize },
}

/// Mean and 95% confidence half-width of one task over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<F> {
    pub task: Option<Task>,
    pub per_seed: Vec<F>,
    pub mean: F,
    pub ci95_halfwidth: F,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ReportWarning>,
}

impl<F> MetricReport<F> {
    pub fn with_task(mut self, task: Task) -> Self {
        self.task = Some(task);
        self
    }
}

/// Two-sided 97.5% quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Mean ± t(0.975, n−1) · s / √n over per-seed scores.
pub fn aggregate_seeds<F: Score>(scores: &[F], n_expected: usize) -> Result<MetricReport<F>> {
    let n = scores.len();
    if n == 0 {
        return Err(Error::Metric("no seed scores to aggregate".into()));
    }
    let mut warnings = Vec::new();
    if n != n_expected {
        warnings.push(ReportWarning::SeedCountMismatch {
            expected: n_expected,
            actual: n,
        });
    }
    let count = lit::<F>(n as f64);
    let mean = scores.iter().fold(F::zero(), |acc, &x| acc + x) / count;
    let halfwidth = if n == 1 {
        warnings.push(ReportWarning::SingleSeed);
        F::zero()
    } else {
        let ss = scores.iter().fold(F::zero(), |acc, &x| acc + (x - mean).powi(2));
        let sd = (ss / lit::<F>((n - 1) as f64)).sqrt();
        lit::<F>(t_quantile_975(n - 1)) * sd / count.sqrt()
    };
    Ok(MetricReport {
        task: None,
        per_seed: scores.to_vec(),
        mean,
        ci95_halfwidth: halfwidth,
        warnings,
    })
}
