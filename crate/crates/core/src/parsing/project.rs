use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Task;
use crate::corpus::{AspectCategory, OpinionTriplet, Polarity};
use crate::error::{Error, Result};

/// One scored unit. Terms are stored lower-cased and trimmed so equality is
/// exact match on normalized forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    Category(AspectCategory),
    Term(String),
    Pair(AspectCategory, Option<String>),
    Triplet(AspectCategory, Option<String>, Polarity),
    Polarity(Polarity),
}

fn normalize_term(term: Option<&str>) -> Option<String> {
    term.map(|t| t.trim().to_lowercase())
}

impl Item {
    pub fn to_json(&self) -> Value {
        match self {
            Item::Category(c) => json!(c.canonical()),
            Item::Term(t) => json!(t),
            Item::Pair(c, t) => json!([c.canonical(), t]),
            Item::Triplet(c, t, p) => json!([c.canonical(), t, p.as_str()]),
            Item::Polarity(p) => json!(p.as_str()),
        }
    }

    pub fn from_json(task: Task, value: &Value) -> Result<Self> {
        let bad = || Error::Validation(format!("item {value} does not fit task {task}"));
        let category = |v: &Value| -> Result<AspectCategory> { v.as_str().ok_or_else(bad)?.parse() };
        let term = |v: &Value| -> Result<Option<String>> {
            match v {
                Value::Null => Ok(None),
                Value::String(s) => Ok(normalize_term(Some(s))),
                _ => Err(bad()),
            }
        };
        match task {
            Task::Acd => Ok(Item::Category(category(value)?)),
            Task::Ate => term(value)?.map(Item::Term).ok_or_else(bad),
            Task::Acte => match value.as_array().map(Vec::as_slice) {
                Some([c, t]) => Ok(Item::Pair(category(c)?, term(t)?)),
                _ => Err(bad()),
            },
            Task::Tasd => match value.as_array().map(Vec::as_slice) {
                Some([c, t, p]) => Ok(Item::Triplet(category(c)?, term(t)?, p.as_str().ok_or_else(bad)?.parse()?)),
                _ => Err(bad()),
            },
            Task::Apd | Task::Sc => Ok(Item::Polarity(value.as_str().ok_or_else(bad)?.parse()?)),
        }
    }
}

/// Predicted or gold items of one example for one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskPrediction {
    pub id: String,
    pub task: Task,
    pub items: BTreeSet<Item>,
}

/// Projects triplets onto a tuple task. Duplicates collapse; ATE drops NULL
/// terms.
pub fn project_task(id: &str, triplets: &[OpinionTriplet], task: Task) -> Result<TaskPrediction> {
    let items = match task {
        Task::Acd => triplets.iter().map(|t| Item::Category(t.category.clone())).collect(),
        Task::Ate => triplets
            .iter()
            .filter_map(|t| normalize_term(t.term.as_deref()))
            .map(Item::Term)
            .collect(),
        Task::Acte => triplets
            .iter()
            .map(|t| Item::Pair(t.category.clone(), normalize_term(t.term.as_deref())))
            .collect(),
        Task::Tasd => triplets
            .iter()
            .map(|t| Item::Triplet(t.category.clone(), normalize_term(t.term.as_deref()), t.polarity))
            .collect(),
        Task::Apd | Task::Sc => {
            return Err(Error::Validation(format!(
                "{task} is a classification task; use polarity_prediction"
            )))
        }
    };
    Ok(TaskPrediction {
        id: id.to_string(),
        task,
        items,
    })
}

/// Single-label prediction for APD or SC.
pub fn polarity_prediction(id: &str, task: Task, polarity: Polarity) -> TaskPrediction {
    TaskPrediction {
        id: id.to_string(),
        task,
        items: BTreeSet::from([Item::Polarity(polarity)]),
    }
}

/// JSONL line of parsed predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub task: Task,
    pub items: Vec<Value>,
    pub dropped: usize,
}

impl PredictionRecord {
    pub fn new(prediction: &TaskPrediction, dropped: usize) -> Self {
        Self {
            id: prediction.id.clone(),
            task: prediction.task,
            items: prediction.items.iter().map(Item::to_json).collect(),
            dropped,
        }
    }

    pub fn to_prediction(&self) -> Result<TaskPrediction> {
        Ok(TaskPrediction {
            id: self.id.clone(),
            task: self.task,
            items: self
                .items
                .iter()
                .map(|v| Item::from_json(self.task, v))
                .collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triplets() -> Vec<OpinionTriplet> {
        let fq: AspectCategory = "FOOD#QUALITY".parse().unwrap();
        vec![
            OpinionTriplet::new(fq.clone(), Some("steak".into()), Polarity::Positive).unwrap(),
            OpinionTriplet::new(fq, None, Polarity::Negative).unwrap(),
        ]
    }

    #[test]
    fn ate_discards_null() {
        let p = project_task("x", &triplets(), Task::Ate).unwrap();
        assert_eq!(p.items, BTreeSet::from([Item::Term("steak".into())]));
    }

    #[test]
    fn acd_collapses_duplicates() {
        let p = project_task("x", &triplets(), Task::Acd).unwrap();
        assert_eq!(p.items, BTreeSet::from([Item::Category("FOOD#QUALITY".parse().unwrap())]));
    }

    #[test]
    fn tasd_keeps_distinct_triplets() {
        assert_eq!(project_task("x", &triplets(), Task::Tasd).unwrap().items.len(), 2);
        assert_eq!(project_task("x", &triplets(), Task::Acte).unwrap().items.len(), 2);
    }

    #[test]
    fn repeated_generation_collapses() {
        let mut t = triplets();
        t.push(t[0].clone());
        let mut shouty = t[0].clone();
        shouty.term = Some(" STEAK ".into());
        t.push(shouty);
        assert_eq!(project_task("x", &t, Task::Tasd).unwrap().items.len(), 2);
        assert_eq!(project_task("x", &t, Task::Ate).unwrap().items.len(), 1);
    }

    #[test]
    fn classification_tasks_not_projected() {
        assert!(project_task("x", &triplets(), Task::Apd).is_err());
    }

    #[test]
    fn record_round_trip() {
        for task in Task::TUPLE_TASKS {
            let p = project_task("s1", &triplets(), task).unwrap();
            let rec = PredictionRecord::new(&p, 3);
            let line = serde_json::to_string(&rec).unwrap();
            let back: PredictionRecord = serde_json::from_str(&line).unwrap();
            assert_eq!(back.to_prediction().unwrap(), p);
        }
        let line = serde_json::to_string(&PredictionRecord::new(
            &polarity_prediction("d", Task::Sc, Polarity::Neutral),
            0,
        ))
        .unwrap();
        assert_eq!(line, r#"{"id":"d","task":"sc","items":["neutral"],"dropped":0}"#);
    }
}
