use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{lit, MetricReport, Score};
use crate::parsing::Task;

/// `mean±halfwidth` in percent with one decimal, e.g. `84.0±3.9`.
pub fn format_cell<F: Score>(report: &MetricReport<F>) -> String {
    let pct = lit::<F>(100.0);
    format!("{:.1}±{:.1}", report.mean * pct, report.ci95_halfwidth * pct)
}

/// One setting (e.g. "Fine-tuning (few-shot 10)") with a cell per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow<F> {
    pub setting: String,
    pub cells: BTreeMap<Task, MetricReport<F>>,
}

/// Rows are settings, columns are tasks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportTable<F> {
    pub rows: Vec<ReportRow<F>>,
}

impl<F: Score> ReportTable<F> {
    pub fn push(&mut self, row: ReportRow<F>) {
        self.rows.push(row);
    }

    /// Tasks present in any row, in canonical order.
    pub fn tasks(&self) -> Vec<Task> {
        let mut tasks: Vec<Task> = self.rows.iter().flat_map(|r| r.cells.keys().copied()).collect();
        tasks.sort_unstable();
        tasks.dedup();
        tasks
    }

    pub fn to_tsv(&self) -> String {
        let tasks = self.tasks();
        let mut out = String::from("setting");
        for t in &tasks {
            let _ = write!(out, "\t{}", t.as_str().to_uppercase());
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.setting);
            for t in &tasks {
                out.push('\t');
                if let Some(cell) = row.cells.get(t) {
                    out.push_str(&format_cell(cell));
                } else {
                    out.push('-');
                }
            }
            out.push('\n');
        }
        out
    }
}
