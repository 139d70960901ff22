//! Report types and rendering: JSON for machines, aligned text for humans.
//! Serialized output is fully deterministic for a fixed config and seed;
//! wall-clock timing stays out of the JSON for that reason.

use serde::{Deserialize, Serialize};

use crate::data::Relation;
use crate::error::{GkrError, Result};

use super::TrainConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl EvalMetrics {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn correct(&self) -> usize {
        self.true_pos + self.true_neg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: u8,
    pub history: Vec<EpochStats>,
    pub test: EvalMetrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationAccuracy {
    pub relation: Relation,
    pub accuracy: f64,
    pub count: usize,
}

/// History plus final metrics for a single training run, or per-fold results
/// plus pooled metrics for a cross-validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub config: TrainConfig,
    /// Per-epoch running loss/accuracy of a single `train` call.
    pub history: Vec<EpochStats>,
    /// One entry per held-out fold, ascending; empty for plain training.
    pub folds: Vec<FoldReport>,
    pub final_metrics: EvalMetrics,
    /// Pooled accuracy: total correct over total evaluated, which equals the
    /// fold-size-weighted mean of fold accuracies.
    pub mean_accuracy: f64,
    /// Accuracy split by relation tag, canonical column order.
    pub per_relation: Vec<RelationAccuracy>,
    /// Measured duration; intentionally not serialized so identical runs
    /// produce identical reports.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| GkrError::Json {
            context: "serializing report".to_string(),
            source: e,
        })?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| GkrError::Json {
            context: "parsing report".to_string(),
            source: e,
        })
    }

    /// Aligned text table; relation columns appear in canonical order and
    /// only when relation tags exist, followed by the pooled mean.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model: {}\n", self.config.model.label()));
        out.push_str(&format!(
            "epochs: {}, batch_size: {}, lr: {}, seed: {}\n",
            self.config.epochs, self.config.batch_size, self.config.lr, self.config.seed
        ));
        if !self.folds.is_empty() {
            out.push('\n');
            out.push_str(&render_rows(
                &["fold", "test_pairs", "accuracy"],
                self.folds
                    .iter()
                    .map(|f| {
                        vec![
                            f.fold.to_string(),
                            f.test.total().to_string(),
                            format!("{:.4}", f.test.accuracy),
                        ]
                    })
                    .chain(std::iter::once(vec![
                        "mean".to_string(),
                        self.final_metrics.total().to_string(),
                        format!("{:.4}", self.mean_accuracy),
                    ]))
                    .collect(),
            ));
        }
        if !self.per_relation.is_empty() {
            out.push('\n');
            out.push_str(&render_relation_table(
                "accuracy",
                &self.per_relation,
                self.mean_accuracy,
            ));
        }
        out
    }
}

/// One ablation cell: the varied settings and its cross-validated accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub per_relation: Vec<RelationAccuracy>,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub schema_version: u32,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| GkrError::Json {
            context: "serializing ablation report".to_string(),
            source: e,
        })?;
        s.push('\n');
        Ok(s)
    }

    /// One row per grid cell. Relation columns are the union over rows,
    /// canonical order, then the mean.
    pub fn render_table(&self) -> String {
        let mut relations: Vec<Relation> = Vec::new();
        for r in Relation::ALL {
            if self
                .rows
                .iter()
                .any(|row| row.per_relation.iter().any(|ra| ra.relation == r))
            {
                relations.push(r);
            }
        }
        let mut header: Vec<String> = vec!["cell".to_string()];
        header.extend(relations.iter().map(|r| r.as_str().to_string()));
        header.push("Mean".to_string());
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();

        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                let mut cells = vec![row.label.clone()];
                for r in &relations {
                    let cell = row
                        .per_relation
                        .iter()
                        .find(|ra| ra.relation == *r)
                        .map(|ra| format!("{:.4}", ra.accuracy))
                        .unwrap_or_else(|| "-".to_string());
                    cells.push(cell);
                }
                cells.push(format!("{:.4}", row.mean_accuracy));
                cells
            })
            .collect();
        render_rows(&header_refs, rows)
    }
}

fn render_relation_table(
    row_label: &str,
    per_relation: &[RelationAccuracy],
    mean: f64,
) -> String {
    let mut header: Vec<String> = vec!["relation".to_string()];
    header.extend(per_relation.iter().map(|r| r.relation.as_str().to_string()));
    header.push("Mean".to_string());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut row = vec![row_label.to_string()];
    row.extend(per_relation.iter().map(|r| format!("{:.4}", r.accuracy)));
    row.push(format!("{mean:.4}"));
    render_rows(&header_refs, vec![row])
}

fn render_rows(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    emit(
        &mut out,
        &header.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
    );
    for row in rows {
        emit(&mut out, &row);
    }
    out
}
