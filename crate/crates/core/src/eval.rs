//! Metrics and report generation.
//!
//! Confusion matrices keep separate row (actual) and column (predicted)
//! label axes because models can predict classes that never occur; accuracy
//! counts only label-matched diagonal cells. Reports serialize both as
//! canonical JSON and as human-readable text tables.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Actual-class rows vs predicted-class columns. Labels on each axis are the
/// sorted distinct values that actually occur there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub actual_labels: Vec<i32>,
    pub predicted_labels: Vec<i32>,
    /// counts[row][col]
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion_matrix(actuals: &[i32], predictions: &[i32]) -> Result<ConfusionMatrix> {
    if actuals.len() != predictions.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} actuals vs {} predictions",
            actuals.len(),
            predictions.len()
        )));
    }
    if actuals.is_empty() {
        return Err(Error::EmptyInput("no prediction pairs"));
    }
    let mut actual_labels: Vec<i32> = actuals.to_vec();
    actual_labels.sort_unstable();
    actual_labels.dedup();
    let mut predicted_labels: Vec<i32> = predictions.to_vec();
    predicted_labels.sort_unstable();
    predicted_labels.dedup();

    let mut counts = vec![vec![0u64; predicted_labels.len()]; actual_labels.len()];
    for (a, p) in actuals.iter().zip(predictions) {
        let row = actual_labels.binary_search(a).expect("label present");
        let col = predicted_labels.binary_search(p).expect("label present");
        counts[row][col] += 1;
    }
    Ok(ConfusionMatrix {
        actual_labels,
        predicted_labels,
        counts,
    })
}

impl ConfusionMatrix {
    /// Build directly from printed table rows (actual label, per-column counts).
    pub fn from_rows(
        actual_labels: Vec<i32>,
        predicted_labels: Vec<i32>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if counts.len() != actual_labels.len()
            || counts.iter().any(|row| row.len() != predicted_labels.len())
        {
            return Err(Error::DimensionMismatch(
                "confusion matrix rows do not match the label axes".into(),
            ));
        }
        Ok(Self {
            actual_labels,
            predicted_labels,
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: u64,
    pub total: u64,
    pub fraction: f64,
}

/// Correct = sum of cells whose row and column carry the same label; labels
/// present on only one axis contribute no diagonal.
pub fn accuracy(matrix: &ConfusionMatrix) -> Result<Accuracy> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::EmptyInput("empty confusion matrix"));
    }
    let mut correct = 0;
    for (row, a) in matrix.actual_labels.iter().enumerate() {
        if let Ok(col) = matrix.predicted_labels.binary_search(a) {
            correct += matrix.counts[row][col];
        }
    }
    Ok(Accuracy {
        correct,
        total,
        fraction: correct as f64 / total as f64,
    })
}

/// Root mean squared error.
pub fn rmse(actuals: &[f64], predictions: &[f64]) -> Result<f64> {
    if actuals.len() != predictions.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} actuals vs {} predictions",
            actuals.len(),
            predictions.len()
        )));
    }
    if actuals.is_empty() {
        return Err(Error::EmptyInput("no values for rmse"));
    }
    if actuals
        .iter()
        .chain(predictions)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("rmse inputs"));
    }
    let mean_sq = actuals
        .iter()
        .zip(predictions)
        .map(|(a, p)| (a - p) * (a - p))
        .sum::<f64>()
        / actuals.len() as f64;
    Ok(mean_sq.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmSection {
    pub train_matrix: ConfusionMatrix,
    pub test_matrix: ConfusionMatrix,
    pub train_accuracy: Accuracy,
    pub test_accuracy: Accuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnnSection {
    /// Test-set RMSE per user, on the original mood scale.
    pub per_user_rmse: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveSection {
    /// Persistence RMSE per user over the retained daily series.
    pub per_user_rmse: BTreeMap<String, f64>,
    /// Pooled class accuracy under the shared rounding rule.
    pub class_accuracy: f64,
}

/// Three-way comparison row: train / test / benchmark accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub result_train: Option<f64>,
    pub result_test: Option<f64>,
    pub benchmark: Option<f64>,
}

/// Everything needed to re-run the pipeline identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub derived_seeds: BTreeMap<String, u64>,
    pub dataset_fingerprint: String,
    pub package: String,
    pub version: String,
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub comparison: ComparisonRow,
    pub svm: Option<SvmSection>,
    pub rnn: Option<RnnSection>,
    pub naive: Option<NaiveSection>,
    /// Names of sections that were not supplied; non-empty means the report
    /// is incomplete.
    pub missing_sections: Vec<String>,
    pub provenance: Provenance,
}

/// Assemble the report; missing components mark their section absent rather
/// than failing.
pub fn build_report(
    svm: Option<SvmSection>,
    rnn: Option<RnnSection>,
    naive: Option<NaiveSection>,
    provenance: Provenance,
) -> EvaluationReport {
    let comparison = ComparisonRow {
        result_train: svm.as_ref().map(|s| s.train_accuracy.fraction),
        result_test: svm.as_ref().map(|s| s.test_accuracy.fraction),
        benchmark: naive.as_ref().map(|n| n.class_accuracy),
    };
    let mut missing_sections = Vec::new();
    if svm.is_none() {
        missing_sections.push("svm".to_string());
    }
    if rnn.is_none() {
        missing_sections.push("rnn".to_string());
    }
    if naive.is_none() {
        missing_sections.push("naive".to_string());
    }
    EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        comparison,
        svm,
        rnn,
        naive,
        missing_sections,
        provenance,
    }
}

impl EvaluationReport {
    pub fn is_complete(&self) -> bool {
        self.missing_sections.is_empty()
    }

    /// Canonical machine-readable form; byte-identical for identical inputs.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported report schema_version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Human-readable tables mirroring the JSON content.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("== comparison ==\n");
        out.push_str("prediction   result_train  result_test  benchmark\n");
        out.push_str(&format!(
            "accuracy     {:<13} {:<12} {}\n",
            render_opt(self.comparison.result_train),
            render_opt(self.comparison.result_test),
            render_opt(self.comparison.benchmark),
        ));
        match &self.svm {
            Some(svm) => {
                out.push('\n');
                render_matrix(&mut out, "svm training confusion matrix", &svm.train_matrix);
                out.push_str(&format!(
                    "accuracy = {}/{} = {:.3}\n",
                    svm.train_accuracy.correct, svm.train_accuracy.total, svm.train_accuracy.fraction
                ));
                out.push('\n');
                render_matrix(&mut out, "svm test confusion matrix", &svm.test_matrix);
                out.push_str(&format!(
                    "accuracy = {}/{} = {:.3}\n",
                    svm.test_accuracy.correct, svm.test_accuracy.total, svm.test_accuracy.fraction
                ));
            }
            None => out.push_str("\n== svm == (absent)\n"),
        }
        match &self.rnn {
            Some(rnn) => render_rmse_table(&mut out, "rnn per-user test rmse", &rnn.per_user_rmse),
            None => out.push_str("\n== rnn == (absent)\n"),
        }
        match &self.naive {
            Some(naive) => {
                render_rmse_table(&mut out, "naive per-user rmse", &naive.per_user_rmse);
                out.push_str(&format!("naive class accuracy = {:.3}\n", naive.class_accuracy));
            }
            None => out.push_str("\n== naive == (absent)\n"),
        }
        out.push_str(&format!(
            "\ndataset fingerprint: {}\nseed: {}\n",
            self.provenance.dataset_fingerprint, self.provenance.seed
        ));
        out
    }
}

fn render_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "absent".to_string(), |v| format!("{v:.3}"))
}

fn render_matrix(out: &mut String, title: &str, matrix: &ConfusionMatrix) {
    out.push_str(&format!("== {title} ==\nactual\\predicted"));
    for label in &matrix.predicted_labels {
        out.push_str(&format!(" {label:>5}"));
    }
    out.push('\n');
    for (row, label) in matrix.actual_labels.iter().enumerate() {
        out.push_str(&format!("{label:<16}"));
        for count in &matrix.counts[row] {
            out.push_str(&format!(" {count:>5}"));
        }
        out.push('\n');
    }
}

fn render_rmse_table(out: &mut String, title: &str, table: &BTreeMap<String, f64>) {
    out.push_str(&format!("\n== {title} ==\n"));
    for (user, value) in table {
        out.push_str(&format!("{user:<10} {value:.7}\n"));
    }
}

/// A prediction-series row shared by every model's plot CSV.
#[derive(Clone, Debug)]
pub struct PredictionRow {
    pub user_id: String,
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
    pub model: &'static str,
    /// Which side of the split the prediction came from.
    pub segment: &'static str,
}

/// CSV schema: user, date, actual, predicted, model, segment.
pub fn write_prediction_series_csv<W: Write>(rows: &[PredictionRow], mut writer: W) -> Result<()> {
    writeln!(writer, "user,date,actual,predicted,model,segment")?;
    for row in rows {
        writeln!(
            writer,
            "{},{},{},{},{},{}",
            row.user_id, row.date, row.actual, row.predicted, row.model, row.segment
        )?;
    }
    Ok(())
}
