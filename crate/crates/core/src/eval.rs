//! Token accuracy, strict chunk-level P/R/F1 and the per-label assertion report.
//!
//! All ratios resolve 0/0 to 0. Micro scores pool counts over labels; macro F1
//! is the unweighted mean of per-label F1 over the labels that occur in gold
//! or predictions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assertion::AssertionLabel;
use crate::tags::Chunk;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {gold} gold vs {pred} predicted")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("empty evaluation")]
    Empty,
    #[error("unknown assertion label '{0}'")]
    UnknownLabel(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelScores {
    pub label: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl LabelScores {
    pub fn from_counts(label: impl Into<String>, tp: usize, fp: usize, fn_: usize) -> Self {
        let (precision, recall, f1) = prf(tp, fp, fn_);
        LabelScores {
            label: label.into(),
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }

    fn is_active(&self) -> bool {
        self.tp + self.fp + self.fn_ > 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_label: Vec<LabelScores>,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_accuracy: Option<f64>,
}

impl EvalReport {
    /// Builds aggregates from per-label counts, keeping the given row order.
    pub fn from_rows(per_label: Vec<LabelScores>) -> Self {
        let (tp, fp, fn_) = per_label
            .iter()
            .fold((0, 0, 0), |(a, b, c), r| (a + r.tp, b + r.fp, c + r.fn_));
        let (micro_precision, micro_recall, micro_f1) = prf(tp, fp, fn_);
        let active: Vec<f64> = per_label.iter().filter(|r| r.is_active()).map(|r| r.f1).collect();
        let macro_f1 = if active.is_empty() {
            0.0
        } else {
            active.iter().sum::<f64>() / active.len() as f64
        };
        EvalReport {
            per_label,
            micro_precision,
            micro_recall,
            micro_f1,
            macro_f1,
            token_accuracy: None,
        }
    }

    pub fn label(&self, label: &str) -> Option<&LabelScores> {
        self.per_label.iter().find(|r| r.label == label)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 from counts.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Strict chunk matching: a prediction counts only if `(first, last, label)`
/// appears in the gold set of the same sentence.
pub fn chunk_prf(gold: &[Vec<Chunk>], pred: &[Vec<Chunk>]) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut counts: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        let g: BTreeSet<&Chunk> = g.iter().collect();
        let p: BTreeSet<&Chunk> = p.iter().collect();
        for c in &p {
            let e = counts.entry(&c.label).or_default();
            if g.contains(c) {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        for c in g.difference(&p) {
            counts.entry(&c.label).or_default().2 += 1;
        }
    }
    Ok(EvalReport::from_rows(
        counts
            .into_iter()
            .map(|(label, (tp, fp, fn_))| LabelScores::from_counts(label, tp, fp, fn_))
            .collect(),
    ))
}

pub fn token_accuracy<S: AsRef<str>>(gold: &[S], pred: &[S]) -> Result<f64, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = gold
        .iter()
        .zip(pred)
        .filter(|(g, p)| g.as_ref() == p.as_ref())
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

/// Row order of the assertion report.
pub const ASSERTION_REPORT_ORDER: [AssertionLabel; 6] = [
    AssertionLabel::Absent,
    AssertionLabel::AssociatedWithSomeoneElse,
    AssertionLabel::Conditional,
    AssertionLabel::Hypothetical,
    AssertionLabel::Possible,
    AssertionLabel::Present,
];

/// Per-label F1 for single-label six-way classification; micro F1 equals accuracy.
pub fn assertion_report(gold: &[AssertionLabel], pred: &[AssertionLabel]) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let rows = ASSERTION_REPORT_ORDER
        .iter()
        .map(|&label| {
            let mut c = (0, 0, 0);
            for (&g, &p) in gold.iter().zip(pred) {
                match (g == label, p == label) {
                    (true, true) => c.0 += 1,
                    (false, true) => c.1 += 1,
                    (true, false) => c.2 += 1,
                    (false, false) => {}
                }
            }
            LabelScores::from_counts(label.display_name(), c.0, c.1, c.2)
        })
        .collect();
    Ok(EvalReport::from_rows(rows))
}

/// String-label form of [`assertion_report`]; labels outside the six-value set are errors.
pub fn assertion_report_str<S: AsRef<str>>(gold: &[S], pred: &[S]) -> Result<EvalReport, EvalError> {
    let parse = |v: &[S]| {
        v.iter()
            .map(|s| s.as_ref().parse::<AssertionLabel>().map_err(|_| EvalError::UnknownLabel(s.as_ref().to_string())))
            .collect::<Result<Vec<_>, _>>()
    };
    assertion_report(&parse(gold)?, &parse(pred)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportStyle {
    Table,
    Json,
}

pub fn format_report(report: &EvalReport, style: ReportStyle) -> String {
    match style {
        ReportStyle::Json => serde_json::to_string_pretty(report).expect("report serializes"),
        ReportStyle::Table => {
            let width = report
                .per_label
                .iter()
                .map(|r| r.label.chars().count())
                .chain([8])
                .max()
                .unwrap_or(8);
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}  {:>6}",
                "label", "precision", "recall", "f1", "tp", "fp", "fn"
            );
            for r in &report.per_label {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>6}  {:>6}  {:>6}",
                    r.label, r.precision, r.recall, r.f1, r.tp, r.fp, r.fn_
                );
            }
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}",
                "micro F1", report.micro_precision, report.micro_recall, report.micro_f1
            );
            let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}", "macro F1", "", "", report.macro_f1);
            if let Some(acc) = report.token_accuracy {
                let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}", "accuracy", "", "", acc);
            }
            out
        }
    }
}

pub fn parse_report(json: &str) -> Result<EvalReport, serde_json::Error> {
    serde_json::from_str(json)
}
