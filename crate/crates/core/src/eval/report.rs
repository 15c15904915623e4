//! The scored report, its pass/fail thresholds, and the files it is saved
//! to.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{FieldAccuracy, HallucinationCounts, Ratio, ReuseMetrics, Tally};
use super::{EvalError, TaskId};

/// Published per-shape instruction-following accuracy, in percent.
pub const PUBLISHED_TASK3: [(&str, f64); 10] = [
    ("A", 100.0),
    ("B", 75.0),
    ("C", 100.0),
    ("D", 25.0),
    ("E", 75.0),
    ("G", 100.0),
    ("+", 100.0),
    ("Square", 75.0),
    ("X", 100.0),
    ("Moroccan Bridge", 57.1),
];

/// Published overall accuracy on the shape scripts, in percent.
pub const PUBLISHED_TASK3_OVERALL: f64 = 78.57;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClarificationMetrics {
    /// Cases where at least one question was asked.
    pub detection: Tally,
    /// Omitted fields that got their own question.
    pub cqs_asked: Tally,
    /// Cases with a question whose final placement matches gold.
    pub correct_after_cq: Tally,
    pub hallucination: HallucinationCounts,
    pub questions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeScore {
    pub shape: String,
    pub instructions: Tally,
    /// Published accuracy for the same shape, in percent.
    pub published: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeVerdict {
    pub shape: String,
    pub parts: usize,
    /// The recalled copy is a translate of the original.
    pub equivalent: bool,
    /// Both copies sit exactly where the script says.
    pub matches_gold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: TaskId,
    pub backend: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub cases: usize,
    pub runtime_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldAccuracy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub by_part: Vec<FieldAccuracy>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_category: BTreeMap<String, Vec<FieldAccuracy>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clarification: Option<ClarificationMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shapes: Vec<ShapeScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall: Option<Tally>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<ShapeVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reuse: Option<ReuseMetrics>,
    #[serde(default)]
    pub failures: Vec<String>,
}

/// One threshold check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn pct(r: f64) -> String {
    format!("{:.2}", r * 100.0)
}

fn rate_or_na(r: Ratio) -> String {
    r.rate().map(pct).unwrap_or_else(|| "n/a".into())
}

impl MetricsReport {
    pub fn new(task: TaskId, backend: &str, cases: usize) -> MetricsReport {
        MetricsReport {
            task,
            backend: backend.to_string(),
            seed: None,
            cases,
            runtime_ms: 0,
            fields: None,
            by_part: Vec::new(),
            by_category: BTreeMap::new(),
            clarification: None,
            shapes: Vec::new(),
            overall: None,
            verdicts: Vec::new(),
            reuse: None,
            failures: Vec::new(),
        }
    }

    /// The same report with the wall-clock field zeroed, for comparing runs.
    pub fn without_timing(&self) -> MetricsReport {
        MetricsReport {
            runtime_ms: 0,
            ..self.clone()
        }
    }

    fn budget_ms(&self) -> u64 {
        match self.task {
            TaskId::I | TaskId::Ii | TaskId::Toolbench => 5_000,
            _ => 30_000,
        }
    }

    /// Pass/fail against the acceptance thresholds for this task.
    pub fn criteria(&self) -> Vec<Criterion> {
        let mut out = Vec::new();
        let mut check = |name: String, passed: bool, detail: String| out.push(Criterion { name, passed, detail });
        let t = self.task;
        let fields_line = |f: &FieldAccuracy| {
            format!(
                "part {} color {} coordinates {}",
                pct(f.part.rate()),
                pct(f.color.rate()),
                pct(f.coordinates.rate())
            )
        };
        match t {
            TaskId::I => {
                let f = self.fields.unwrap_or_default();
                check(format!("task {t} fields 100%"), f.all_correct(), fields_line(&f));
            }
            TaskId::Ii => {
                for (i, f) in self.by_part.iter().enumerate() {
                    check(format!("task {t} part {} fields 100%", i + 1), f.all_correct(), fields_line(f));
                }
                for (cat, parts) in &self.by_category {
                    let ok = parts.iter().all(FieldAccuracy::all_correct);
                    check(format!("task {t} {cat} 100%"), ok, format!("{} parts", parts.len()));
                }
                if self.by_part.len() != 2 {
                    check(format!("task {t} two parts per case"), false, format!("{} parts", self.by_part.len()));
                }
            }
            TaskId::Iii => {
                for s in &self.shapes {
                    let got = s.instructions.rate() * 100.0;
                    let want = s.published.unwrap_or(100.0);
                    check(
                        format!("task {t} shape {} >= {want}", s.shape),
                        got + 1e-9 >= want,
                        format!("{}/{} = {got:.2}", s.instructions.correct, s.instructions.total),
                    );
                }
                let overall = self.overall.unwrap_or_default();
                check(
                    format!("task {t} overall >= {PUBLISHED_TASK3_OVERALL}"),
                    overall.total > 0 && overall.rate() * 100.0 + 1e-9 >= PUBLISHED_TASK3_OVERALL,
                    format!("{}/{} = {}", overall.correct, overall.total, pct(overall.rate())),
                );
            }
            TaskId::IvSingle | TaskId::IvTwo => {
                let c = self.clarification.clone().unwrap_or_default();
                for (name, tally) in [
                    ("missing-info detection", c.detection),
                    ("CQs asked", c.cqs_asked),
                    ("correct parse after CQ", c.correct_after_cq),
                ] {
                    check(
                        format!("task {t} {name} 100%"),
                        tally.total > 0 && tally.correct == tally.total,
                        format!("{}/{}", tally.correct, tally.total),
                    );
                }
                let h = c.hallucination;
                check(
                    format!("task {t} hallucination 0.00"),
                    [h.part, h.color, h.coordinates].iter().all(|r| r.hallucinated == 0),
                    format!(
                        "part {} color {} coordinates {}",
                        rate_or_na(h.part),
                        rate_or_na(h.color),
                        rate_or_na(h.coordinates)
                    ),
                );
            }
            TaskId::V => {
                for v in &self.verdicts {
                    check(
                        format!("task {t} {} reproduced", v.shape),
                        v.equivalent && v.matches_gold,
                        format!("{} parts, equivalent {}, at gold cells {}", v.parts, v.equivalent, v.matches_gold),
                    );
                }
                check(format!("task {t} nine dialogues"), self.verdicts.len() == 9, format!("{}", self.verdicts.len()));
            }
            TaskId::Toolbench => {
                let r = self.reuse.unwrap_or_default();
                check(
                    format!("task {t} precision/recall/F1 100%"),
                    r.gold > 0 && r.precision == 1.0 && r.recall == 1.0 && r.f1 == 1.0,
                    format!("P {} R {} F1 {}", pct(r.precision), pct(r.recall), pct(r.f1)),
                );
            }
        }
        let budget = self.budget_ms();
        check(
            format!("task {t} runtime < {} s", budget / 1000),
            self.runtime_ms < budget,
            format!("{} ms", self.runtime_ms),
        );
        out
    }

    pub fn passed(&self) -> bool {
        self.criteria().iter().all(|c| c.passed)
    }

    /// Flat `metric,value` rows.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = vec![
            ("task".into(), self.task.to_string()),
            ("backend".into(), self.backend.clone()),
            ("cases".into(), self.cases.to_string()),
            ("runtime_ms".into(), self.runtime_ms.to_string()),
        ];
        if let Some(seed) = self.seed {
            rows.push(("seed".into(), seed.to_string()));
        }
        let mut fields = |prefix: &str, f: &FieldAccuracy| {
            rows.push((format!("{prefix}part"), pct(f.part.rate())));
            rows.push((format!("{prefix}color"), pct(f.color.rate())));
            rows.push((format!("{prefix}coordinates"), pct(f.coordinates.rate())));
        };
        if let Some(f) = &self.fields {
            fields("", f);
        }
        for (i, f) in self.by_part.iter().enumerate() {
            fields(&format!("part{}.", i + 1), f);
        }
        for (cat, parts) in &self.by_category {
            for (i, f) in parts.iter().enumerate() {
                fields(&format!("{cat}.part{}.", i + 1), f);
            }
        }
        if let Some(c) = &self.clarification {
            rows.push(("missing_info_detection".into(), pct(c.detection.rate())));
            rows.push(("cqs_asked".into(), pct(c.cqs_asked.rate())));
            rows.push(("correct_after_cq".into(), pct(c.correct_after_cq.rate())));
            rows.push(("hallucination.part".into(), rate_or_na(c.hallucination.part)));
            rows.push(("hallucination.color".into(), rate_or_na(c.hallucination.color)));
            rows.push(("hallucination.coordinates".into(), rate_or_na(c.hallucination.coordinates)));
            rows.push(("questions".into(), c.questions.to_string()));
        }
        for s in &self.shapes {
            rows.push((format!("shape.{}", s.shape), pct(s.instructions.rate())));
            if let Some(p) = s.published {
                rows.push((format!("shape.{}.published", s.shape), format!("{p:.2}")));
            }
        }
        if let Some(o) = &self.overall {
            rows.push(("overall".into(), pct(o.rate())));
            rows.push(("overall.published".into(), format!("{PUBLISHED_TASK3_OVERALL:.2}")));
        }
        for v in &self.verdicts {
            let mark = if v.equivalent && v.matches_gold { "T" } else { "F" };
            rows.push((format!("verdict.{}", v.shape), mark.into()));
        }
        if let Some(r) = &self.reuse {
            rows.push(("precision".into(), pct(r.precision)));
            rows.push(("recall".into(), pct(r.recall)));
            rows.push(("f1".into(), pct(r.f1)));
        }
        rows.push(("failures".into(), self.failures.len().to_string()));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value"]).expect("in-memory csv");
        for (k, v) in self.rows() {
            w.write_record([k, v]).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

/// Writes `<task>.json` and `<task>.csv` into `dir`, creating it.
pub fn write_report(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |e: std::io::Error| EvalError::Io(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    let json = dir.join(format!("{}.json", report.task));
    let csv = dir.join(format!("{}.csv", report.task));
    let body = serde_json::to_string_pretty(report).expect("reports serialize");
    std::fs::write(&json, body + "\n").map_err(io)?;
    std::fs::write(&csv, report.to_csv()).map_err(io)?;
    Ok(vec![json, csv])
}
