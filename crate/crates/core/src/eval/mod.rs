//! Datasets, an automatic answer oracle, and the scores reported for the
//! five construction tasks and the workflow-reuse benchmark.

mod dataset;
mod metrics;
mod report;
mod run;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::grammar::PartialPlacementSpec;
use crate::grid::{Cell, Color, PartKind};
use crate::memory::{PlannedPart, SlotDoc};
use crate::pipeline::Field;

pub use dataset::{dataset_jsonl, generate_dataset, generate_dataset_in, TASK3_FILE, TASK5_FILE, TOOLBENCH_FILE};
pub use metrics::{function_reuse_metrics, hallucination_rate, FieldAccuracy, HallucinationCounts, Ratio, ReuseMetrics, Tally};
pub use report::{write_report, ClarificationMetrics, Criterion, MetricsReport, ShapeScore, ShapeVerdict, PUBLISHED_TASK3, PUBLISHED_TASK3_OVERALL};
pub use run::{oracle_answer, run_eval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    Ii,
    #[serde(rename = "iii")]
    Iii,
    #[serde(rename = "iv-single")]
    IvSingle,
    #[serde(rename = "iv-two")]
    IvTwo,
    #[serde(rename = "v")]
    V,
    #[serde(rename = "toolbench")]
    Toolbench,
}

impl TaskId {
    pub const ALL: [TaskId; 7] = [
        TaskId::I,
        TaskId::Ii,
        TaskId::Iii,
        TaskId::IvSingle,
        TaskId::IvTwo,
        TaskId::V,
        TaskId::Toolbench,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::I => "i",
            TaskId::Ii => "ii",
            TaskId::Iii => "iii",
            TaskId::IvSingle => "iv-single",
            TaskId::IvTwo => "iv-two",
            TaskId::V => "v",
            TaskId::Toolbench => "toolbench",
        }
    }

    /// Expands a command-line task name; `iv` covers both halves.
    pub fn expand(name: &str) -> Result<Vec<TaskId>, EvalError> {
        match name {
            "iv" => Ok(vec![TaskId::IvSingle, TaskId::IvTwo]),
            "all" => Ok(TaskId::ALL.to_vec()),
            other => other.parse().map(|t| vec![t]),
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| EvalError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("fixture not found: {0}")]
    FixtureMissing(String),
    #[error("bad fixture {0}")]
    BadFixture(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("cannot write report: {0}")]
    Io(String),
}

/// A gold part in flat form, as the fixtures store it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoldPart {
    pub kind: PartKind,
    pub color: Color,
    pub x: u8,
    pub y: u8,
    pub z: u8,
}

impl GoldPart {
    pub fn planned(&self) -> PlannedPart {
        PlannedPart {
            kind: self.kind,
            color: self.color,
            anchor: Cell {
                x: self.x,
                y: self.y,
                z: self.z,
            },
        }
    }
}

/// A gold-null field of one part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Omission {
    pub part: usize,
    pub field: Field,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omitted: Vec<Omission>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Gold {
    /// What the text states, nulls included, and where each part must end up.
    Specs {
        stated: Vec<PartialPlacementSpec>,
        truth: Vec<GoldPart>,
    },
    /// Parts added by each instruction of a shape script.
    Script { shape: String, steps: Vec<Vec<GoldPart>> },
    /// A shape built, named, then recalled elsewhere.
    Dialogue {
        shape: String,
        built: Vec<GoldPart>,
        recalled: Vec<GoldPart>,
    },
    Workflow {
        example: String,
        doc: Vec<SlotDoc>,
        queries: Vec<BTreeMap<String, Value>>,
        calls: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskCase {
    pub task: TaskId,
    pub id: String,
    pub turns: Vec<String>,
    pub gold: Gold,
    #[serde(default)]
    pub meta: CaseMeta,
}

#[cfg(test)]
mod tests;
