//! Turns fully specified parts into a wire-format program and runs it
//! against the board all-or-nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::PartialPlacementSpec;
use crate::grid::{Action, Cell, GridError, GridState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecutorError {
    /// A spec reached the executor with a field still unset.
    #[error("spec {index} is missing {field}")]
    IncompleteSpec { index: usize, field: &'static str },
    #[error("spec {index}: {source}")]
    Invalid { index: usize, source: GridError },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionProgram {
    pub actions: Vec<Action>,
    pub origin: u64,
}

impl ActionProgram {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// The actions as a JSON array in the wire format.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.actions).expect("actions always serialise")
    }
}

/// One place action per spec, stable-sorted by height so supports come
/// first.
pub fn compile(specs: &[PartialPlacementSpec], origin: u64) -> Result<ActionProgram, ExecutorError> {
    let mut actions = Vec::with_capacity(specs.len());
    for (index, s) in specs.iter().enumerate() {
        let missing = |field| ExecutorError::IncompleteSpec { index, field };
        let kind = s.kind.ok_or(missing("kind"))?;
        let color = s.color.ok_or(missing("color"))?;
        let x = s.x.ok_or(missing("x"))?;
        let y = s.y.ok_or(missing("y"))?;
        let z = s.z.ok_or(missing("z"))?;
        let anchor = Cell::new(x, y, z).map_err(|source| ExecutorError::Invalid { index, source })?;
        let action = Action::place(kind, color, anchor);
        if let Action::Place { x2, y2, .. } = &action {
            if (s.x2.is_some() && s.x2 != *x2) || (s.y2.is_some() && s.y2 != *y2) {
                return Err(ExecutorError::Invalid {
                    index,
                    source: GridError::MalformedAction(format!(
                        "a {} at column {x}, row {y} cannot span {:?}/{:?}",
                        kind.phrase(),
                        s.x2,
                        s.y2
                    )),
                });
            }
        }
        actions.push((z, action));
    }
    actions.sort_by_key(|(z, _)| *z);
    Ok(ActionProgram {
        actions: actions.into_iter().map(|(_, a)| a).collect(),
        origin,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub index: usize,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionLog {
    pub origin: u64,
    pub entries: Vec<LogEntry>,
    /// Index of the action that failed; nothing was applied if set.
    pub failed: Option<usize>,
}

impl ExecutionLog {
    pub fn ok(&self) -> bool {
        self.failed.is_none()
    }

    pub fn error(&self) -> Option<&str> {
        self.failed
            .and_then(|i| self.entries.get(i))
            .and_then(|e| e.error.as_deref())
    }

    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entries always serialise") + "\n")
            .collect()
    }
}

/// Applies every action in order. On the first failure the original grid
/// comes back unchanged and the log names the failing action.
pub fn run(program: &ActionProgram, grid: &GridState) -> (GridState, ExecutionLog) {
    let mut log = ExecutionLog {
        origin: program.origin,
        ..Default::default()
    };
    let mut current = grid.clone();
    for (index, action) in program.actions.iter().enumerate() {
        let step = action.validate().and_then(|_| current.apply(action));
        match step {
            Ok(next) => {
                current = next;
                log.entries.push(LogEntry {
                    index,
                    action: action.clone(),
                    error: None,
                });
            }
            Err(e) => {
                log::debug!("action {index} failed: {e}");
                log.entries.push(LogEntry {
                    index,
                    action: action.clone(),
                    error: Some(e.to_string()),
                });
                log.failed = Some(index);
                return (grid.clone(), log);
            }
        }
    }
    (current, log)
}
