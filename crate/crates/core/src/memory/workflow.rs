//! API-style calls abstracted into templates with named slots.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("{name} documents {expected} slots but the example passes {got} arguments")]
    SlotMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{name} needs at least two non-boolean arguments, found {found}")]
    TooFewSlots { name: String, found: usize },
    #[error("no value bound for slot {0}")]
    MissingBinding(String),
    #[error("unknown workflow {0}")]
    UnknownWorkflow(String),
    #[error("malformed call {0:?}")]
    MalformedCall(String),
    #[error("workflow library format: {0}")]
    Format(String),
}

/// A concrete call: `send_email("alex@example.com", "confirmed")`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorkflowCall {
    pub name: String,
    pub args: Vec<ValueKey>,
}

/// JSON argument value with a total order so calls can live in sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueKey(String);

impl ValueKey {
    pub fn new(v: &Value) -> ValueKey {
        ValueKey(v.to_string())
    }

    pub fn value(&self) -> Value {
        serde_json::from_str(&self.0).unwrap_or(Value::Null)
    }

    pub fn is_bool(&self) -> bool {
        matches!(self.0.as_str(), "true" | "false")
    }
}

impl From<Value> for ValueKey {
    fn from(v: Value) -> Self {
        ValueKey::new(&v)
    }
}

impl WorkflowCall {
    pub fn new(name: impl Into<String>, args: impl IntoIterator<Item = Value>) -> WorkflowCall {
        WorkflowCall {
            name: name.into(),
            args: args.into_iter().map(ValueKey::from).collect(),
        }
    }
}

impl fmt::Display for WorkflowCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<&str> = self.args.iter().map(|a| a.0.as_str()).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

impl FromStr for WorkflowCall {
    type Err = WorkflowError;

    /// Reads `name(arg, ...)` where each argument is a JSON literal.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WorkflowError::MalformedCall(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let name = s[..open].trim();
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(bad());
        }
        let args: Vec<Value> = serde_json::from_str(&format!("[{inner}]")).map_err(|_| bad())?;
        Ok(WorkflowCall::new(name, args))
    }
}

/// Documentation for one argument position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotDoc {
    pub name: String,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowTemplate {
    pub name: String,
    pub slots: Vec<SlotDoc>,
    pub example_binding: BTreeMap<String, Value>,
}

impl fmt::Display for WorkflowTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slots: Vec<&str> = self.slots.iter().map(|s| s.name.as_str()).collect();
        write!(f, "{}({})", self.name, slots.join(", "))
    }
}

/// Replaces each argument of `example` with the slot documented at its
/// position.
pub fn abstract_workflow(example: &WorkflowCall, doc: &[SlotDoc]) -> Result<WorkflowTemplate, WorkflowError> {
    let found = example.args.iter().filter(|a| !a.is_bool()).count();
    if found < 2 {
        return Err(WorkflowError::TooFewSlots {
            name: example.name.clone(),
            found,
        });
    }
    if doc.len() != example.args.len() {
        return Err(WorkflowError::SlotMismatch {
            name: example.name.clone(),
            expected: doc.len(),
            got: example.args.len(),
        });
    }
    Ok(WorkflowTemplate {
        name: example.name.clone(),
        slots: doc.to_vec(),
        example_binding: doc
            .iter()
            .zip(&example.args)
            .map(|(slot, v)| (slot.name.clone(), v.value()))
            .collect(),
    })
}

pub fn apply_workflow(template: &WorkflowTemplate, bindings: &BTreeMap<String, Value>) -> Result<WorkflowCall, WorkflowError> {
    let args = template
        .slots
        .iter()
        .map(|s| {
            bindings
                .get(&s.name)
                .cloned()
                .ok_or_else(|| WorkflowError::MissingBinding(s.name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WorkflowCall::new(template.name.clone(), args))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorkflowLibrary {
    templates: BTreeMap<String, WorkflowTemplate>,
}

#[derive(Serialize, Deserialize)]
struct WorkflowFile {
    format: u32,
    workflows: BTreeMap<String, StoredWorkflow>,
}

#[derive(Serialize, Deserialize)]
struct StoredWorkflow {
    slots: Vec<SlotDoc>,
    example_binding: BTreeMap<String, Value>,
}

impl WorkflowLibrary {
    pub fn new() -> WorkflowLibrary {
        WorkflowLibrary::default()
    }

    pub fn store(&mut self, template: WorkflowTemplate) {
        self.templates.insert(template.name.clone(), template);
    }

    pub fn get(&self, name: &str) -> Result<&WorkflowTemplate, WorkflowError> {
        self.templates
            .get(name)
            .ok_or_else(|| WorkflowError::UnknownWorkflow(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn to_json(&self) -> String {
        let file = WorkflowFile {
            format: 1,
            workflows: self
                .templates
                .iter()
                .map(|(k, t)| {
                    (
                        k.clone(),
                        StoredWorkflow {
                            slots: t.slots.clone(),
                            example_binding: t.example_binding.clone(),
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("workflows always serialise")
    }

    pub fn from_json(text: &str) -> Result<WorkflowLibrary, WorkflowError> {
        let file: WorkflowFile = serde_json::from_str(text).map_err(|e| WorkflowError::Format(e.to_string()))?;
        if file.format != 1 {
            return Err(WorkflowError::Format(format!("unsupported format {}", file.format)));
        }
        Ok(WorkflowLibrary {
            templates: file
                .workflows
                .into_iter()
                .map(|(name, w)| {
                    let t = WorkflowTemplate {
                        name: name.clone(),
                        slots: w.slots,
                        example_binding: w.example_binding,
                    };
                    (name, t)
                })
                .collect(),
        })
    }
}
