//! Parser → Locator/Builder → Executor, with the clarification loop in
//! between.
//!
//! A [`Session`] holds the board, the dialogue and a handle on the shape
//! library. Each instruction either executes, stores a shape, fails
//! without touching the board, or asks one question and waits for the
//! answer.

mod clarify;
mod locate;
mod turn;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::ActionProgram;
use crate::gateway::{extract_json, AgentOutput, AgentPrompt, AgentRole, CompletionBackend, GatewayError, Message, OutputSchema};
use crate::grammar::{parse_instruction, MemoryCommand, Overrides, ParsedItem, PartialPlacementSpec};
use crate::grid::Cell;
use crate::memory::MemoryError;

pub use clarify::{
    ask_first, merge_answer, missing_fields, next_clarification, question_text, ClarificationState, ClarifyError,
    Field, Question,
};
pub use locate::{build_recall, locate};
pub use turn::{Session, MAX_REASKS};

/// Where a field's value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Utterance,
    Answer,
    Memory,
    /// Computed from a relative label or a relation in the utterance.
    Derived,
    /// Lowest supported height.
    Gravity,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSources {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x2: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y2: Option<Provenance>,
}

/// A spec with a source tag on every filled field.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracedSpec {
    pub spec: PartialPlacementSpec,
    pub sources: FieldSources,
}

impl TracedSpec {
    fn tagged(spec: PartialPlacementSpec, tag: Provenance) -> TracedSpec {
        let t = |v: bool| v.then_some(tag);
        let sources = FieldSources {
            kind: t(spec.kind.is_some()),
            color: t(spec.color.is_some()),
            x: t(spec.x.is_some()),
            y: t(spec.y.is_some()),
            z: t(spec.z.is_some()),
            x2: t(spec.x2.is_some()),
            y2: t(spec.y2.is_some()),
        };
        TracedSpec { spec, sources }
    }

    pub fn from_utterance(spec: PartialPlacementSpec) -> TracedSpec {
        TracedSpec::tagged(spec, Provenance::Utterance)
    }

    pub fn from_memory(spec: PartialPlacementSpec) -> TracedSpec {
        TracedSpec::tagged(spec, Provenance::Memory)
    }

    /// Every field an action needs is set and carries a source.
    pub fn check_sources(&self) -> Result<(), &'static str> {
        let s = &self.spec;
        let p = &self.sources;
        for (name, set, src) in [
            ("kind", s.kind.is_some(), p.kind),
            ("color", s.color.is_some(), p.color),
            ("x", s.x.is_some(), p.x),
            ("y", s.y.is_some(), p.y),
            ("z", s.z.is_some(), p.z),
        ] {
            if !set || src.is_none() {
                return Err(name);
            }
        }
        for (name, set, src) in [("x2", s.x2.is_some(), p.x2), ("y2", s.y2.is_some(), p.y2)] {
            if set && src.is_none() {
                return Err(name);
            }
        }
        Ok(())
    }
}

/// One unit of work within a turn.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Entry {
    Part(TracedSpec),
    Recall {
        shape: String,
        target: TracedSpec,
        overrides: Overrides,
    },
    Name(String),
}

impl Entry {
    fn from_item(item: ParsedItem) -> Entry {
        match item {
            ParsedItem::Place(s) => Entry::Part(TracedSpec::from_utterance(s)),
            ParsedItem::Memory(MemoryCommand::Name { shape }) => Entry::Name(shape),
            ParsedItem::Memory(MemoryCommand::Recall {
                shape,
                target,
                overrides,
            }) => Entry::Recall {
                shape,
                target: TracedSpec::from_utterance(target),
                overrides,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocateError {
    /// No earlier part matches the reference.
    #[error("I can't find {0} to place against")]
    AmbiguousAnchor(String),
    #[error("that would put a part off the board at {0}")]
    OffBoard(String),
    #[error("there is no room left at column {x}, row {y}")]
    NoRoom { x: u8, y: u8 },
    #[error("two parts would share the cell at column {}, row {}, height {}", .0.x, .0.y, .0.z)]
    Collision(Cell),
    #[error("no location given for the {0}")]
    MissingTarget(String),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum TurnOutcome {
    Clarify {
        question: String,
        question_id: u32,
        field: Field,
    },
    Execute {
        program: ActionProgram,
    },
    Stored {
        shape: String,
        version: u32,
        program: ActionProgram,
    },
    Error {
        reason: String,
    },
}

impl TurnOutcome {
    pub fn is_clarify(&self) -> bool {
        matches!(self, TurnOutcome::Clarify { .. })
    }

    pub fn program(&self) -> Option<&ActionProgram> {
        match self {
            TurnOutcome::Execute { program } | TurnOutcome::Stored { program, .. } => Some(program),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Architect,
    System,
}

/// One line of the dialogue log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<TurnOutcome>,
}

/// What happened to one instruction, for scoring.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnTrace {
    pub turn: u64,
    pub text: String,
    /// Placement specs exactly as parsed, before any question.
    pub parsed: Vec<PartialPlacementSpec>,
    pub questions: Vec<Question>,
    pub answers: Vec<String>,
    /// The placements that ran, with their sources.
    pub executed: Vec<TracedSpec>,
    pub outcome: Option<TurnOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("a question is still waiting for an answer")]
    SessionBusy,
    #[error("there is no open question")]
    NoPendingQuestion,
    #[error(transparent)]
    Clarify(#[from] ClarifyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub(crate) enum ParseFailure {
    #[error("parser agent failed: {0}")]
    Backend(#[from] GatewayError),
    #[error("instruction outside the grammar")]
    Unparseable,
}

/// Runs the parser agent and reads its plans back through the grammar.
pub(crate) fn parse_with_backend(backend: &dyn CompletionBackend, text: &str) -> Result<Vec<ParsedItem>, ParseFailure> {
    let raw = backend.complete(&AgentPrompt::for_role(AgentRole::Parser), &[Message::user(text)])?;
    let AgentOutput::Structures(plans) = extract_json(&raw, OutputSchema::Structures)? else {
        unreachable!("structures schema yields structures")
    };
    let mut items = Vec::new();
    for plan in plans {
        items.extend(parse_instruction(&plan.plan).map_err(|_| ParseFailure::Unparseable)?);
    }
    if items.is_empty() {
        return Err(ParseFailure::Unparseable);
    }
    Ok(items)
}

#[cfg(test)]
mod tests;
