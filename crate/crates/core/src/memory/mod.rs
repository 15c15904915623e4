//! External memory: named shapes stored as relational graphs, re-applied at
//! new positions with optional color, part and size substitutions, plus the
//! same abstract/apply cycle for API-style workflows.

mod graph;
mod library;
mod scale;
mod workflow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Overrides, PartialPlacementSpec};
use crate::grid::{footprint, Cell, Color, PartKind};

pub use graph::{
    apply_at, component_offsets, reference, shapes_equivalent, to_graph, AbstractionFlags,
    Component, ComponentOffsets, Direction, Edge, Node, ShapeGraph,
};
pub use library::{ShapeLibrary, SharedShapeLibrary, StoredShape};
pub use scale::{scale_index, scale_shape};
pub use workflow::{
    abstract_workflow, apply_workflow, SlotDoc, ValueKey, WorkflowCall, WorkflowError,
    WorkflowLibrary, WorkflowTemplate,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("no shape called {0:?} is stored")]
    UnknownShape(String),
    #[error("shape name is empty")]
    EmptyName,
    #[error("cannot store an empty structure")]
    EmptyStructure,
    #[error("shape would reach ({x},{y},{z}), outside the board")]
    OutOfBounds { x: i32, y: i32, z: i32 },
    #[error("abstraction flags {flags:?} do not match overrides {overrides:?}")]
    FlagMismatch {
        flags: AbstractionFlags,
        overrides: Overrides,
    },
    #[error("{0}")]
    InvalidOverride(String),
    #[error("cannot scale: {0}")]
    Unscalable(String),
    #[error("shape library I/O: {0}")]
    Io(String),
    #[error("shape library format: {0}")]
    Format(String),
}

/// A concrete part produced from memory, not yet placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlannedPart {
    pub kind: PartKind,
    pub color: Color,
    pub anchor: Cell,
}

impl PlannedPart {
    pub fn cells(&self) -> Vec<Cell> {
        footprint(self.kind, self.anchor).unwrap_or_else(|_| vec![self.anchor])
    }

    pub fn to_spec(&self) -> PartialPlacementSpec {
        PartialPlacementSpec {
            kind: Some(self.kind),
            color: Some(self.color),
            x: Some(self.anchor.x),
            y: Some(self.anchor.y),
            z: Some(self.anchor.z),
            x2: (self.kind == PartKind::HorizontalBridge).then_some(self.anchor.x + 1),
            y2: (self.kind == PartKind::VerticalBridge).then_some(self.anchor.y + 1),
            ..Default::default()
        }
    }
}
