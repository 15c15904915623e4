//! Template grammar for placement instructions.
//!
//! [`parse_instruction`] turns an utterance into placement specs and memory
//! commands. Anything the sentence does not state stays `None`; pronouns and
//! definite descriptions become anchor references instead of guessed values.
//! [`generate_instruction`] is the inverse used by the dataset generator, and
//! [`render_canonical`] prints any parsed item back into a sentence that
//! parses to the same item.

mod fragment;
mod lexer;
mod parser;
mod render;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Color, PartKind};

pub use fragment::{parse_color_answer, parse_coordinate_answer, parse_kind_answer, Axis};
pub use render::{cardinal_word, generate_instruction, ordinal, render_canonical, TemplateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("instruction is empty")]
    Empty,
    #[error("could not understand {text:?}")]
    Unparseable { text: String },
    #[error("unknown relative position {0:?}")]
    UnknownLabel(String),
    #[error("template needs field {0}")]
    MissingField(&'static str),
}

/// Fixed board positions that can be named instead of coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelativePosition {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
    Middle,
    TopMiddle,
    BottomMiddle,
    LeftMiddle,
    RightMiddle,
}

impl RelativePosition {
    pub const ALL: [RelativePosition; 9] = [
        RelativePosition::TopLeft,
        RelativePosition::TopRight,
        RelativePosition::BottomLeft,
        RelativePosition::BottomRight,
        RelativePosition::Middle,
        RelativePosition::TopMiddle,
        RelativePosition::BottomMiddle,
        RelativePosition::LeftMiddle,
        RelativePosition::RightMiddle,
    ];

    /// Column and row of the lexicon cell.
    pub fn cell(self) -> (u8, u8) {
        match self {
            RelativePosition::TopLeft => (1, 1),
            RelativePosition::TopRight => (16, 1),
            RelativePosition::BottomLeft => (1, 16),
            RelativePosition::BottomRight => (16, 16),
            RelativePosition::Middle => (8, 8),
            RelativePosition::TopMiddle => (8, 1),
            RelativePosition::BottomMiddle => (8, 16),
            RelativePosition::LeftMiddle => (1, 8),
            RelativePosition::RightMiddle => (16, 8),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RelativePosition::TopLeft => "top-left",
            RelativePosition::TopRight => "top-right",
            RelativePosition::BottomLeft => "bottom-left",
            RelativePosition::BottomRight => "bottom-right",
            RelativePosition::Middle => "middle",
            RelativePosition::TopMiddle => "top-middle",
            RelativePosition::BottomMiddle => "bottom-middle",
            RelativePosition::LeftMiddle => "left-middle",
            RelativePosition::RightMiddle => "right-middle",
        }
    }
}

impl FromStr for RelativePosition {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '_'], "-");
        let norm = match norm.as_str() {
            "center" | "centre" => "middle",
            "middle-left" => "left-middle",
            "middle-right" => "right-middle",
            "middle-top" | "top-center" => "top-middle",
            "middle-bottom" | "bottom-center" => "bottom-middle",
            other => other,
        };
        RelativePosition::ALL
            .into_iter()
            .find(|p| p.label() == norm)
            .ok_or_else(|| GrammarError::UnknownLabel(s.to_string()))
    }
}

/// Looks a label up in the lexicon.
pub fn resolve_relative(label: &str) -> Result<(u8, u8), GrammarError> {
    label.parse::<RelativePosition>().map(RelativePosition::cell)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    OnTop,
    NextTo,
    LeftOf,
    RightOf,
    InFront,
    Behind,
}

/// Reference to a part mentioned earlier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "ref", rename_all = "kebab-case")]
pub enum AnchorRef {
    /// "it", "that one", a bare "on top": the most recently placed part.
    Last,
    /// "the blue screw": the most recent part with these attributes.
    Described {
        color: Option<Color>,
        kind: Option<PartKind>,
    },
}

impl fmt::Display for AnchorRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchorRef::Last => f.write_str("it"),
            AnchorRef::Described { color, kind } => {
                f.write_str("the")?;
                if let Some(c) = color {
                    write!(f, " {c}")?;
                }
                match kind {
                    Some(k) => write!(f, " {}", k.phrase()),
                    None => f.write_str(" one"),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependentRelation {
    pub kind: RelationKind,
    pub target: AnchorRef,
}

/// One part as far as the utterance describes it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialPlacementSpec {
    pub kind: Option<PartKind>,
    pub color: Option<Color>,
    pub x: Option<u8>,
    pub y: Option<u8>,
    pub z: Option<u8>,
    pub x2: Option<u8>,
    pub y2: Option<u8>,
    pub relative: Option<RelativePosition>,
    pub relation: Option<DependentRelation>,
    pub anchor_ref: Option<AnchorRef>,
}

impl PartialPlacementSpec {
    /// Kind, color, and some way of locating the part are all present.
    pub fn is_fully_specified(&self) -> bool {
        self.kind.is_some()
            && self.color.is_some()
            && ((self.x.is_some() && self.y.is_some())
                || self.relative.is_some()
                || self.relation.is_some())
    }

    pub fn has_location(&self) -> bool {
        self.x.is_some()
            || self.y.is_some()
            || self.z.is_some()
            || self.relative.is_some()
            || self.relation.is_some()
    }
}

/// Multiplier applied to a recalled shape's bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScaleFactor {
    pub num: u8,
    pub den: u8,
}

impl ScaleFactor {
    pub fn times(n: u8) -> ScaleFactor {
        ScaleFactor { num: n, den: 1 }
    }

    pub fn half() -> ScaleFactor {
        ScaleFactor { num: 1, den: 2 }
    }

    /// Target extent for a source extent, never below one.
    pub fn apply(self, extent: u8) -> u8 {
        let t = (extent as u32 * self.num as u32) / self.den.max(1) as u32;
        t.clamp(1, u8::MAX as u32) as u8
    }
}

/// Attribute substitutions requested when recalling a shape.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Overrides {
    pub color: Option<Color>,
    pub part: Option<PartKind>,
    pub size: Option<ScaleFactor>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.color.is_none() && self.part.is_none() && self.size.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum MemoryCommand {
    /// "This is what I call a C15."
    Name { shape: String },
    /// "Make me another C15 at the 8th row and 9th column."
    Recall {
        shape: String,
        target: PartialPlacementSpec,
        overrides: Overrides,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParsedItem {
    Place(PartialPlacementSpec),
    Memory(MemoryCommand),
}

impl ParsedItem {
    pub fn as_spec(&self) -> Option<&PartialPlacementSpec> {
        match self {
            ParsedItem::Place(s) => Some(s),
            ParsedItem::Memory(_) => None,
        }
    }
}

/// Parses one utterance into specs and memory commands, in textual order.
pub fn parse_instruction(text: &str) -> Result<Vec<ParsedItem>, GrammarError> {
    let tokens = lexer::tokenize(text);
    if tokens.is_empty() {
        return Err(GrammarError::Empty);
    }
    parser::parse_tokens(&tokens).ok_or_else(|| GrammarError::Unparseable {
        text: text.to_string(),
    })
}
