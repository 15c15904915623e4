use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::parser::CARDINAL_WORDS;
use super::{
    AnchorRef, GrammarError, MemoryCommand, Overrides, ParsedItem, PartialPlacementSpec,
    RelationKind,
};
use crate::grid::PartKind;

/// Sentence shapes used when generating instructions from gold specs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateId {
    /// "Place a red nut at the 3rd column, 5th row."
    Absolute,
    /// "Place a red nut at the top left of the board."
    Relative,
    /// "Place a red nut at row 5 column 3 height 1."
    RowColumnHeight,
    /// "Place a red nut on top of the blue screw."
    Dependent,
    /// Whatever fields are present, nothing else.
    Underspecified,
}

/// "1st", "2nd", "3rd", "11th", ...
pub fn ordinal(n: u8) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// "one" through "sixteen"; digits beyond that.
pub fn cardinal_word(n: u8) -> String {
    match n {
        1..=16 => CARDINAL_WORDS[n as usize - 1].to_string(),
        _ => n.to_string(),
    }
}

fn relation_phrase(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::OnTop => "on top of",
        RelationKind::NextTo => "next to",
        RelationKind::LeftOf => "to the left of",
        RelationKind::RightOf => "to the right of",
        RelationKind::InFront => "in front of",
        RelationKind::Behind => "behind",
    }
}

fn object_phrase(spec: &PartialPlacementSpec) -> String {
    if spec.kind.is_none() && spec.color.is_none() && spec.anchor_ref == Some(AnchorRef::Last) {
        return "it".to_string();
    }
    let mut out = String::from("a");
    if let Some(c) = spec.color {
        write!(out, " {c}").unwrap();
    }
    match (spec.kind, spec.color) {
        (Some(k), _) => write!(out, " {}", k.phrase()).unwrap(),
        (None, Some(_)) => out.push_str(" one"),
        (None, None) => out.push_str(" part"),
    }
    out
}

fn axis_phrase(first: u8, second: Option<u8>, noun: &str) -> String {
    match second {
        Some(s) => format!("{} and {} {noun}s", ordinal(first), ordinal(s)),
        None => format!("{} {noun}", ordinal(first)),
    }
}

/// Location clause with a leading space, or empty.
fn location_phrase(spec: &PartialPlacementSpec) -> String {
    let mut out = String::new();
    if let Some(rel) = &spec.relation {
        write!(out, " {} {}", relation_phrase(rel.kind), rel.target).unwrap();
        return out;
    }
    if let Some(r) = spec.relative {
        write!(out, " at the {} of the board", r.label().replace('-', " ")).unwrap();
    }
    let mut coords = Vec::new();
    if let Some(x) = spec.x {
        coords.push(axis_phrase(x, spec.x2, "column"));
    }
    if let Some(y) = spec.y {
        coords.push(axis_phrase(y, spec.y2, "row"));
    }
    if let Some(z) = spec.z {
        coords.push(format!("height {z}"));
    }
    if !coords.is_empty() {
        let article = if spec.x.is_some() || spec.y.is_some() { "the " } else { "" };
        write!(out, " at {article}{}", coords.join(", ")).unwrap();
    }
    out
}

fn overrides_phrase(ov: &Overrides) -> String {
    let mut out = String::new();
    if let Some(c) = ov.color {
        write!(out, " in {c}").unwrap();
    }
    if let Some(k) = ov.part {
        write!(out, " with {}s", k.phrase()).unwrap();
    }
    if let Some(s) = ov.size {
        match (s.num, s.den) {
            (1, 2) => out.push_str(" half the size"),
            (2, 1) => out.push_str(" twice as big"),
            (n, 1) => write!(out, " {} times as big", cardinal_word(n)).unwrap(),
            (n, d) => write!(out, " {n}/{d} times as big").unwrap(),
        }
    }
    out
}

fn spec_sentence(spec: &PartialPlacementSpec) -> String {
    format!("Place {}{}.", object_phrase(spec), location_phrase(spec))
}

/// Prints one parsed item as a sentence that parses back to it.
pub fn render_canonical(item: &ParsedItem) -> String {
    match item {
        ParsedItem::Place(spec) => spec_sentence(spec),
        ParsedItem::Memory(MemoryCommand::Name { shape }) => {
            format!("This is what I call a {shape}.")
        }
        ParsedItem::Memory(MemoryCommand::Recall {
            shape,
            target,
            overrides,
        }) => format!(
            "Make me another {shape}{}{}.",
            location_phrase(target),
            overrides_phrase(overrides)
        ),
    }
}

/// Renders a spec with the given template, checking that the template's
/// fields are present.
pub fn generate_instruction(
    spec: &PartialPlacementSpec,
    template: &TemplateId,
) -> Result<String, GrammarError> {
    let need = |present: bool, field: &'static str| {
        if present {
            Ok(())
        } else {
            Err(GrammarError::MissingField(field))
        }
    };
    if *template != TemplateId::Underspecified {
        need(spec.kind.is_some(), "kind")?;
        need(spec.color.is_some(), "color")?;
    }
    match template {
        TemplateId::Absolute => {
            need(spec.x.is_some(), "x")?;
            need(spec.y.is_some(), "y")?;
            match spec.kind {
                Some(PartKind::HorizontalBridge) => need(spec.x2.is_some(), "x2")?,
                Some(PartKind::VerticalBridge) => need(spec.y2.is_some(), "y2")?,
                _ => {}
            }
            Ok(spec_sentence(spec))
        }
        TemplateId::Relative => {
            need(spec.relative.is_some(), "relative")?;
            Ok(spec_sentence(spec))
        }
        TemplateId::RowColumnHeight => {
            let x = spec.x.ok_or(GrammarError::MissingField("x"))?;
            let y = spec.y.ok_or(GrammarError::MissingField("y"))?;
            let z = spec.z.ok_or(GrammarError::MissingField("z"))?;
            Ok(format!(
                "Place {} at row {y} column {x} height {z}.",
                object_phrase(spec)
            ))
        }
        TemplateId::Dependent => {
            need(spec.relation.is_some(), "relation")?;
            Ok(spec_sentence(spec))
        }
        TemplateId::Underspecified => Ok(spec_sentence(spec)),
    }
}
