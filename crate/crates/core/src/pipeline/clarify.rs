//! The discourse module: find the first missing field, ask about it, and
//! merge the answer into exactly that field.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{parse_color_answer, parse_coordinate_answer, parse_kind_answer, Axis, PartialPlacementSpec};

use super::{Provenance, TracedSpec};

/// What a clarification question asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Kind,
    Color,
    X,
    Y,
    /// The name of a stored shape that could not be found.
    Shape,
    /// The whole instruction, after text outside the grammar.
    Rephrase,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Kind => "part",
            Field::Color => "color",
            Field::X => "column",
            Field::Y => "row",
            Field::Shape => "shape name",
            Field::Rephrase => "instruction",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u32,
    /// Index of the targeted item within the turn.
    pub target: usize,
    pub field: Field,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClarifyError {
    #[error("question {0} was never asked")]
    UnknownQuestion(u32),
    #[error("{answer:?} does not name a {field}")]
    UnusableAnswer { field: Field, answer: String },
}

/// Bookkeeping for one turn's questions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarificationState {
    pub pending: Vec<(usize, Field)>,
    pub asked: BTreeMap<u32, (usize, Field)>,
    pub answers: BTreeMap<u32, String>,
}

/// Missing fields of one spec, in asking order.
pub fn missing_fields(spec: &PartialPlacementSpec) -> Vec<Field> {
    let mut out = Vec::new();
    if spec.kind.is_none() {
        out.push(Field::Kind);
    }
    if spec.color.is_none() {
        out.push(Field::Color);
    }
    if spec.relative.is_none() && spec.relation.is_none() {
        if spec.x.is_none() {
            out.push(Field::X);
        }
        if spec.y.is_none() {
            out.push(Field::Y);
        }
    }
    out
}

fn part_words(spec: &PartialPlacementSpec) -> String {
    let kind = spec.kind.map(|k| k.phrase()).unwrap_or("part");
    match spec.color {
        Some(c) => format!("{c} {kind}"),
        None => kind.to_string(),
    }
}

/// The fixed question for a missing field of a placement.
pub fn question_text(spec: &PartialPlacementSpec, field: Field) -> String {
    match field {
        Field::Kind => {
            let at = match (spec.x, spec.y, &spec.relation) {
                (Some(x), Some(y), _) => format!(" at column {x}, row {y}"),
                (Some(x), None, _) => format!(" in column {x}"),
                (None, Some(y), _) => format!(" in row {y}"),
                (None, None, Some(rel)) => format!(" {} {}", relation_words(rel.kind), rel.target),
                (None, None, None) => String::new(),
            };
            format!("Which part should I place{at}?")
        }
        Field::Color => format!("What color should the {} be?", spec.kind.map(|k| k.phrase()).unwrap_or("part")),
        Field::X => format!("Which column should the {} go in?", part_words(spec)),
        Field::Y => format!("Which row should the {} go in?", part_words(spec)),
        Field::Shape => "Which shape do you mean?".to_string(),
        Field::Rephrase => rephrase_text(),
    }
}

pub(crate) fn rephrase_text() -> String {
    "I could not understand that. Could you rephrase it?".to_string()
}

pub(crate) fn recall_question(shape: &str, field: Field) -> String {
    match field {
        Field::X => format!("Which column should the {shape} start in?"),
        Field::Y => format!("Which row should the {shape} start in?"),
        _ => format!("I don't know a shape called {shape}. Which shape do you mean?"),
    }
}

fn relation_words(kind: crate::grammar::RelationKind) -> &'static str {
    use crate::grammar::RelationKind::*;
    match kind {
        OnTop => "on top of",
        NextTo => "next to",
        LeftOf => "to the left of",
        RightOf => "to the right of",
        InFront => "in front of",
        Behind => "behind",
    }
}

/// The first missing field over `specs`, in spec order then field order.
pub fn next_clarification(specs: &[PartialPlacementSpec]) -> Option<Question> {
    specs.iter().enumerate().find_map(|(i, s)| {
        missing_fields(s).first().map(|&field| Question {
            id: 0,
            target: i,
            field,
            text: question_text(s, field),
        })
    })
}

/// Fills one field of a traced spec from an answer.
pub(crate) fn fill(t: &mut TracedSpec, field: Field, answer: &str) -> Result<(), ClarifyError> {
    let unusable = || ClarifyError::UnusableAnswer {
        field,
        answer: answer.to_string(),
    };
    let s = &mut t.spec;
    match field {
        Field::Kind => {
            s.kind = Some(parse_kind_answer(answer).ok_or_else(unusable)?);
            t.sources.kind = Some(Provenance::Answer);
        }
        Field::Color => {
            s.color = Some(parse_color_answer(answer).ok_or_else(unusable)?);
            t.sources.color = Some(Provenance::Answer);
        }
        Field::X => {
            s.x = Some(parse_coordinate_answer(answer, Axis::Column).ok_or_else(unusable)?);
            t.sources.x = Some(Provenance::Answer);
        }
        Field::Y => {
            s.y = Some(parse_coordinate_answer(answer, Axis::Row).ok_or_else(unusable)?);
            t.sources.y = Some(Provenance::Answer);
        }
        Field::Shape | Field::Rephrase => return Err(unusable()),
    }
    Ok(())
}

/// Merges the answer to question `id` into the spec it targeted. Only that
/// field changes.
pub fn merge_answer(
    state: &mut ClarificationState,
    id: u32,
    answer: &str,
    specs: &[PartialPlacementSpec],
) -> Result<Vec<PartialPlacementSpec>, ClarifyError> {
    let &(index, field) = state.asked.get(&id).ok_or(ClarifyError::UnknownQuestion(id))?;
    let spec = specs.get(index).ok_or(ClarifyError::UnknownQuestion(id))?;
    let mut t = TracedSpec::from_utterance(spec.clone());
    fill(&mut t, field, answer)?;
    state.answers.insert(id, answer.to_string());
    state.pending.retain(|p| *p != (index, field));
    let mut out = specs.to_vec();
    out[index] = t.spec;
    Ok(out)
}

/// Starts a state for `specs`, with the first question registered as `id`.
pub fn ask_first(specs: &[PartialPlacementSpec], id: u32) -> (ClarificationState, Option<Question>) {
    let mut state = ClarificationState {
        pending: specs
            .iter()
            .enumerate()
            .flat_map(|(i, s)| missing_fields(s).into_iter().map(move |f| (i, f)))
            .collect(),
        ..Default::default()
    };
    let q = next_clarification(specs).map(|mut q| {
        q.id = id;
        state.asked.insert(id, (q.target, q.field));
        q
    });
    (state, q)
}
