//! Readers for short answers to clarification questions ("a red one",
//! "the fifth", "column 3 please").

use serde::{Deserialize, Serialize};

use super::lexer::tokenize;
use super::parser::{color_word, number_value, Cursor};
use crate::grid::{Color, PartKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Column,
    Row,
}

impl Axis {
    fn nouns(self) -> &'static [&'static str] {
        match self {
            Axis::Column => &["column", "columns", "col"],
            Axis::Row => &["row", "rows"],
        }
    }
}

/// First part name mentioned anywhere in the answer.
pub fn parse_kind_answer(text: &str) -> Option<PartKind> {
    let toks = tokenize(text);
    (0..toks.len()).find_map(|start| {
        let mut c = Cursor::new(&toks);
        c.pos = start;
        c.kind()
    })
}

/// First color mentioned anywhere in the answer.
pub fn parse_color_answer(text: &str) -> Option<Color> {
    tokenize(text).iter().find_map(|t| color_word(&t.norm))
}

/// A column or row number. When the answer names both axes, the number tied
/// to `axis` wins ("row 3, column 4" answers a column question with 4).
pub fn parse_coordinate_answer(text: &str, axis: Axis) -> Option<u8> {
    let toks = tokenize(text);
    let value = |i: usize| -> Option<u8> {
        let w = toks.get(i)?.norm.as_str();
        match w {
            "last" => Some(16),
            _ => number_value(w),
        }
    };
    let is_noun = |i: usize, a: Axis| toks.get(i).is_some_and(|t| a.nouns().contains(&t.norm.as_str()));
    let other = match axis {
        Axis::Column => Axis::Row,
        Axis::Row => Axis::Column,
    };
    for i in 0..toks.len() {
        if is_noun(i, axis) {
            if let Some(v) = value(i + 1) {
                return Some(v);
            }
            if let Some(v) = i.checked_sub(1).and_then(value) {
                return Some(v);
            }
        }
    }
    (0..toks.len()).find_map(|i| {
        let tied_to_other = is_noun(i + 1, other) || (i > 0 && is_noun(i - 1, other));
        if tied_to_other {
            None
        } else {
            value(i)
        }
    })
}
