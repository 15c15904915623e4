//! Browser bindings. Everything crosses the boundary as JSON strings so the
//! page needs no generated types; errors come back as thrown strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cobuild_core::grid::{Cell, Color, PartKind};
use cobuild_core::memory::{scale_index, scale_shape, PlannedPart};
use cobuild_core::pipeline::Session;
use cobuild_core::session::ApplyRequest;

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serialises")
}

/// One builder session on the deterministic backend, with its own library.
#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[derive(Serialize)]
struct View<'a> {
    parts: Vec<&'a cobuild_core::grid::PlacedPart>,
    pending: Option<&'a cobuild_core::pipeline::Question>,
    shapes: Vec<String>,
}

impl Default for Demo {
    fn default() -> Self {
        Demo::new()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo {
            session: Session::deterministic(),
        }
    }

    /// An instruction, or the reply to an open question. Returns the turn
    /// outcome.
    pub fn say(&mut self, text: &str) -> String {
        json(&self.session.submit(text))
    }

    /// Parts on the board, the open question and stored shape names.
    pub fn view(&self) -> String {
        let shapes = self.session.memory().read().map(|l| l.names()).unwrap_or_default();
        json(&View {
            parts: self.session.grid().parts().collect(),
            pending: self.session.pending_question(),
            shapes,
        })
    }

    pub fn snapshot(&self) -> String {
        self.session.snapshot()
    }

    /// Rebuilds a stored shape with its reference part at column `x`, row
    /// `y`. `color` and `part` replace every part's; `scale` multiplies the
    /// size, 0 meaning half.
    pub fn recall(
        &mut self,
        name: &str,
        x: u8,
        y: u8,
        color: Option<String>,
        part: Option<String>,
        scale: Option<u8>,
    ) -> Result<String, String> {
        let req = ApplyRequest {
            x,
            y,
            z: None,
            color: color.filter(|c| !c.is_empty()).map(|c| parse_color(&c)).transpose()?,
            part: part.filter(|p| !p.is_empty()).map(|p| parse_kind(&p)).transpose()?,
            scale,
        };
        let text = req.instruction(name);
        let outcome = self.session.submit(&text);
        Ok(json(&serde_json::json!({ "instruction": text, "outcome": outcome })))
    }

    pub fn reset(&mut self) {
        self.session = Session::deterministic();
    }
}

fn parse_color(s: &str) -> Result<Color, String> {
    Color::ALL
        .into_iter()
        .find(|c| json(c).trim_matches('"') == s)
        .ok_or_else(|| format!("unknown color {s}"))
}

fn parse_kind(s: &str) -> Result<PartKind, String> {
    PartKind::ALL
        .into_iter()
        .find(|k| json(k).trim_matches('"') == s || k.phrase() == s)
        .ok_or_else(|| format!("unknown part {s}"))
}

/// Color names, then part names, as the page's pickers want them.
#[wasm_bindgen]
pub fn vocabulary() -> String {
    let colors: Vec<String> = Color::ALL.iter().map(|c| json(c).trim_matches('"').to_string()).collect();
    let parts: Vec<String> = PartKind::ALL.iter().map(|k| json(k).trim_matches('"').to_string()).collect();
    json(&serde_json::json!({ "colors": colors, "parts": parts }))
}

#[derive(Serialize)]
struct Scaled {
    cells: Vec<[u8; 3]>,
    /// Source index feeding each target index, per axis.
    map: [Vec<u32>; 3],
}

/// Nearest-neighbour resize of a set of cells (JSON `[[x,y,z],...]`) to a
/// `w` by `d` by `h` box anchored at the set's minimum corner.
#[wasm_bindgen]
pub fn scale_cells(cells: &str, w: u8, d: u8, h: u8) -> Result<String, String> {
    let raw: Vec<[u8; 3]> = serde_json::from_str(cells).map_err(|e| e.to_string())?;
    let parts = raw
        .iter()
        .map(|&[x, y, z]| {
            Cell::new(x, y, z).map(|anchor| PlannedPart {
                kind: PartKind::Nut,
                color: Color::Blue,
                anchor,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let scaled = scale_shape(&parts, (w, d, h)).map_err(|e| e.to_string())?;
    let extent = |f: fn(&[u8; 3]) -> u8| {
        let lo = raw.iter().map(f).min().unwrap_or(0);
        let hi = raw.iter().map(f).max().unwrap_or(0);
        (hi - lo + 1) as u32
    };
    let source = [extent(|c| c[0]), extent(|c| c[1]), extent(|c| c[2])];
    let target = [w as u32, d as u32, h as u32];
    let map = [0, 1, 2].map(|a| (0..target[a]).map(|t| scale_index(t, source[a], target[a])).collect());
    let mut cells: Vec<[u8; 3]> = scaled.iter().map(|p| [p.anchor.x, p.anchor.y, p.anchor.z]).collect();
    cells.sort_unstable();
    Ok(json(&Scaled { cells, map }))
}
