//! The 16×16×16 construction board.
//!
//! `x` is the column (1 = leftmost), `y` is the row (1 = top row when the
//! board is viewed from above) and `z` is the height (1 = ground). Every
//! operation returns a new [`GridState`]; the input is never mutated.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side length of the board along every axis.
pub const GRID_SIZE: u8 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartKind {
    Screw,
    Nut,
    Washer,
    HorizontalBridge,
    VerticalBridge,
    Bolt,
    Gasket,
    HexNut,
    SquareNut,
}

impl PartKind {
    pub const ALL: [PartKind; 9] = [
        PartKind::Screw,
        PartKind::Nut,
        PartKind::Washer,
        PartKind::HorizontalBridge,
        PartKind::VerticalBridge,
        PartKind::Bolt,
        PartKind::Gasket,
        PartKind::HexNut,
        PartKind::SquareNut,
    ];

    /// Wire-format symbol, e.g. `horizontal-bridge`.
    pub fn as_str(self) -> &'static str {
        match self {
            PartKind::Screw => "screw",
            PartKind::Nut => "nut",
            PartKind::Washer => "washer",
            PartKind::HorizontalBridge => "horizontal-bridge",
            PartKind::VerticalBridge => "vertical-bridge",
            PartKind::Bolt => "bolt",
            PartKind::Gasket => "gasket",
            PartKind::HexNut => "hex-nut",
            PartKind::SquareNut => "square-nut",
        }
    }

    /// Name used in user-facing sentences, e.g. `horizontal bridge`.
    pub fn phrase(self) -> &'static str {
        match self {
            PartKind::HorizontalBridge => "horizontal bridge",
            PartKind::VerticalBridge => "vertical bridge",
            PartKind::HexNut => "hex nut",
            PartKind::SquareNut => "square nut",
            other => other.as_str(),
        }
    }

    pub fn is_bridge(self) -> bool {
        matches!(self, PartKind::HorizontalBridge | PartKind::VerticalBridge)
    }

    /// Offsets of every occupied cell relative to the anchor.
    pub fn cell_offsets(self) -> &'static [(i32, i32, i32)] {
        match self {
            PartKind::HorizontalBridge => &[(0, 0, 0), (1, 0, 0)],
            PartKind::VerticalBridge => &[(0, 0, 0), (0, 1, 0)],
            _ => &[(0, 0, 0)],
        }
    }

    /// Extent along x and y.
    pub fn extent(self) -> (u8, u8) {
        match self {
            PartKind::HorizontalBridge => (2, 1),
            PartKind::VerticalBridge => (1, 2),
            _ => (1, 1),
        }
    }
}

impl fmt::Display for PartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartKind {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '_'], "-");
        PartKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| GridError::UnknownSymbol(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Orange,
    Red,
    Green,
    Yellow,
    Purple,
    Black,
    White,
    Brown,
    Magenta,
}

impl Color {
    pub const ALL: [Color; 10] = [
        Color::Blue,
        Color::Orange,
        Color::Red,
        Color::Green,
        Color::Yellow,
        Color::Purple,
        Color::Black,
        Color::White,
        Color::Brown,
        Color::Magenta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Blue => "blue",
            Color::Orange => "orange",
            Color::Red => "red",
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Black => "black",
            Color::White => "white",
            Color::Brown => "brown",
            Color::Magenta => "magenta",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Color {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        Color::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| GridError::UnknownSymbol(s.to_string()))
    }
}

/// A board position. All components are in `1..=16`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: u8,
    pub y: u8,
    pub z: u8,
}

impl Cell {
    pub fn new(x: u8, y: u8, z: u8) -> Result<Cell, GridError> {
        Cell::from_i32(x as i32, y as i32, z as i32).ok_or(GridError::OutOfBounds {
            x: x as i32,
            y: y as i32,
            z: z as i32,
        })
    }

    /// Builds a cell from signed components, returning `None` outside the board.
    pub fn from_i32(x: i32, y: i32, z: i32) -> Option<Cell> {
        let ok = |v: i32| (1..=GRID_SIZE as i32).contains(&v);
        (ok(x) && ok(y) && ok(z)).then_some(Cell {
            x: x as u8,
            y: y as u8,
            z: z as u8,
        })
    }

    pub fn offset(self, dx: i32, dy: i32, dz: i32) -> Option<Cell> {
        Cell::from_i32(self.x as i32 + dx, self.y as i32 + dy, self.z as i32 + dz)
    }

    pub fn below(self) -> Option<Cell> {
        self.offset(0, 0, -1)
    }

    pub fn in_bounds(self) -> bool {
        Cell::from_i32(self.x as i32, self.y as i32, self.z as i32).is_some()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartId(pub u32);

impl fmt::Display for PartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedPart {
    pub id: PartId,
    pub kind: PartKind,
    pub color: Color,
    pub anchor: Cell,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("position ({x},{y},{z}) is outside the 16x16x16 board")]
    OutOfBounds { x: i32, y: i32, z: i32 },
    #[error("cell {0} is already occupied")]
    Occupied(Cell),
    #[error("nothing supports a part at {0}")]
    Unsupported(Cell),
    #[error("cell {0} is empty")]
    Empty(Cell),
    #[error("removing it would leave part {0} floating")]
    WouldFloat(PartId),
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("malformed action: {0}")]
    MalformedAction(String),
}

/// One entry of the executor wire format.
///
/// Serialises as `{"action":"place","part":..,"color":..,"x":..,"y":..,"z":..}`,
/// with `x2` (horizontal bridge) or `y2` (vertical bridge) only for bridges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase", deny_unknown_fields)]
pub enum Action {
    Place {
        part: PartKind,
        color: Color,
        x: u8,
        y: u8,
        z: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x2: Option<u8>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y2: Option<u8>,
    },
    Remove {
        x: u8,
        y: u8,
        z: u8,
    },
}

impl Action {
    /// A place action with the bridge second index filled in from the kind.
    pub fn place(kind: PartKind, color: Color, anchor: Cell) -> Action {
        Action::Place {
            part: kind,
            color,
            x: anchor.x,
            y: anchor.y,
            z: anchor.z,
            x2: (kind == PartKind::HorizontalBridge).then_some(anchor.x + 1),
            y2: (kind == PartKind::VerticalBridge).then_some(anchor.y + 1),
        }
    }

    /// Checks the bridge fields against the part kind.
    pub fn validate(&self) -> Result<(), GridError> {
        if let Action::Place { part, x, y, x2, y2, .. } = *self {
            let want_x2 = (part == PartKind::HorizontalBridge).then(|| x.wrapping_add(1));
            let want_y2 = (part == PartKind::VerticalBridge).then(|| y.wrapping_add(1));
            if x2 != want_x2 {
                return Err(GridError::MalformedAction(format!(
                    "{part} needs x2 = {want_x2:?}, got {x2:?}"
                )));
            }
            if y2 != want_y2 {
                return Err(GridError::MalformedAction(format!(
                    "{part} needs y2 = {want_y2:?}, got {y2:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("actions always serialise")
    }
}

/// Cells covered by a part of `kind` anchored at `anchor`.
pub fn footprint(kind: PartKind, anchor: Cell) -> Result<Vec<Cell>, GridError> {
    kind.cell_offsets()
        .iter()
        .map(|&(dx, dy, dz)| {
            anchor.offset(dx, dy, dz).ok_or(GridError::OutOfBounds {
                x: anchor.x as i32 + dx,
                y: anchor.y as i32 + dy,
                z: anchor.z as i32 + dz,
            })
        })
        .collect()
}

/// Gravity rule, parameterised over an occupancy test so scratch boards can
/// reuse it. Single-cell parts need ground or a part directly below; bridges
/// need that under at least one of their two cells.
pub fn supported_by(occupied: impl Fn(Cell) -> bool, cells: &[Cell]) -> bool {
    cells
        .iter()
        .any(|c| c.z == 1 || c.below().is_some_and(&occupied))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GridState {
    occupancy: BTreeMap<Cell, PartId>,
    parts: BTreeMap<PartId, PlacedPart>,
    history: Vec<Action>,
    next_id: u32,
}

impl GridState {
    pub fn new() -> GridState {
        GridState::default()
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupancy.contains_key(&cell)
    }

    pub fn part_at(&self, cell: Cell) -> Option<&PlacedPart> {
        self.occupancy.get(&cell).and_then(|id| self.parts.get(id))
    }

    pub fn part(&self, id: PartId) -> Option<&PlacedPart> {
        self.parts.get(&id)
    }

    /// Parts in id (placement) order.
    pub fn parts(&self) -> impl DoubleEndedIterator<Item = &PlacedPart> + '_ {
        self.parts.values()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn history(&self) -> &[Action] {
        &self.history
    }

    /// The id the next placement will receive.
    pub fn next_id(&self) -> PartId {
        PartId(self.next_id)
    }

    pub fn occupancy(&self) -> &BTreeMap<Cell, PartId> {
        &self.occupancy
    }

    pub fn supported(&self, kind: PartKind, cells: &[Cell]) -> bool {
        let _ = kind;
        supported_by(|c| self.is_occupied(c), cells)
    }

    pub fn place(&self, kind: PartKind, color: Color, anchor: Cell) -> Result<GridState, GridError> {
        let cells = footprint(kind, anchor)?;
        if let Some(&c) = cells.iter().find(|c| self.is_occupied(**c)) {
            return Err(GridError::Occupied(c));
        }
        if !self.supported(kind, &cells) {
            return Err(GridError::Unsupported(cells[0]));
        }
        let mut next = self.clone();
        let id = PartId(next.next_id);
        next.next_id += 1;
        for &c in &cells {
            next.occupancy.insert(c, id);
        }
        next.parts.insert(
            id,
            PlacedPart {
                id,
                kind,
                color,
                anchor,
                cells,
            },
        );
        next.history.push(Action::place(kind, color, anchor));
        Ok(next)
    }

    pub fn remove(&self, cell: Cell) -> Result<GridState, GridError> {
        let id = *self.occupancy.get(&cell).ok_or(GridError::Empty(cell))?;
        let mut next = self.clone();
        let part = next.parts.remove(&id).expect("occupancy and parts agree");
        for c in &part.cells {
            next.occupancy.remove(c);
        }
        for c in &part.cells {
            let Some(above) = c.offset(0, 0, 1) else { continue };
            if let Some(&other) = next.occupancy.get(&above) {
                let p = &next.parts[&other];
                if !next.supported(p.kind, &p.cells) {
                    return Err(GridError::WouldFloat(other));
                }
            }
        }
        next.history.push(Action::Remove {
            x: cell.x,
            y: cell.y,
            z: cell.z,
        });
        Ok(next)
    }

    pub fn apply(&self, action: &Action) -> Result<GridState, GridError> {
        action.validate()?;
        match *action {
            Action::Place {
                part, color, x, y, z, ..
            } => self.place(part, color, Cell::new(x, y, z)?),
            Action::Remove { x, y, z } => self.remove(Cell::new(x, y, z)?),
        }
    }

    /// Lowest height at which a part of `kind` fits at column `x`, row `y`.
    pub fn drop_height(&self, kind: PartKind, x: u8, y: u8) -> Option<u8> {
        drop_height_with(|c| self.is_occupied(c), kind, x, y)
    }

    /// Full consistency check: occupancy/parts agreement, footprints and
    /// the support rule for every part.
    pub fn validate(&self) -> Result<(), String> {
        for (cell, id) in &self.occupancy {
            let part = self
                .parts
                .get(id)
                .ok_or_else(|| format!("cell {cell} maps to missing part {id}"))?;
            if !part.cells.contains(cell) {
                return Err(format!("cell {cell} maps to {id} which does not cover it"));
            }
        }
        for (id, part) in &self.parts {
            if part.id != *id {
                return Err(format!("part keyed {id} carries id {}", part.id));
            }
            let expect = footprint(part.kind, part.anchor).map_err(|e| e.to_string())?;
            if expect != part.cells {
                return Err(format!("part {id} has cells {:?}, expected {expect:?}", part.cells));
            }
            for c in &part.cells {
                if self.occupancy.get(c) != Some(id) {
                    return Err(format!("part {id} cell {c} not mapped to it"));
                }
            }
            if !self.supported(part.kind, &part.cells) {
                return Err(format!("part {id} at {} is unsupported", part.anchor));
            }
            if id.0 >= self.next_id {
                return Err(format!("part {id} not below next id {}", self.next_id));
            }
        }
        Ok(())
    }

    /// Snapshot JSON: the placed parts in id order.
    pub fn snapshot(&self) -> String {
        let parts: Vec<&PlacedPart> = self.parts.values().collect();
        serde_json::to_string(&parts).expect("parts always serialise")
    }
}

/// Shared by the grid and by scratch boards in the locator.
pub fn drop_height_with(occupied: impl Fn(Cell) -> bool, kind: PartKind, x: u8, y: u8) -> Option<u8> {
    (1..=GRID_SIZE).find(|&z| {
        let Ok(anchor) = Cell::new(x, y, z) else { return false };
        let Ok(cells) = footprint(kind, anchor) else { return false };
        cells.iter().all(|c| !occupied(*c)) && supported_by(&occupied, &cells)
    })
}
