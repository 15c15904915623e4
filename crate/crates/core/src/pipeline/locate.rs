//! Locator and Builder: turn relative and dependent placements into board
//! coordinates, and stored shapes into concrete parts.

use std::collections::BTreeSet;

use crate::grammar::{AnchorRef, Overrides, PartialPlacementSpec, RelationKind};
use crate::grid::{drop_height_with, footprint, Cell, Color, GridState, PartKind, GRID_SIZE};
use crate::memory::{apply_at, AbstractionFlags, MemoryError, PlannedPart, ShapeLibrary};

use super::{Entry, LocateError, Provenance, TracedSpec};

/// A part the locator knows about, in recency order.
#[derive(Clone, Debug)]
struct Known {
    kind: PartKind,
    color: Option<Color>,
    cells: Vec<Cell>,
}

impl Known {
    fn anchor(&self) -> Cell {
        self.cells[0]
    }
}

/// Board occupancy plus everything already located earlier in the turn.
pub(crate) struct Scratch {
    occupied: BTreeSet<Cell>,
    recent: Vec<Known>,
}

impl Scratch {
    pub(crate) fn new(grid: &GridState) -> Scratch {
        Scratch {
            occupied: grid.occupancy().keys().copied().collect(),
            recent: grid
                .parts()
                .map(|p| Known {
                    kind: p.kind,
                    color: Some(p.color),
                    cells: p.cells.clone(),
                })
                .collect(),
        }
    }

    fn is_occupied(&self, c: Cell) -> bool {
        self.occupied.contains(&c)
    }

    fn add(&mut self, kind: PartKind, color: Option<Color>, cells: Vec<Cell>) {
        self.occupied.extend(cells.iter().copied());
        self.recent.push(Known { kind, color, cells });
    }

    fn find(&self, anchor: &AnchorRef) -> Result<&Known, LocateError> {
        let hit = match anchor {
            AnchorRef::Last => self.recent.last(),
            AnchorRef::Described { color, kind } => self.recent.iter().rev().find(|k| {
                kind.is_none_or(|want| want == k.kind) && color.is_none_or(|want| Some(want) == k.color)
            }),
        };
        hit.ok_or_else(|| LocateError::AmbiguousAnchor(anchor.to_string()))
    }

    /// Highest occupied height in a column, 0 when empty.
    fn top(&self, x: u8, y: u8) -> u8 {
        (1..=GRID_SIZE)
            .rev()
            .find(|&z| self.is_occupied(Cell { x, y, z }))
            .unwrap_or(0)
    }
}

fn off_board(what: impl Into<String>) -> LocateError {
    LocateError::OffBoard(what.into())
}

/// Where a part of `kind` goes relative to `anchor`. Side relations leave
/// the height to gravity; on-top stacks directly above the anchor cell.
fn relation_target(rel: RelationKind, anchor: &Known, kind: PartKind) -> Result<(u8, u8, Option<u8>), LocateError> {
    let a = anchor.anchor();
    let min_x = anchor.cells.iter().map(|c| c.x as i32).min().unwrap_or(a.x as i32);
    let max_x = anchor.cells.iter().map(|c| c.x as i32).max().unwrap_or(a.x as i32);
    let min_y = anchor.cells.iter().map(|c| c.y as i32).min().unwrap_or(a.y as i32);
    let max_y = anchor.cells.iter().map(|c| c.y as i32).max().unwrap_or(a.y as i32);
    let (w, h) = kind.extent();
    let (x, y, z) = match rel {
        RelationKind::NextTo | RelationKind::RightOf => (max_x + 1, a.y as i32, None),
        RelationKind::LeftOf => (min_x - w as i32, a.y as i32, None),
        RelationKind::InFront => (a.x as i32, max_y + 1, None),
        RelationKind::Behind => (a.x as i32, min_y - h as i32, None),
        RelationKind::OnTop => (a.x as i32, a.y as i32, Some(a.z as i32 + 1)),
    };
    let z = z.unwrap_or(1);
    let cell = Cell::from_i32(x, y, z).ok_or_else(|| off_board(format!("({x},{y},{z})")))?;
    Ok((cell.x, cell.y, (rel == RelationKind::OnTop).then_some(cell.z)))
}

/// Fills the location of one part as far as the board allows. Returns
/// the part's cells once kind and all three coordinates are known.
fn locate_part(t: &mut TracedSpec, scratch: &Scratch, blocked: bool) -> Result<Option<Vec<Cell>>, LocateError> {
    let s = &mut t.spec;
    if let Some(rel) = s.relative {
        let (mut x, mut y) = rel.cell();
        // Keep a bridge's second cell on the board at the right and bottom edges.
        match s.kind {
            Some(PartKind::HorizontalBridge) => x = x.min(GRID_SIZE - 1),
            Some(PartKind::VerticalBridge) => y = y.min(GRID_SIZE - 1),
            _ => {}
        }
        s.x = Some(x);
        s.y = Some(y);
        t.sources.x = Some(Provenance::Derived);
        t.sources.y = Some(Provenance::Derived);
    }
    if let (Some(rel), Some(kind), false) = (&s.relation, s.kind, blocked) {
        let anchor = scratch.find(&rel.target)?;
        let (x, y, z) = relation_target(rel.kind, anchor, kind)?;
        s.x = Some(x);
        s.y = Some(y);
        t.sources.x = Some(Provenance::Derived);
        t.sources.y = Some(Provenance::Derived);
        if z.is_some() {
            s.z = z;
            t.sources.z = Some(Provenance::Derived);
        }
    }
    let (Some(kind), Some(x), Some(y)) = (s.kind, s.x, s.y) else {
        return Ok(None);
    };
    match kind {
        PartKind::HorizontalBridge if s.x2.is_none() => {
            s.x2 = Some(x + 1);
            t.sources.x2 = Some(Provenance::Derived);
        }
        PartKind::VerticalBridge if s.y2.is_none() => {
            s.y2 = Some(y + 1);
            t.sources.y2 = Some(Provenance::Derived);
        }
        _ => {}
    }
    if s.z.is_none() {
        let z = drop_height_with(|c| scratch.is_occupied(c), kind, x, y)
            .ok_or(LocateError::NoRoom { x, y })?;
        s.z = Some(z);
        t.sources.z = Some(Provenance::Gravity);
    }
    let anchor = Cell::new(x, y, s.z.unwrap_or(1)).map_err(|e| off_board(e.to_string()))?;
    let cells = footprint(kind, anchor).map_err(|e| off_board(e.to_string()))?;
    Ok(Some(cells))
}

/// Rebuilds a stored shape with its first part at column `x`, row `y`.
/// Without an explicit height the copy rests on the ground, lifted just
/// enough to clear whatever already stands in its footprint.
pub fn build_recall(
    library: &ShapeLibrary,
    shape: &str,
    target: &PartialPlacementSpec,
    overrides: &Overrides,
    grid: &GridState,
) -> Result<Vec<PlannedPart>, LocateError> {
    build_on(library, shape, target, overrides, &Scratch::new(grid))
}

fn build_on(
    library: &ShapeLibrary,
    shape: &str,
    target: &PartialPlacementSpec,
    overrides: &Overrides,
    scratch: &Scratch,
) -> Result<Vec<PlannedPart>, LocateError> {
    let graph = library.retrieve(shape)?;
    let (x, y) = match (target.x, target.y, target.relative) {
        (Some(x), Some(y), _) => (x, y),
        (_, _, Some(rel)) => rel.cell(),
        _ => return Err(LocateError::MissingTarget(shape.to_string())),
    };
    let flags = AbstractionFlags::from_overrides(overrides);
    // The first part need not be the lowest, so find any height that fits
    // and shift the result down to the ground afterwards.
    let mut last_err = None;
    let mut parts = None;
    let mut start_z = 1;
    for z in 1..=GRID_SIZE {
        match apply_at(graph, Cell { x, y, z }, flags, overrides) {
            Ok(p) => {
                parts = Some(p);
                start_z = z;
                break;
            }
            Err(e @ MemoryError::OutOfBounds { .. }) => last_err = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    let Some(mut parts) = parts else {
        return Err(last_err.map(Into::into).unwrap_or_else(|| off_board(shape)));
    };
    let min_z = parts.iter().map(|p| p.anchor.z).min().unwrap_or(1);
    let dz = match target.z {
        Some(z) => z as i32 - start_z as i32,
        None => {
            let mut lift = 1i32;
            for p in &parts {
                for c in p.cells() {
                    let h = (c.z - min_z) as i32;
                    lift = lift.max(scratch.top(c.x, c.y) as i32 + 1 - h);
                }
            }
            lift - min_z as i32
        }
    };
    for p in &mut parts {
        let z = p.anchor.z as i32 + dz;
        p.anchor = Cell::from_i32(p.anchor.x as i32, p.anchor.y as i32, z).ok_or(MemoryError::OutOfBounds {
            x: p.anchor.x as i32,
            y: p.anchor.y as i32,
            z,
        })?;
    }
    Ok(parts)
}

/// Result of locating one entry of a turn.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Located {
    Part(TracedSpec),
    Recall {
        shape: String,
        known: bool,
        target: TracedSpec,
        parts: Option<Vec<PlannedPart>>,
    },
    Name(String),
}

/// Locates every entry in order on a scratch copy of the board, so later
/// parts see earlier ones. Once a part cannot be fully placed, parts that
/// depend on recency wait for the next pass.
pub(crate) fn locate_all(entries: &[Entry], grid: &GridState, library: &ShapeLibrary) -> Result<Vec<Located>, LocateError> {
    let mut scratch = Scratch::new(grid);
    let mut blocked = false;
    let mut out = Vec::with_capacity(entries.len());
    for entry in entries {
        match entry {
            Entry::Part(t) => {
                let mut t = t.clone();
                match locate_part(&mut t, &scratch, blocked)? {
                    Some(cells) => {
                        if let Some(&c) = cells.iter().find(|c| scratch.is_occupied(**c)) {
                            return Err(LocateError::Collision(c));
                        }
                        scratch.add(t.spec.kind.expect("located parts have a kind"), t.spec.color, cells);
                    }
                    None => blocked = true,
                }
                out.push(Located::Part(t));
            }
            Entry::Recall {
                shape,
                target,
                overrides,
            } => {
                let known = library.contains(shape);
                let mut t = target.clone();
                if let Some(rel) = t.spec.relative {
                    let (x, y) = rel.cell();
                    t.spec.x = Some(x);
                    t.spec.y = Some(y);
                    t.sources.x = Some(Provenance::Derived);
                    t.sources.y = Some(Provenance::Derived);
                }
                let parts = if known && t.spec.x.is_some() && t.spec.y.is_some() && !blocked {
                    let parts = build_on(library, shape, &t.spec, overrides, &scratch)?;
                    for p in &parts {
                        scratch.add(p.kind, Some(p.color), p.cells());
                    }
                    Some(parts)
                } else {
                    blocked = true;
                    None
                };
                out.push(Located::Recall {
                    shape: shape.clone(),
                    known,
                    target: t,
                    parts,
                });
            }
            Entry::Name(shape) => out.push(Located::Name(shape.clone())),
        }
    }
    Ok(out)
}

/// Locates a single spec against the board: relative labels and relations
/// become coordinates and a missing height comes from gravity.
pub fn locate(spec: &PartialPlacementSpec, grid: &GridState) -> Result<PartialPlacementSpec, LocateError> {
    let mut t = TracedSpec::from_utterance(spec.clone());
    locate_part(&mut t, &Scratch::new(grid), false)?;
    Ok(t.spec)
}
