//! Random boards and actions for property tests and benchmarks.

use rand::Rng;

use crate::grid::{Action, Cell, Color, GridState, PartKind, GRID_SIZE};

pub fn random_kind<R: Rng>(rng: &mut R, bridges: bool) -> PartKind {
    loop {
        let k = PartKind::ALL[rng.random_range(0..PartKind::ALL.len())];
        if bridges || !k.is_bridge() {
            return k;
        }
    }
}

pub fn random_color<R: Rng>(rng: &mut R) -> Color {
    Color::ALL[rng.random_range(0..Color::ALL.len())]
}

/// Drops up to `parts` random parts into the `region`×`region` corner of the
/// board, each at the lowest height it fits. Every step is a valid place.
pub fn random_structure<R: Rng>(rng: &mut R, parts: usize, region: u8, bridges: bool) -> GridState {
    let region = region.clamp(1, GRID_SIZE);
    let mut grid = GridState::new();
    for _ in 0..parts * 20 {
        if grid.len() >= parts {
            break;
        }
        let kind = random_kind(rng, bridges);
        let x = rng.random_range(1..=region);
        let y = rng.random_range(1..=region);
        let Some(z) = grid.drop_height(kind, x, y) else { continue };
        if let Ok(next) = grid.place(kind, random_color(rng), Cell { x, y, z }) {
            grid = next;
        }
    }
    grid
}

/// A place or remove that may or may not be valid on `grid`.
pub fn random_action<R: Rng>(rng: &mut R, grid: &GridState) -> Action {
    if !grid.is_empty() && rng.random_bool(0.3) {
        let cells: Vec<&Cell> = grid.occupancy().keys().collect();
        let c = cells[rng.random_range(0..cells.len())];
        return Action::Remove { x: c.x, y: c.y, z: c.z };
    }
    let kind = random_kind(rng, true);
    let x = rng.random_range(1..=GRID_SIZE);
    let y = rng.random_range(1..=GRID_SIZE);
    let z = match grid.drop_height(kind, x, y) {
        Some(z) if rng.random_bool(0.8) => z,
        _ => rng.random_range(1..=4),
    };
    Action::Place {
        part: kind,
        color: random_color(rng),
        x,
        y,
        z,
        x2: (kind == PartKind::HorizontalBridge).then_some(x + 1),
        y2: (kind == PartKind::VerticalBridge).then_some(y + 1),
    }
}
