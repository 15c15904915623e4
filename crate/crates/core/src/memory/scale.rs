use std::collections::HashMap;

use super::graph::bounds;
use super::{MemoryError, PlannedPart};
use crate::grid::{Cell, GRID_SIZE};

/// Nearest-neighbour source index for target index `t` when an axis of
/// `source` cells is resized to `target` cells.
pub fn scale_index(t: u32, source: u32, target: u32) -> u32 {
    t * source / target
}

/// Resizes a structure to a `target` bounding box (x, y, z extents), keeping
/// its minimum corner in place. Every target cell copies the part at its
/// nearest source cell. Bridges cannot be resampled cell by cell.
pub fn scale_shape(parts: &[PlannedPart], target: (u8, u8, u8)) -> Result<Vec<PlannedPart>, MemoryError> {
    if parts.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(b) = parts.iter().find(|p| p.kind.is_bridge()) {
        return Err(MemoryError::Unscalable(format!("{} spans two cells", b.kind.phrase())));
    }
    let (lo, hi) = bounds(parts);
    let source = (
        (hi.0 - lo.0 + 1) as u32,
        (hi.1 - lo.1 + 1) as u32,
        (hi.2 - lo.2 + 1) as u32,
    );
    let t = (target.0 as u32, target.1 as u32, target.2 as u32);
    let far = (
        lo.0 as i32 + t.0 as i32 - 1,
        lo.1 as i32 + t.1 as i32 - 1,
        lo.2 as i32 + t.2 as i32 - 1,
    );
    let limit = GRID_SIZE as i32;
    if t.0 == 0 || t.1 == 0 || t.2 == 0 || far.0 > limit || far.1 > limit || far.2 > limit {
        return Err(MemoryError::OutOfBounds {
            x: far.0,
            y: far.1,
            z: far.2,
        });
    }
    let by_cell: HashMap<(u32, u32, u32), &PlannedPart> = parts
        .iter()
        .map(|p| {
            let a = p.anchor;
            (((a.x - lo.0) as u32, (a.y - lo.1) as u32, (a.z - lo.2) as u32), p)
        })
        .collect();
    let mut out = Vec::new();
    for tz in 0..t.2 {
        for ty in 0..t.1 {
            for tx in 0..t.0 {
                let src = (
                    scale_index(tx, source.0, t.0),
                    scale_index(ty, source.1, t.1),
                    scale_index(tz, source.2, t.2),
                );
                if let Some(p) = by_cell.get(&src) {
                    let anchor = Cell::new(lo.0 + tx as u8, lo.1 + ty as u8, lo.2 + tz as u8)
                        .expect("checked against the board above");
                    out.push(PlannedPart {
                        kind: p.kind,
                        color: p.color,
                        anchor,
                    });
                }
            }
        }
    }
    Ok(out)
}
