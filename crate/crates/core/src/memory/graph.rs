//! Structures as coordinate-free adjacency graphs.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{scale_shape, MemoryError, PlannedPart};
use crate::grammar::Overrides;
use crate::grid::{Cell, Color, PartKind, PlacedPart};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
    #[serde(rename = "+z")]
    PlusZ,
    #[serde(rename = "-z")]
    MinusZ,
}

impl Direction {
    /// Also the expansion order used when regenerating coordinates.
    pub const ALL: [Direction; 6] = [
        Direction::PlusX,
        Direction::MinusX,
        Direction::PlusY,
        Direction::MinusY,
        Direction::PlusZ,
        Direction::MinusZ,
    ];

    pub fn delta(self) -> (i32, i32, i32) {
        match self {
            Direction::PlusX => (1, 0, 0),
            Direction::MinusX => (-1, 0, 0),
            Direction::PlusY => (0, 1, 0),
            Direction::MinusY => (0, -1, 0),
            Direction::PlusZ => (0, 0, 1),
            Direction::MinusZ => (0, 0, -1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::PlusX => Direction::MinusX,
            Direction::MinusX => Direction::PlusX,
            Direction::PlusY => Direction::MinusY,
            Direction::MinusY => Direction::PlusY,
            Direction::PlusZ => Direction::MinusZ,
            Direction::MinusZ => Direction::PlusZ,
        }
    }

    /// Direction from `a` to a unit-adjacent `b`.
    pub fn between(a: Cell, b: Cell) -> Option<Direction> {
        let d = (
            b.x as i32 - a.x as i32,
            b.y as i32 - a.y as i32,
            b.z as i32 - a.z as i32,
        );
        Direction::ALL.into_iter().find(|dir| dir.delta() == d)
    }
}

fn is_zero(v: &u8) -> bool {
    *v == 0
}

/// `node` sits in direction `dir`; its cell `to_cell` touches this part's
/// cell `from_cell` (both 0 except for bridges).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub node: usize,
    pub dir: Direction,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub from_cell: u8,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub to_cell: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub kind: PartKind,
    pub color: Color,
    pub neighbors: Vec<Edge>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub nodes: BTreeMap<usize, Node>,
}

/// Offset of each component's first node from component 0's first node.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentOffsets(pub Vec<(i32, i32, i32)>);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeGraph {
    #[serde(default)]
    pub name: String,
    pub components: Vec<Component>,
    pub firsts: Vec<usize>,
    pub offsets: ComponentOffsets,
}

/// Which attributes a re-application substitutes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbstractionFlags {
    pub color: bool,
    pub part: bool,
    pub size: bool,
}

impl AbstractionFlags {
    pub fn from_overrides(ov: &Overrides) -> AbstractionFlags {
        AbstractionFlags {
            color: ov.color.is_some(),
            part: ov.part.is_some(),
            size: ov.size.is_some(),
        }
    }
}

type Pos = (i32, i32, i32);

fn add(a: Pos, b: Pos) -> Pos {
    (a.0 + b.0, a.1 + b.1, a.2 + b.2)
}

fn sub(a: Pos, b: Pos) -> Pos {
    (a.0 - b.0, a.1 - b.1, a.2 - b.2)
}

fn pos(c: Cell) -> Pos {
    (c.x as i32, c.y as i32, c.z as i32)
}

/// Builds the graph of `structure`. Node ids follow placement (id) order,
/// and components are numbered by their earliest part.
pub fn to_graph(structure: &[PlacedPart]) -> Result<ShapeGraph, MemoryError> {
    if structure.is_empty() {
        return Err(MemoryError::EmptyStructure);
    }
    let mut parts: Vec<&PlacedPart> = structure.iter().collect();
    parts.sort_by_key(|p| p.id);

    let mut owner: HashMap<Cell, (usize, u8)> = HashMap::new();
    for (i, p) in parts.iter().enumerate() {
        for (ci, c) in p.cells.iter().enumerate() {
            owner.insert(*c, (i, ci as u8));
        }
    }

    // one edge per touching pair, the first contact found from the lower id
    let mut neighbors: Vec<Vec<Edge>> = vec![Vec::new(); parts.len()];
    for (i, p) in parts.iter().enumerate() {
        for (ci, c) in p.cells.iter().enumerate() {
            for dir in Direction::ALL {
                let (dx, dy, dz) = dir.delta();
                let Some(&(j, cj)) = c.offset(dx, dy, dz).and_then(|n| owner.get(&n)) else {
                    continue;
                };
                if j <= i || neighbors[i].iter().any(|e| e.node == j) {
                    continue;
                }
                neighbors[i].push(Edge {
                    node: j,
                    dir,
                    from_cell: ci as u8,
                    to_cell: cj,
                });
                neighbors[j].push(Edge {
                    node: i,
                    dir: dir.opposite(),
                    from_cell: cj,
                    to_cell: ci as u8,
                });
            }
        }
    }

    let mut component_of = vec![usize::MAX; parts.len()];
    let mut components = Vec::new();
    let mut firsts = Vec::new();
    for start in 0..parts.len() {
        if component_of[start] != usize::MAX {
            continue;
        }
        let k = components.len();
        let mut comp = Component::default();
        let mut queue = VecDeque::from([start]);
        component_of[start] = k;
        while let Some(n) = queue.pop_front() {
            for e in &neighbors[n] {
                if component_of[e.node] == usize::MAX {
                    component_of[e.node] = k;
                    queue.push_back(e.node);
                }
            }
            comp.nodes.insert(
                n,
                Node {
                    kind: parts[n].kind,
                    color: parts[n].color,
                    neighbors: neighbors[n].clone(),
                },
            );
        }
        components.push(comp);
        firsts.push(start);
    }

    let first_cells: Vec<Cell> = firsts.iter().map(|&f| parts[f].anchor).collect();
    let mut graph = ShapeGraph {
        name: String::new(),
        components,
        firsts,
        offsets: ComponentOffsets::default(),
    };
    graph.offsets = component_offsets(&graph, &first_cells);
    Ok(graph)
}

/// `firsts[i] - firsts[0]` for every component.
pub fn component_offsets(graph: &ShapeGraph, firsts: &[Cell]) -> ComponentOffsets {
    let Some(&origin) = firsts.first() else {
        return ComponentOffsets::default();
    };
    ComponentOffsets(
        firsts
            .iter()
            .take(graph.components.len())
            .map(|&c| sub(pos(c), pos(origin)))
            .collect(),
    )
}

impl ShapeGraph {
    pub fn named(mut self, name: impl Into<String>) -> ShapeGraph {
        self.name = name.into();
        self
    }

    pub fn node_count(&self) -> usize {
        self.components.iter().map(|c| c.nodes.len()).sum()
    }

    fn node(&self, id: usize) -> Option<&Node> {
        self.components.iter().find_map(|c| c.nodes.get(&id))
    }

    /// Structural checks: symmetric unit edges, connected components, one
    /// first node and one offset per component.
    pub fn validate(&self) -> Result<(), String> {
        if self.firsts.len() != self.components.len() || self.offsets.0.len() != self.components.len() {
            return Err("firsts/offsets do not match the component count".into());
        }
        if self.offsets.0.first().is_some_and(|o| *o != (0, 0, 0)) {
            return Err("offset of component 0 must be zero".into());
        }
        for (k, comp) in self.components.iter().enumerate() {
            if !comp.nodes.contains_key(&self.firsts[k]) {
                return Err(format!("first node of component {k} is not in it"));
            }
            for (&id, node) in &comp.nodes {
                for e in &node.neighbors {
                    let Some(other) = comp.nodes.get(&e.node) else {
                        return Err(format!("edge {id}->{} leaves component {k}", e.node));
                    };
                    let back = Edge {
                        node: id,
                        dir: e.dir.opposite(),
                        from_cell: e.to_cell,
                        to_cell: e.from_cell,
                    };
                    if !other.neighbors.contains(&back) {
                        return Err(format!("edge {id}->{} has no mirror", e.node));
                    }
                }
            }
            let mut seen = vec![self.firsts[k]];
            let mut i = 0;
            while i < seen.len() {
                for e in &comp.nodes[&seen[i]].neighbors {
                    if !seen.contains(&e.node) {
                        seen.push(e.node);
                    }
                }
                i += 1;
            }
            if seen.len() != comp.nodes.len() {
                return Err(format!("component {k} is not connected"));
            }
        }
        Ok(())
    }

    /// Anchors of every node when component 0's first node sits at `start`,
    /// in breadth-first order per component.
    fn regenerate(&self, start: Pos) -> Result<Vec<(PartKind, Color, Pos)>, MemoryError> {
        let mut out = Vec::with_capacity(self.node_count());
        for (k, comp) in self.components.iter().enumerate() {
            let root = self.firsts[k];
            let offset = self.offsets.0.get(k).copied().unwrap_or_default();
            let mut anchors: BTreeMap<usize, Pos> = BTreeMap::from([(root, add(start, offset))]);
            let mut queue = VecDeque::from([root]);
            while let Some(n) = queue.pop_front() {
                let node = comp.nodes.get(&n).ok_or_else(|| MemoryError::Format(format!("missing node {n}")))?;
                let here = anchors[&n];
                out.push((node.kind, node.color, here));
                let mut edges = node.neighbors.clone();
                edges.sort_by_key(|e| (e.dir, e.node));
                for e in edges {
                    if anchors.contains_key(&e.node) {
                        continue;
                    }
                    let other = self
                        .node(e.node)
                        .ok_or_else(|| MemoryError::Format(format!("missing node {}", e.node)))?;
                    let from = node.kind.cell_offsets().get(e.from_cell as usize).copied().unwrap_or_default();
                    let to = other.kind.cell_offsets().get(e.to_cell as usize).copied().unwrap_or_default();
                    let touching = add(add(here, from), e.dir.delta());
                    anchors.insert(e.node, sub(touching, to));
                    queue.push_back(e.node);
                }
            }
        }
        Ok(out)
    }
}

/// The anchor of the earliest part: where [`apply_at`] must start to
/// reproduce the structure in place.
pub fn reference(structure: &[PlacedPart]) -> Option<Cell> {
    structure.iter().min_by_key(|p| p.id).map(|p| p.anchor)
}

fn to_cell(kind: PartKind, p: Pos) -> Result<Cell, MemoryError> {
    let out = || MemoryError::OutOfBounds { x: p.0, y: p.1, z: p.2 };
    let anchor = Cell::from_i32(p.0, p.1, p.2).ok_or_else(out)?;
    for &(dx, dy, dz) in kind.cell_offsets() {
        anchor.offset(dx, dy, dz).ok_or_else(|| MemoryError::OutOfBounds {
            x: p.0 + dx,
            y: p.1 + dy,
            z: p.2 + dz,
        })?;
    }
    Ok(anchor)
}

/// Regenerates a stored structure with component 0's first part at `start`.
///
/// Color and part overrides are substituted first, then a size override
/// rescales the result about its minimum corner. Bridges keep their kind
/// under a part override since their footprint differs. The output is
/// ordered by height so every part follows whatever supports it.
pub fn apply_at(
    graph: &ShapeGraph,
    start: Cell,
    flags: AbstractionFlags,
    overrides: &Overrides,
) -> Result<Vec<PlannedPart>, MemoryError> {
    if flags != AbstractionFlags::from_overrides(overrides) {
        return Err(MemoryError::FlagMismatch { flags, overrides: overrides.clone() });
    }
    if let Some(k) = overrides.part.filter(|k| k.is_bridge()) {
        return Err(MemoryError::InvalidOverride(format!(
            "cannot rebuild a shape out of {}s",
            k.phrase()
        )));
    }
    let mut parts = Vec::new();
    for (kind, color, p) in graph.regenerate(pos(start))? {
        let kind = match overrides.part {
            Some(k) if !kind.is_bridge() => k,
            _ => kind,
        };
        let color = overrides.color.unwrap_or(color);
        parts.push(PlannedPart {
            kind,
            color,
            anchor: to_cell(kind, p)?,
        });
    }
    if let Some(size) = overrides.size {
        let (lo, hi) = bounds(&parts);
        let target = (
            size.apply(hi.0 - lo.0 + 1),
            size.apply(hi.1 - lo.1 + 1),
            size.apply(hi.2 - lo.2 + 1),
        );
        parts = scale_shape(&parts, target)?;
    }
    parts.sort_by_key(|p| p.anchor.z);
    Ok(parts)
}

/// Inclusive bounding box over every occupied cell.
pub(crate) fn bounds(parts: &[PlannedPart]) -> ((u8, u8, u8), (u8, u8, u8)) {
    let mut lo = (u8::MAX, u8::MAX, u8::MAX);
    let mut hi = (0, 0, 0);
    for p in parts {
        for c in p.cells() {
            lo = (lo.0.min(c.x), lo.1.min(c.y), lo.2.min(c.z));
            hi = (hi.0.max(c.x), hi.1.max(c.y), hi.2.max(c.z));
        }
    }
    (lo, hi)
}

/// True iff one translation maps `a` onto `b` part for part (kind, and
/// color when `compare_color`).
pub fn shapes_equivalent(a: &[PlacedPart], b: &[PlacedPart], compare_color: bool) -> bool {
    fn normalize(s: &[PlacedPart], compare_color: bool) -> Vec<(Pos, PartKind, Option<Color>)> {
        let min = s
            .iter()
            .map(|p| pos(p.anchor))
            .fold((i32::MAX, i32::MAX, i32::MAX), |m, p| (m.0.min(p.0), m.1.min(p.1), m.2.min(p.2)));
        let mut v: Vec<_> = s
            .iter()
            .map(|p| (sub(pos(p.anchor), min), p.kind, compare_color.then_some(p.color)))
            .collect();
        v.sort();
        v
    }
    a.len() == b.len() && normalize(a, compare_color) == normalize(b, compare_color)
}
