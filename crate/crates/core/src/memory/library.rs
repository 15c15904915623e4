use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::{MemoryError, ShapeGraph};

const FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredShape {
    pub version: u32,
    pub graph: ShapeGraph,
}

/// Named shapes. Keys are case-insensitive; storing an existing name
/// replaces it and bumps its version.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeLibrary {
    shapes: BTreeMap<String, StoredShape>,
}

/// Library handle shared between sessions: many readers, one writer.
pub type SharedShapeLibrary = Arc<RwLock<ShapeLibrary>>;

#[derive(Serialize, Deserialize)]
struct LibraryFile {
    format: u32,
    shapes: BTreeMap<String, StoredShape>,
}

fn key(name: &str) -> String {
    name.trim().to_lowercase()
}

impl ShapeLibrary {
    pub fn new() -> ShapeLibrary {
        ShapeLibrary::default()
    }

    /// Stores `graph` under `name` and returns the new version.
    pub fn store(&mut self, name: &str, graph: ShapeGraph) -> Result<u32, MemoryError> {
        let k = key(name);
        if k.is_empty() {
            return Err(MemoryError::EmptyName);
        }
        let graph = graph.named(name.trim());
        let version = self.shapes.get(&k).map_or(1, |s| s.version + 1);
        self.shapes.insert(k, StoredShape { version, graph });
        Ok(version)
    }

    pub fn retrieve(&self, name: &str) -> Result<&ShapeGraph, MemoryError> {
        self.get(name).map(|s| &s.graph)
    }

    pub fn get(&self, name: &str) -> Result<&StoredShape, MemoryError> {
        self.shapes
            .get(&key(name))
            .ok_or_else(|| MemoryError::UnknownShape(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.shapes.contains_key(&key(name))
    }

    /// Display names in key order.
    pub fn names(&self) -> Vec<String> {
        self.shapes.values().map(|s| s.graph.name.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &StoredShape> {
        self.shapes.values()
    }

    pub fn to_json(&self) -> String {
        let file = LibraryFile {
            format: FORMAT,
            shapes: self.shapes.clone(),
        };
        serde_json::to_string_pretty(&file).expect("library always serialises")
    }

    pub fn from_json(text: &str) -> Result<ShapeLibrary, MemoryError> {
        let file: LibraryFile = serde_json::from_str(text).map_err(|e| MemoryError::Format(e.to_string()))?;
        if file.format != FORMAT {
            return Err(MemoryError::Format(format!("unsupported format {}", file.format)));
        }
        let mut shapes = BTreeMap::new();
        for (name, shape) in file.shapes {
            shape
                .graph
                .validate()
                .map_err(|e| MemoryError::Format(format!("{name}: {e}")))?;
            shapes.insert(key(&name), shape);
        }
        Ok(ShapeLibrary { shapes })
    }

    pub fn save(&self, path: &Path) -> Result<(), MemoryError> {
        std::fs::write(path, self.to_json()).map_err(|e| MemoryError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<ShapeLibrary, MemoryError> {
        let text = std::fs::read_to_string(path).map_err(|e| MemoryError::Io(format!("{}: {e}", path.display())))?;
        ShapeLibrary::from_json(&text)
    }

    pub fn shared(self) -> SharedShapeLibrary {
        Arc::new(RwLock::new(self))
    }
}
