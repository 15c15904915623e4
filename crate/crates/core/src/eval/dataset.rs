//! Seeded generators for the five construction tasks and the bundled
//! workflow fixtures.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CaseMeta, EvalError, Gold, GoldPart, Omission, TaskCase, TaskId};
use crate::grammar::{generate_instruction, AnchorRef, DependentRelation, PartialPlacementSpec, RelationKind, RelativePosition, TemplateId};
use crate::grid::{Color, PartKind, GRID_SIZE};
use crate::memory::SlotDoc;
use crate::pipeline::Field;
use crate::sample::{random_color, random_kind};

const TASK3: &str = include_str!("../../fixtures/task3_shapes.json");
const TASK5: &str = include_str!("../../fixtures/task5_dialogues.json");
const TOOLBENCH: &str = include_str!("../../fixtures/toolbench.jsonl");

pub const TASK3_FILE: &str = "task3_shapes.json";
pub const TASK5_FILE: &str = "task5_dialogues.json";
pub const TOOLBENCH_FILE: &str = "toolbench.jsonl";

/// Cases for one task, from the fixtures compiled into the crate.
pub fn generate_dataset(task: TaskId, seed: u64) -> Result<Vec<TaskCase>, EvalError> {
    Ok(match task {
        TaskId::I => single_parts(seed),
        TaskId::Ii => part_pairs(seed),
        TaskId::IvSingle => underspecified_single(seed),
        TaskId::IvTwo => underspecified_pairs(seed),
        TaskId::Iii => shape_scripts(TASK3, TASK3_FILE)?,
        TaskId::V => shape_dialogues(TASK5, TASK5_FILE)?,
        TaskId::Toolbench => workflows(TOOLBENCH, TOOLBENCH_FILE)?,
    })
}

/// Same as [`generate_dataset`] but reads fixture-backed tasks from `dir`.
pub fn generate_dataset_in(task: TaskId, seed: u64, dir: &Path) -> Result<Vec<TaskCase>, EvalError> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|_| EvalError::FixtureMissing(path.display().to_string()))
    };
    match task {
        TaskId::Iii => shape_scripts(&read(TASK3_FILE)?, TASK3_FILE),
        TaskId::V => shape_dialogues(&read(TASK5_FILE)?, TASK5_FILE),
        TaskId::Toolbench => workflows(&read(TOOLBENCH_FILE)?, TOOLBENCH_FILE),
        other => generate_dataset(other, seed),
    }
}

/// One case per line.
pub fn dataset_jsonl(cases: &[TaskCase]) -> String {
    cases
        .iter()
        .map(|c| serde_json::to_string(c).expect("cases serialize") + "\n")
        .collect()
}

fn rng_for(task: TaskId, seed: u64) -> ChaCha8Rng {
    let salt = match task {
        TaskId::I => 1,
        TaskId::Ii => 2,
        TaskId::Iii => 3,
        TaskId::IvSingle => 4,
        TaskId::IvTwo => 5,
        TaskId::V => 6,
        TaskId::Toolbench => 7,
    };
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

/// Where a part of `kind` lands when asked for column `x`, row `y`: bridges
/// that would hang off the far edge start one cell earlier.
fn clamp_anchor(kind: PartKind, x: u8, y: u8) -> (u8, u8) {
    match kind {
        PartKind::HorizontalBridge => (x.min(GRID_SIZE - 1), y),
        PartKind::VerticalBridge => (x, y.min(GRID_SIZE - 1)),
        _ => (x, y),
    }
}

fn footprint_xy(kind: PartKind, x: u8, y: u8) -> Vec<(u8, u8)> {
    match kind {
        PartKind::HorizontalBridge => vec![(x, y), (x + 1, y)],
        PartKind::VerticalBridge => vec![(x, y), (x, y + 1)],
        _ => vec![(x, y)],
    }
}

fn absolute_spec(kind: PartKind, color: Color, x: u8, y: u8) -> PartialPlacementSpec {
    PartialPlacementSpec {
        kind: Some(kind),
        color: Some(color),
        x: Some(x),
        y: Some(y),
        x2: (kind == PartKind::HorizontalBridge).then_some(x + 1),
        y2: (kind == PartKind::VerticalBridge).then_some(y + 1),
        ..Default::default()
    }
}

fn random_absolute(rng: &mut ChaCha8Rng, bridges: bool, lo: u8, hi: u8) -> (PartialPlacementSpec, GoldPart) {
    let kind = random_kind(rng, bridges);
    let color = random_color(rng);
    let (w, d) = kind.extent();
    let x = rng.random_range(lo..=hi.min(GRID_SIZE + 1 - w));
    let y = rng.random_range(lo..=hi.min(GRID_SIZE + 1 - d));
    (absolute_spec(kind, color, x, y), GoldPart { kind, color, x, y, z: 1 })
}

fn random_relative(rng: &mut ChaCha8Rng) -> (PartialPlacementSpec, GoldPart) {
    let kind = random_kind(rng, true);
    let color = random_color(rng);
    let pos = RelativePosition::ALL[rng.random_range(0..RelativePosition::ALL.len())];
    let (cx, cy) = pos.cell();
    let (x, y) = clamp_anchor(kind, cx, cy);
    let spec = PartialPlacementSpec {
        kind: Some(kind),
        color: Some(color),
        relative: Some(pos),
        ..Default::default()
    };
    (spec, GoldPart { kind, color, x, y, z: 1 })
}

fn sentence(spec: &PartialPlacementSpec, template: TemplateId) -> String {
    generate_instruction(spec, &template).expect("generated specs carry their template's fields")
}

fn spec_case(task: TaskId, id: String, text: String, stated: Vec<PartialPlacementSpec>, truth: Vec<GoldPart>, meta: CaseMeta) -> TaskCase {
    TaskCase {
        task,
        id,
        turns: vec![text],
        gold: Gold::Specs { stated, truth },
        meta,
    }
}

fn single_parts(seed: u64) -> Vec<TaskCase> {
    let mut rng = rng_for(TaskId::I, seed);
    (0..20)
        .map(|i| {
            let (template, (spec, truth)) = if i % 2 == 0 {
                (TemplateId::Absolute, random_absolute(&mut rng, true, 1, GRID_SIZE))
            } else {
                (TemplateId::Relative, random_relative(&mut rng))
            };
            spec_case(
                TaskId::I,
                format!("i-{i:02}"),
                sentence(&spec, template),
                vec![spec],
                vec![truth],
                CaseMeta {
                    template: Some(template_name(template)),
                    ..Default::default()
                },
            )
        })
        .collect()
}

fn template_name(t: TemplateId) -> String {
    serde_json::to_value(t).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

const ADJACENT: [RelationKind; 5] = [
    RelationKind::NextTo,
    RelationKind::RightOf,
    RelationKind::LeftOf,
    RelationKind::InFront,
    RelationKind::Behind,
];

/// Gold cell for a single-cell part placed against a single-cell anchor on
/// the ground.
fn related(anchor: &GoldPart, relation: RelationKind) -> (u8, u8, u8) {
    let GoldPart { x, y, z, .. } = *anchor;
    match relation {
        RelationKind::OnTop => (x, y, z + 1),
        RelationKind::NextTo | RelationKind::RightOf => (x + 1, y, 1),
        RelationKind::LeftOf => (x - 1, y, 1),
        RelationKind::InFront => (x, y + 1, 1),
        RelationKind::Behind => (x, y - 1, 1),
    }
}

fn dependent_spec(kind: PartKind, color: Color, relation: RelationKind, target: AnchorRef) -> PartialPlacementSpec {
    PartialPlacementSpec {
        kind: Some(kind),
        color: Some(color),
        relation: Some(DependentRelation { kind: relation, target }),
        ..Default::default()
    }
}

/// A second part independent of the first, or placed against it.
fn second_part(
    rng: &mut ChaCha8Rng,
    category: &str,
    first: &GoldPart,
    described: bool,
) -> (PartialPlacementSpec, GoldPart, TemplateId) {
    match category {
        "independent" => loop {
            let (spec, gold) = random_absolute(rng, true, 1, GRID_SIZE);
            let a: BTreeSet<_> = footprint_xy(first.kind, first.x, first.y).into_iter().collect();
            if footprint_xy(gold.kind, gold.x, gold.y).iter().all(|c| !a.contains(c)) {
                return (spec, gold, TemplateId::Absolute);
            }
        },
        _ => {
            let relation = if category == "on-top" {
                RelationKind::OnTop
            } else {
                ADJACENT[rng.random_range(0..ADJACENT.len())]
            };
            let kind = random_kind(rng, false);
            let color = random_color(rng);
            let target = if described {
                AnchorRef::Described {
                    color: Some(first.color),
                    kind: Some(first.kind),
                }
            } else {
                AnchorRef::Last
            };
            let (x, y, z) = related(first, relation);
            (
                dependent_spec(kind, color, relation, target),
                GoldPart { kind, color, x, y, z },
                TemplateId::Dependent,
            )
        }
    }
}

const PAIR_CATEGORIES: [(&str, usize); 3] = [("independent", 5), ("on-top", 4), ("adjacent", 4)];

fn part_pairs(seed: u64) -> Vec<TaskCase> {
    let mut rng = rng_for(TaskId::Ii, seed);
    let mut out = Vec::new();
    for (category, n) in PAIR_CATEGORIES {
        for i in 0..n {
            let bridges = category == "independent";
            let (s1, g1) = random_absolute(&mut rng, bridges, 2, GRID_SIZE - 1);
            let (s2, g2, t2) = second_part(&mut rng, category, &g1, i % 2 == 1);
            let text = format!("{} {}", sentence(&s1, TemplateId::Absolute), sentence(&s2, t2));
            out.push(spec_case(
                TaskId::Ii,
                format!("ii-{category}-{i}"),
                text,
                vec![s1, s2],
                vec![g1, g2],
                CaseMeta {
                    category: Some(category.to_string()),
                    ..Default::default()
                },
            ));
        }
    }
    out
}

/// What an underspecified part leaves out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Drop {
    Kind,
    Color,
    X,
    Y,
    Location,
}

const DROPS: [Drop; 5] = [Drop::Kind, Drop::Color, Drop::X, Drop::Y, Drop::Location];

impl Drop {
    fn label(self) -> &'static str {
        match self {
            Drop::Kind => "kind",
            Drop::Color => "color",
            Drop::X => "column",
            Drop::Y => "row",
            Drop::Location => "location",
        }
    }

    fn fields(self) -> Vec<Field> {
        match self {
            Drop::Kind => vec![Field::Kind],
            Drop::Color => vec![Field::Color],
            Drop::X => vec![Field::X],
            Drop::Y => vec![Field::Y],
            Drop::Location => vec![Field::X, Field::Y],
        }
    }

    fn apply(self, spec: &mut PartialPlacementSpec) {
        match self {
            Drop::Kind => spec.kind = None,
            Drop::Color => spec.color = None,
            Drop::X => {
                spec.x = None;
                spec.x2 = None;
            }
            Drop::Y => {
                spec.y = None;
                spec.y2 = None;
            }
            Drop::Location => {
                spec.x = None;
                spec.y = None;
                spec.x2 = None;
                spec.y2 = None;
                spec.relative = None;
                spec.relation = None;
            }
        }
    }

    /// Column or row alone cannot be dropped from a named position or a
    /// relation, only the whole location.
    fn fits(self, spec: &PartialPlacementSpec) -> bool {
        !matches!(self, Drop::X | Drop::Y) || (spec.relative.is_none() && spec.relation.is_none())
    }
}

fn omit(spec: &PartialPlacementSpec, drop: Drop, part: usize, omissions: &mut Vec<Omission>) -> PartialPlacementSpec {
    let mut s = spec.clone();
    drop.apply(&mut s);
    omissions.extend(drop.fields().into_iter().map(|field| Omission { part, field }));
    s
}

/// 81 single parts, one omission type each, spread evenly over the five
/// types; the first type takes the remainder.
fn underspecified_single(seed: u64) -> Vec<TaskCase> {
    let mut rng = rng_for(TaskId::IvSingle, seed);
    let mut drops: Vec<Drop> = (0..81).map(|i| DROPS[i % 5]).collect();
    drops.shuffle(&mut rng);
    drops
        .into_iter()
        .enumerate()
        .map(|(i, drop)| {
            let relative = matches!(drop, Drop::Kind | Drop::Color) && rng.random_bool(0.5);
            let (full, truth) = if relative {
                random_relative(&mut rng)
            } else {
                random_absolute(&mut rng, true, 1, GRID_SIZE)
            };
            let mut omitted = Vec::new();
            let stated = omit(&full, drop, 0, &mut omitted);
            spec_case(
                TaskId::IvSingle,
                format!("iv-single-{i:02}"),
                sentence(&stated, TemplateId::Underspecified),
                vec![stated],
                vec![truth],
                CaseMeta {
                    template: Some(if relative { "relative" } else { "absolute" }.into()),
                    category: Some(drop.label().into()),
                    omitted,
                },
            )
        })
        .collect()
}

/// Which parts of a pair are underspecified, with the published counts.
const PAIR_SPLIT: [(&str, usize, bool, bool); 3] = [
    ("second-missing", 40, false, true),
    ("first-missing", 73, true, false),
    ("both-missing", 89, true, true),
];

fn underspecified_pairs(seed: u64) -> Vec<TaskCase> {
    let mut rng = rng_for(TaskId::IvTwo, seed);
    let mut out = Vec::new();
    for (split, n, drop_first, drop_second) in PAIR_SPLIT {
        for i in 0..n {
            let category = ["independent", "on-top", "adjacent"][rng.random_range(0..3)];
            let (s1, g1) = random_absolute(&mut rng, category == "independent", 2, GRID_SIZE - 1);
            // Underspecified anchors are referred to as "it".
            let (s2, g2, _) = second_part(&mut rng, category, &g1, false);
            let mut omitted = Vec::new();
            let pick = |spec: &PartialPlacementSpec, rng: &mut ChaCha8Rng| loop {
                let d = DROPS[rng.random_range(0..DROPS.len())];
                if d.fits(spec) {
                    return d;
                }
            };
            let d1 = drop_first.then(|| pick(&s1, &mut rng));
            let d2 = drop_second.then(|| pick(&s2, &mut rng));
            let stated1 = match d1 {
                Some(d) => omit(&s1, d, 0, &mut omitted),
                None => s1.clone(),
            };
            let stated2 = match d2 {
                Some(d) => omit(&s2, d, 1, &mut omitted),
                None => s2.clone(),
            };
            let text = format!(
                "{} {}",
                sentence(&stated1, TemplateId::Underspecified),
                sentence(&stated2, TemplateId::Underspecified)
            );
            let labels: Vec<&str> = [d1, d2].iter().flatten().map(|d| d.label()).collect();
            out.push(spec_case(
                TaskId::IvTwo,
                format!("iv-two-{split}-{i:02}"),
                text,
                vec![stated1, stated2],
                vec![g1, g2],
                CaseMeta {
                    template: Some(category.into()),
                    category: Some(format!("{split}:{}", labels.join("+"))),
                    omitted,
                },
            ));
        }
    }
    out
}

#[derive(Deserialize)]
struct FixtureStep {
    text: String,
    #[serde(default)]
    parts: Vec<GoldPart>,
}

#[derive(Deserialize)]
struct ShapeFixture {
    name: String,
    steps: Vec<FixtureStep>,
}

#[derive(Deserialize)]
struct ShapeFile {
    shapes: Vec<ShapeFixture>,
}

fn bad_fixture(file: &str, e: impl std::fmt::Display) -> EvalError {
    EvalError::BadFixture(format!("{file}: {e}"))
}

fn shape_scripts(text: &str, file: &str) -> Result<Vec<TaskCase>, EvalError> {
    let f: ShapeFile = serde_json::from_str(text).map_err(|e| bad_fixture(file, e))?;
    Ok(f.shapes
        .into_iter()
        .map(|s| TaskCase {
            task: TaskId::Iii,
            id: format!("iii-{}", s.name),
            turns: s.steps.iter().map(|st| st.text.clone()).collect(),
            gold: Gold::Script {
                shape: s.name,
                steps: s.steps.into_iter().map(|st| st.parts).collect(),
            },
            meta: CaseMeta::default(),
        })
        .collect())
}

#[derive(Deserialize)]
struct DialogueFixture {
    name: String,
    steps: Vec<FixtureStep>,
    name_text: String,
    recall_text: String,
    recalled: Vec<GoldPart>,
    #[serde(default)]
    art: Vec<String>,
}

#[derive(Deserialize)]
struct DialogueFile {
    dialogues: Vec<DialogueFixture>,
}

fn shape_dialogues(text: &str, file: &str) -> Result<Vec<TaskCase>, EvalError> {
    let f: DialogueFile = serde_json::from_str(text).map_err(|e| bad_fixture(file, e))?;
    f.dialogues
        .into_iter()
        .map(|d| {
            let built: Vec<GoldPart> = d.steps.iter().flat_map(|s| s.parts.iter().copied()).collect();
            if !d.art.is_empty() {
                let cells = d.art.iter().map(|l| l.matches('X').count()).sum::<usize>();
                if cells != built.len() {
                    return Err(bad_fixture(file, format!("{}: art has {cells} cells, script {}", d.name, built.len())));
                }
            }
            let mut turns: Vec<String> = d.steps.iter().map(|s| s.text.clone()).collect();
            turns.push(d.name_text);
            turns.push(d.recall_text);
            Ok(TaskCase {
                task: TaskId::V,
                id: format!("v-{}", d.name),
                turns,
                gold: Gold::Dialogue {
                    shape: d.name,
                    built,
                    recalled: d.recalled,
                },
                meta: CaseMeta::default(),
            })
        })
        .collect()
}

#[derive(Deserialize, Serialize)]
struct WorkflowRow {
    id: String,
    example: String,
    doc: Vec<SlotDoc>,
    queries: Vec<BTreeMap<String, Value>>,
    gold: Vec<String>,
}

fn workflows(text: &str, file: &str) -> Result<Vec<TaskCase>, EvalError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let row: WorkflowRow = serde_json::from_str(line).map_err(|e| bad_fixture(file, format!("line {}: {e}", i + 1)))?;
            Ok(TaskCase {
                task: TaskId::Toolbench,
                id: row.id,
                turns: vec![row.example.clone()],
                gold: Gold::Workflow {
                    example: row.example,
                    doc: row.doc,
                    queries: row.queries,
                    calls: row.gold,
                },
                meta: CaseMeta::default(),
            })
        })
        .collect()
}
