use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::*;
use crate::gateway::{AgentPrompt, CompletionBackend, DeterministicBackend, GatewayError, Message, SharedBackend};
use crate::grammar::{parse_instruction, ParsedItem};
use crate::memory::WorkflowCall;

fn det() -> SharedBackend {
    Arc::new(DeterministicBackend)
}

fn eval(task: TaskId) -> MetricsReport {
    let cases = generate_dataset(task, 7).unwrap();
    run_eval(task, det(), &cases)
}

fn spec_gold(case: &TaskCase) -> (&Vec<crate::grammar::PartialPlacementSpec>, &Vec<GoldPart>) {
    match &case.gold {
        Gold::Specs { stated, truth } => (stated, truth),
        other => panic!("not a spec case: {other:?}"),
    }
}

#[test]
fn task_sizes() {
    for (task, n) in [
        (TaskId::I, 20),
        (TaskId::Ii, 13),
        (TaskId::Iii, 10),
        (TaskId::IvSingle, 81),
        (TaskId::IvTwo, 202),
        (TaskId::V, 9),
        (TaskId::Toolbench, 100),
    ] {
        for seed in [0, 7, 99] {
            assert_eq!(generate_dataset(task, seed).unwrap().len(), n, "{task} seed {seed}");
        }
    }
}

#[test]
fn generation_is_a_function_of_the_seed() {
    for task in TaskId::ALL {
        let a = dataset_jsonl(&generate_dataset(task, 11).unwrap());
        let b = dataset_jsonl(&generate_dataset(task, 11).unwrap());
        assert_eq!(a, b, "{task}");
    }
    let a = dataset_jsonl(&generate_dataset(TaskId::I, 1).unwrap());
    let b = dataset_jsonl(&generate_dataset(TaskId::I, 2).unwrap());
    assert_ne!(a, b);
}

#[test]
fn simple_sentences_are_fully_specified_and_split_by_template() {
    let cases = generate_dataset(TaskId::I, 7).unwrap();
    let mut templates = HashMap::new();
    for c in &cases {
        let (stated, _) = spec_gold(c);
        assert!(stated.iter().all(|s| s.is_fully_specified()), "{}", c.turns[0]);
        *templates.entry(c.meta.template.clone().unwrap()).or_insert(0) += 1;
    }
    assert_eq!(templates.get("absolute"), Some(&10));
    assert_eq!(templates.get("relative"), Some(&10));
}

#[test]
fn generated_text_parses_back_to_the_stated_gold() {
    for task in [TaskId::I, TaskId::Ii, TaskId::IvSingle, TaskId::IvTwo] {
        for c in generate_dataset(task, 3).unwrap() {
            let (stated, _) = spec_gold(&c);
            let parsed: Vec<_> = parse_instruction(&c.turns[0])
                .unwrap()
                .into_iter()
                .map(|i| match i {
                    ParsedItem::Place(s) => s,
                    other => panic!("{other:?}"),
                })
                .collect();
            assert_eq!(&parsed, stated, "{}", c.turns[0]);
        }
    }
}

#[test]
fn pair_categories() {
    let cases = generate_dataset(TaskId::Ii, 7).unwrap();
    let count = |cat: &str| cases.iter().filter(|c| c.meta.category.as_deref() == Some(cat)).count();
    assert_eq!((count("independent"), count("on-top"), count("adjacent")), (5, 4, 4));
}

#[test]
fn underspecified_cases_record_their_omissions() {
    use crate::pipeline::missing_fields;
    for task in [TaskId::IvSingle, TaskId::IvTwo] {
        for c in generate_dataset(task, 5).unwrap() {
            let (stated, _) = spec_gold(&c);
            let mut missing: Vec<Omission> = stated
                .iter()
                .enumerate()
                .flat_map(|(part, s)| missing_fields(s).into_iter().map(move |field| Omission { part, field }))
                .collect();
            let mut recorded = c.meta.omitted.clone();
            let key = |o: &Omission| (o.part, o.field);
            missing.sort_by_key(key);
            recorded.sort_by_key(key);
            assert!(!recorded.is_empty(), "{}", c.id);
            assert_eq!(missing, recorded, "{}", c.turns[0]);
        }
    }
}

#[test]
fn single_omissions_spread_evenly() {
    let cases = generate_dataset(TaskId::IvSingle, 0).unwrap();
    let mut by = HashMap::new();
    for c in &cases {
        *by.entry(c.meta.category.clone().unwrap()).or_insert(0) += 1;
    }
    let mut counts: Vec<i32> = by.values().copied().collect();
    counts.sort();
    assert_eq!(counts, vec![16, 16, 16, 16, 17]);
}

#[test]
fn pair_split_follows_the_published_counts() {
    let cases = generate_dataset(TaskId::IvTwo, 0).unwrap();
    let full = |c: &TaskCase, i: usize| spec_gold(c).0[i].is_fully_specified();
    let first_full = cases.iter().filter(|c| full(c, 0) && !full(c, 1)).count();
    let second_full = cases.iter().filter(|c| !full(c, 0) && full(c, 1)).count();
    let neither = cases.iter().filter(|c| !full(c, 0) && !full(c, 1)).count();
    assert_eq!((first_full, second_full, neither), (40, 73, 89));
}

#[test]
fn fixture_counts() {
    let parts = |c: &TaskCase| match &c.gold {
        Gold::Script { steps, .. } => (steps.iter().map(Vec::len).sum::<usize>(), steps.len()),
        Gold::Dialogue { built, .. } => (built.len(), c.turns.len() - 1),
        _ => unreachable!(),
    };
    let scripts: HashMap<String, (usize, usize)> = generate_dataset(TaskId::Iii, 0)
        .unwrap()
        .iter()
        .map(|c| (c.id.clone(), parts(c)))
        .collect();
    assert_eq!(scripts["iii-A"], (14, 6));
    assert_eq!(scripts["iii-G"], (17, 5));
    assert_eq!(scripts["iii-X"], (10, 2));
    assert_eq!(scripts["iii-Moroccan Bridge"].1, 8);
    let dialogues: HashMap<String, (usize, usize)> = generate_dataset(TaskId::V, 0)
        .unwrap()
        .iter()
        .map(|c| (c.id.clone(), parts(c)))
        .collect();
    assert_eq!(dialogues["v-Skull"], (62, 63));
    assert_eq!(dialogues["v-C15"], (7, 6));
    assert_eq!(dialogues["v-Square"], (16, 17));
    assert_eq!(dialogues["v-Triad"], (18, 17));
}

#[test]
fn missing_fixture_dir_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    for task in [TaskId::Iii, TaskId::V, TaskId::Toolbench] {
        match generate_dataset_in(task, 0, dir.path()) {
            Err(EvalError::FixtureMissing(p)) => assert!(p.ends_with(".json") || p.ends_with(".jsonl")),
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(generate_dataset_in(TaskId::I, 4, dir.path()).unwrap(), generate_dataset(TaskId::I, 4).unwrap());
}

#[test]
fn workflows_have_two_open_slots() {
    for c in generate_dataset(TaskId::Toolbench, 0).unwrap() {
        let Gold::Workflow { example, .. } = &c.gold else { panic!() };
        let call: WorkflowCall = example.parse().unwrap();
        assert!(call.args.iter().filter(|a| !a.is_bool()).count() >= 2, "{example}");
    }
}

#[test]
fn hallucination_counting() {
    use crate::grammar::PartialPlacementSpec as S;
    use crate::grid::Color;
    let null_color = S {
        kind: Some(crate::grid::PartKind::Nut),
        x: Some(1),
        y: Some(1),
        ..Default::default()
    };
    let gold = vec![null_color.clone(); 4];
    let h = hallucination_rate(&gold, &gold);
    assert_eq!(h.color.rate(), Some(0.0));
    assert_eq!(h.part.rate(), None);
    assert_eq!(h.coordinates.rate(), None);

    let mut pred = gold.clone();
    pred[2].color = Some(Color::Red);
    let h = hallucination_rate(&pred, &gold);
    assert_eq!(h.color.rate(), Some(0.25));
    assert_eq!(h.color.hallucinated + h.color.correct_null, 4);

    // A missing prediction invents nothing.
    let h = hallucination_rate(&[], &gold);
    assert_eq!(h.color.rate(), Some(0.0));
}

#[test]
fn reuse_set_arithmetic() {
    let c = |s: &str| -> WorkflowCall { s.parse().unwrap() };
    let gold = vec![c("f(1, 2)"), c("f(3, 4)")];
    let m = function_reuse_metrics(&gold, &gold);
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    let m = function_reuse_metrics(&[c("f(1, 2)"), c("f(9, 9)")], &gold);
    assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
    let m = function_reuse_metrics(&[], &gold);
    assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    // Arguments must match in full.
    let m = function_reuse_metrics(&[c("f(1, \"2\")")], &[c("f(1, 2)")]);
    assert_eq!(m.matched, 0);
}

#[test]
fn oracle_answers_parse_as_the_field() {
    use crate::grammar::{parse_color_answer, parse_coordinate_answer, parse_kind_answer, Axis};
    use crate::grid::{Color, PartKind};
    use crate::pipeline::{Field, Question};
    for kind in PartKind::ALL {
        for color in Color::ALL {
            for v in 1..=16 {
                let t = [GoldPart { kind, color, x: v, y: 17 - v, z: 1 }];
                let q = |field| Question { id: 0, target: 0, field, text: String::new() };
                assert_eq!(parse_kind_answer(&oracle_answer(&q(Field::Kind), &t).unwrap()), Some(kind));
                assert_eq!(parse_color_answer(&oracle_answer(&q(Field::Color), &t).unwrap()), Some(color));
                assert_eq!(parse_coordinate_answer(&oracle_answer(&q(Field::X), &t).unwrap(), Axis::Column), Some(v));
                assert_eq!(parse_coordinate_answer(&oracle_answer(&q(Field::Y), &t).unwrap(), Axis::Row), Some(17 - v));
            }
        }
    }
}

fn assert_passes(report: &MetricsReport) {
    for c in report.criteria() {
        assert!(c.passed, "{}: {} ({:?})", c.name, c.detail, report.failures);
    }
}

#[test]
fn deterministic_single_parts() {
    let r = eval(TaskId::I);
    assert_eq!(r.fields.unwrap().part, Tally { correct: 20, total: 20 });
    assert_passes(&r);
}

#[test]
fn deterministic_pairs() {
    let r = eval(TaskId::Ii);
    assert_eq!(r.by_part.len(), 2);
    assert_eq!(r.by_category.len(), 3);
    assert_passes(&r);
}

#[test]
fn deterministic_shape_scripts() {
    let r = eval(TaskId::Iii);
    assert_eq!(r.shapes.len(), 10);
    let overall = r.overall.unwrap();
    assert_eq!(overall.correct, overall.total, "{:?}", r.failures);
    assert_passes(&r);
}

#[test]
fn deterministic_underspecified() {
    for task in [TaskId::IvSingle, TaskId::IvTwo] {
        let r = eval(task);
        let c = r.clarification.clone().unwrap();
        assert_eq!(c.detection.total, r.cases);
        assert_eq!(c.correct_after_cq.total, r.cases);
        assert_passes(&r);
    }
}

#[test]
fn deterministic_dialogues() {
    let r = eval(TaskId::V);
    assert_eq!(r.verdicts.len(), 9);
    assert!(r.verdicts.iter().any(|v| v.shape == "Skull" && v.parts == 62));
    assert_passes(&r);
}

#[test]
fn workflow_reuse() {
    let r = eval(TaskId::Toolbench);
    assert_eq!(r.reuse.unwrap().gold, r.reuse.unwrap().matched);
    assert_passes(&r);
}

/// Keeps only the first plan the parser returns.
struct DropSecond(DeterministicBackend);

impl CompletionBackend for DropSecond {
    fn complete(&self, prompt: &AgentPrompt, messages: &[Message]) -> Result<String, GatewayError> {
        let out = self.0.complete(prompt, messages)?;
        let mut v: serde_json::Value = serde_json::from_str(&out).unwrap();
        if let Some(list) = v.get_mut("structures").and_then(|s| s.as_array_mut()) {
            list.truncate(1);
        }
        Ok(v.to_string())
    }

    fn name(&self) -> &str {
        "drop-second"
    }
}

#[test]
fn dropping_the_second_part_only_hurts_the_second_part() {
    let cases = generate_dataset(TaskId::Ii, 7).unwrap();
    let r = run_eval(TaskId::Ii, Arc::new(DropSecond(DeterministicBackend)), &cases);
    assert!(r.by_part[0].all_correct());
    assert_eq!(r.by_part[1].part.correct, 0);
    assert_eq!(r.by_part[1].coordinates.correct, 0);
    assert!(!r.passed());
}

/// Records every completion so a second run can replay them.
#[derive(Default)]
struct Recorder {
    inner: DeterministicBackend,
    seen: Mutex<HashMap<String, String>>,
}

fn key(prompt: &AgentPrompt, messages: &[Message]) -> String {
    format!("{:?}|{}", prompt.role, serde_json::to_string(messages).unwrap())
}

impl CompletionBackend for Recorder {
    fn complete(&self, prompt: &AgentPrompt, messages: &[Message]) -> Result<String, GatewayError> {
        let out = self.inner.complete(prompt, messages)?;
        self.seen.lock().unwrap().insert(key(prompt, messages), out.clone());
        Ok(out)
    }

    fn name(&self) -> &str {
        "replay"
    }
}

struct Replayer(HashMap<String, String>);

impl CompletionBackend for Replayer {
    fn complete(&self, prompt: &AgentPrompt, messages: &[Message]) -> Result<String, GatewayError> {
        self.0
            .get(&key(prompt, messages))
            .cloned()
            .ok_or_else(|| GatewayError::Transport("not recorded".into()))
    }

    fn name(&self) -> &str {
        "replay"
    }
}

#[test]
fn scoring_does_not_depend_on_the_backend_behind_the_outputs() {
    for task in [TaskId::Ii, TaskId::IvTwo, TaskId::V] {
        let cases = generate_dataset(task, 2).unwrap();
        let rec = Arc::new(Recorder::default());
        let a = run_eval(task, rec.clone(), &cases);
        let recorded = rec.seen.lock().unwrap().clone();
        let b = run_eval(task, Arc::new(Replayer(recorded)), &cases);
        assert_eq!(a.without_timing(), b.without_timing(), "{task}");
    }
}

#[test]
fn reports_write_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let r = eval(TaskId::I);
    let files = write_report(&r, dir.path()).unwrap();
    let json = std::fs::read_to_string(&files[0]).unwrap();
    let back: MetricsReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    let csv = std::fs::read_to_string(&files[1]).unwrap();
    assert!(csv.starts_with("metric,value\n"));
    assert!(csv.contains("coordinates,100.00"));
}

#[test]
fn task_names() {
    assert_eq!(TaskId::expand("iv").unwrap(), vec![TaskId::IvSingle, TaskId::IvTwo]);
    assert_eq!(TaskId::expand("toolbench").unwrap(), vec![TaskId::Toolbench]);
    assert!(TaskId::expand("vi").is_err());
    for t in TaskId::ALL {
        assert_eq!(serde_json::to_value(t).unwrap(), t.as_str());
    }
}
