//! Drives fresh sessions through each case and reduces the results.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;
use std::time::Instant;

use super::metrics::{function_reuse_metrics, hallucination_rate, FieldAccuracy, HallucinationCounts, ReuseMetrics, Tally};
use super::report::{ClarificationMetrics, MetricsReport, ShapeScore, ShapeVerdict, PUBLISHED_TASK3};
use super::{Gold, GoldPart, Omission, TaskCase, TaskId};
use crate::gateway::SharedBackend;
use crate::grammar::{ordinal, PartialPlacementSpec};
use crate::grid::PlacedPart;
use crate::memory::{abstract_workflow, apply_workflow, shapes_equivalent, ShapeLibrary, WorkflowCall, WorkflowLibrary};
use crate::pipeline::{Field, Question, Session, TurnOutcome};

/// Questions answered per instruction before the harness gives up.
const ANSWER_LIMIT: usize = 32;

/// What an Architect who knows the gold would say.
pub fn oracle_answer(question: &Question, truth: &[GoldPart]) -> Option<String> {
    let t = truth.get(question.target)?;
    Some(match question.field {
        Field::Kind => format!("a {}", t.kind.phrase()),
        Field::Color => t.color.to_string(),
        Field::X => format!("the {} column", ordinal(t.x)),
        Field::Y => format!("the {} row", ordinal(t.y)),
        Field::Shape | Field::Rephrase => return None,
    })
}

fn fresh_session(backend: &SharedBackend) -> Session {
    Session::new(backend.clone(), ShapeLibrary::new().shared())
}

/// Sends one instruction and answers questions until the turn closes. An
/// answer the oracle cannot give is sent empty, which runs the re-ask
/// budget down to an error.
fn run_turn(session: &mut Session, text: &str, truth: &[GoldPart]) -> TurnOutcome {
    let mut outcome = session.submit(text);
    for _ in 0..ANSWER_LIMIT {
        let Some(q) = session.pending_question().cloned() else { break };
        let answer = oracle_answer(&q, truth).unwrap_or_default();
        outcome = session
            .answer(Some(q.id), &answer)
            .unwrap_or_else(|e| TurnOutcome::Error { reason: e.to_string() });
    }
    outcome
}

fn gold_of(p: &PlacedPart) -> GoldPart {
    GoldPart {
        kind: p.kind,
        color: p.color,
        x: p.anchor.x,
        y: p.anchor.y,
        z: p.anchor.z,
    }
}

fn spec_gold(s: &PartialPlacementSpec) -> Option<GoldPart> {
    Some(GoldPart {
        kind: s.kind?,
        color: s.color?,
        x: s.x?,
        y: s.y?,
        z: s.z?,
    })
}

struct SpecResult {
    parsed: Vec<PartialPlacementSpec>,
    asked: Vec<(usize, Field)>,
    executed: Vec<GoldPart>,
    error: Option<String>,
}

fn run_spec_case(backend: &SharedBackend, text: &str, truth: &[GoldPart]) -> SpecResult {
    let mut session = fresh_session(backend);
    let outcome = run_turn(&mut session, text, truth);
    let trace = session.traces().last().cloned().unwrap_or_default();
    let executed = match &outcome {
        TurnOutcome::Execute { .. } => trace.executed.iter().filter_map(|t| spec_gold(&t.spec)).collect(),
        _ => Vec::new(),
    };
    SpecResult {
        parsed: trace.parsed,
        asked: trace.questions.iter().map(|q| (q.target, q.field)).collect(),
        executed,
        error: match outcome {
            TurnOutcome::Error { reason } => Some(reason),
            TurnOutcome::Clarify { question, .. } => Some(format!("still asking: {question}")),
            _ => None,
        },
    }
}

fn score_parts(acc: &mut FieldAccuracy, executed: Option<&GoldPart>, truth: &GoldPart) {
    acc.part.add(executed.is_some_and(|e| e.kind == truth.kind));
    acc.color.add(executed.is_some_and(|e| e.color == truth.color));
    acc.coordinates.add(executed.is_some_and(|e| {
        let a: BTreeSet<_> = e.planned().cells().into_iter().collect();
        let b: BTreeSet<_> = truth.planned().cells().into_iter().collect();
        a == b
    }));
}

/// Maps `f` over `items` on a few threads, keeping order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
    if threads <= 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("eval worker panicked"))
            .collect()
    })
}

/// Runs every case of `task` against `backend`. Pipeline failures are
/// scored as wrong answers, never raised.
pub fn run_eval(task: TaskId, backend: SharedBackend, cases: &[TaskCase]) -> MetricsReport {
    let start = Instant::now();
    let cases: Vec<&TaskCase> = cases.iter().filter(|c| c.task == task).collect();
    let mut report = MetricsReport::new(task, backend.name(), cases.len());
    match task {
        TaskId::I | TaskId::Ii | TaskId::IvSingle | TaskId::IvTwo => spec_task(&mut report, &backend, &cases),
        TaskId::Iii => script_task(&mut report, &backend, &cases),
        TaskId::V => dialogue_task(&mut report, &backend, &cases),
        TaskId::Toolbench => workflow_task(&mut report, &cases),
    }
    report.runtime_ms = start.elapsed().as_millis() as u64;
    report
}

fn spec_task(report: &mut MetricsReport, backend: &SharedBackend, cases: &[&TaskCase]) {
    let results = par_map(cases, |case| match &case.gold {
        Gold::Specs { truth, .. } => Some(run_spec_case(backend, &case.turns.join(" "), truth)),
        _ => None,
    });
    let underspecified = matches!(report.task, TaskId::IvSingle | TaskId::IvTwo);
    let mut overall = FieldAccuracy::default();
    let mut by_part: Vec<FieldAccuracy> = Vec::new();
    let mut by_category: BTreeMap<String, Vec<FieldAccuracy>> = BTreeMap::new();
    let mut clar = ClarificationMetrics::default();
    for (case, result) in cases.iter().zip(results) {
        let (Gold::Specs { stated, truth }, Some(r)) = (&case.gold, result) else {
            report.failures.push(format!("{}: not a placement case", case.id));
            continue;
        };
        if by_part.len() < truth.len() {
            by_part.resize(truth.len(), FieldAccuracy::default());
        }
        let group = case
            .meta
            .category
            .clone()
            .or_else(|| case.meta.template.clone())
            .unwrap_or_else(|| "all".into());
        let group = group.split(':').next().unwrap_or_default().to_string();
        let cat = by_category.entry(group).or_default();
        if cat.len() < truth.len() {
            cat.resize(truth.len(), FieldAccuracy::default());
        }
        for (i, t) in truth.iter().enumerate() {
            let e = r.executed.get(i);
            score_parts(&mut overall, e, t);
            score_parts(&mut by_part[i], e, t);
            score_parts(&mut cat[i], e, t);
        }
        if let Some(err) = &r.error {
            report.failures.push(format!("{}: {err}", case.id));
        }
        if underspecified {
            clarification(&mut clar, &case.meta.omitted, stated, truth, &r);
        }
    }
    report.fields = Some(overall);
    report.by_part = by_part;
    report.by_category = by_category;
    if underspecified {
        report.clarification = Some(clar);
    }
}

fn clarification(
    m: &mut ClarificationMetrics,
    omitted: &[Omission],
    stated: &[PartialPlacementSpec],
    truth: &[GoldPart],
    r: &SpecResult,
) {
    let asked_any = !r.asked.is_empty();
    m.detection.add(asked_any);
    for o in omitted {
        m.cqs_asked.add(r.asked.contains(&(o.part, o.field)));
    }
    if asked_any {
        m.correct_after_cq.add(r.executed.as_slice() == truth);
    }
    m.questions += r.asked.len();
    let h: HallucinationCounts = hallucination_rate(&r.parsed, stated);
    m.hallucination.merge(&h);
}

fn part_set(session: &Session) -> BTreeSet<GoldPart> {
    session.grid().parts().map(gold_of).collect()
}

fn script_task(report: &mut MetricsReport, backend: &SharedBackend, cases: &[&TaskCase]) {
    let results = par_map(cases, |case| {
        let Gold::Script { shape, steps } = &case.gold else { return None };
        let mut session = fresh_session(backend);
        let mut expected = BTreeSet::new();
        let mut tally = Tally::default();
        let mut failures = Vec::new();
        for (i, (text, parts)) in case.turns.iter().zip(steps).enumerate() {
            expected.extend(parts.iter().copied());
            let outcome = run_turn(&mut session, text, &[]);
            // Naming adds nothing to the board and is not scored.
            if parts.is_empty() {
                continue;
            }
            let ok = part_set(&session) == expected;
            tally.add(ok);
            if !ok {
                let why = match outcome {
                    TurnOutcome::Error { reason } => reason,
                    _ => "board differs from gold".into(),
                };
                failures.push(format!("{} step {}: {why}", case.id, i + 1));
            }
        }
        Some((shape.clone(), tally, failures))
    });
    let mut overall = Tally::default();
    for (shape, tally, failures) in results.into_iter().flatten() {
        overall.correct += tally.correct;
        overall.total += tally.total;
        report.failures.extend(failures);
        let published = PUBLISHED_TASK3.iter().find(|(n, _)| *n == shape).map(|(_, v)| *v);
        report.shapes.push(ShapeScore {
            shape,
            instructions: tally,
            published,
        });
    }
    report.overall = Some(overall);
}

fn dialogue_task(report: &mut MetricsReport, backend: &SharedBackend, cases: &[&TaskCase]) {
    let results = par_map(cases, |case| {
        let Gold::Dialogue { shape, built, recalled } = &case.gold else { return None };
        let mut session = fresh_session(backend);
        let (recall_text, rest) = case.turns.split_last()?;
        let mut failures = Vec::new();
        for text in rest {
            if let TurnOutcome::Error { reason } = run_turn(&mut session, text, &[]) {
                failures.push(format!("{}: {text:?}: {reason}", case.id));
            }
        }
        let original: Vec<PlacedPart> = session.grid().parts().cloned().collect();
        if let TurnOutcome::Error { reason } = run_turn(&mut session, recall_text, &[]) {
            failures.push(format!("{}: recall: {reason}", case.id));
        }
        let ids: BTreeSet<_> = original.iter().map(|p| p.id).collect();
        let copy: Vec<PlacedPart> = session.grid().parts().filter(|p| !ids.contains(&p.id)).cloned().collect();
        let as_set = |ps: &[PlacedPart]| ps.iter().map(gold_of).collect::<BTreeSet<_>>();
        let matches_gold = as_set(&original) == built.iter().copied().collect()
            && as_set(&copy) == recalled.iter().copied().collect();
        Some((
            ShapeVerdict {
                shape: shape.clone(),
                parts: built.len(),
                equivalent: !original.is_empty() && shapes_equivalent(&original, &copy, true),
                matches_gold,
            },
            failures,
        ))
    });
    for (verdict, failures) in results.into_iter().flatten() {
        report.verdicts.push(verdict);
        report.failures.extend(failures);
    }
}

fn workflow_task(report: &mut MetricsReport, cases: &[&TaskCase]) {
    let mut library = WorkflowLibrary::new();
    let mut per_case = Vec::new();
    for case in cases {
        let Gold::Workflow { example, doc, queries, calls } = &case.gold else { continue };
        let gold: Vec<WorkflowCall> = calls.iter().filter_map(|c| c.parse().ok()).collect();
        let predicted: Vec<WorkflowCall> = match example.parse::<WorkflowCall>() {
            Ok(call) => match abstract_workflow(&call, doc) {
                Ok(template) => {
                    let name = template.name.clone();
                    library.store(template);
                    let template = library.get(&name).expect("just stored");
                    queries.iter().filter_map(|q| apply_workflow(template, q).ok()).collect()
                }
                Err(e) => {
                    report.failures.push(format!("{}: {e}", case.id));
                    Vec::new()
                }
            },
            Err(e) => {
                report.failures.push(format!("{}: {e}", case.id));
                Vec::new()
            }
        };
        per_case.push(function_reuse_metrics(&predicted, &gold));
    }
    report.reuse = Some(ReuseMetrics::pooled(&per_case));
}
