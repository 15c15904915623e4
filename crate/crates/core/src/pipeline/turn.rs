use std::sync::Arc;

use crate::executor::{compile, run, ActionProgram};
use crate::gateway::{DeterministicBackend, SharedBackend};
use crate::grid::{Action, GridState, PartId, PlacedPart};
use crate::memory::{to_graph, MemoryError, ShapeGraph, ShapeLibrary, SharedShapeLibrary};

use super::clarify::{fill, missing_fields, question_text, recall_question, rephrase_text, ClarificationState, Field, Question};
use super::locate::{locate_all, Located};
use super::{parse_with_backend, DialogueTurn, Entry, ParseFailure, PipelineError, Role, TracedSpec, TurnOutcome, TurnTrace};
use crate::grammar::ParsedItem;

/// Unusable answers tolerated per question before the turn is dropped.
pub const MAX_REASKS: u8 = 3;

enum Waiting {
    Fill(Vec<Entry>),
    Rephrase,
}

struct Pending {
    waiting: Waiting,
    question: Question,
    reasks: u8,
    state: ClarificationState,
    trace: TurnTrace,
}

/// One Architect's conversation with the Builder.
pub struct Session {
    grid: GridState,
    memory: SharedShapeLibrary,
    backend: SharedBackend,
    dialogue: Vec<DialogueTurn>,
    pending: Option<Pending>,
    /// First part id of the structure a Name command would capture.
    structure_start: PartId,
    questions: u32,
    turns: u64,
    traces: Vec<TurnTrace>,
}

fn describe(action: &Action) -> String {
    match action {
        Action::Place { part, color, x, y, z, .. } => {
            format!("Place a {color} {} at row {y} column {x} height {z}", part.phrase())
        }
        Action::Remove { x, y, z } => format!("Remove the part at row {y} column {x} height {z}"),
    }
}

/// What the Builder says back for an outcome.
pub(crate) fn outcome_text(outcome: &TurnOutcome) -> String {
    let lines = |p: &ActionProgram| p.actions.iter().map(describe).collect::<Vec<_>>().join("\n");
    match outcome {
        TurnOutcome::Clarify { question, .. } => question.clone(),
        TurnOutcome::Execute { program } if program.is_empty() => "Nothing to place.".into(),
        TurnOutcome::Execute { program } => lines(program),
        TurnOutcome::Stored { shape, program, .. } if program.is_empty() => format!("Stored the {shape}."),
        TurnOutcome::Stored { shape, program, .. } => format!("{}\nStored the {shape}.", lines(program)),
        TurnOutcome::Error { reason } => format!("Sorry, {reason}."),
    }
}

fn specs_of(items: &[ParsedItem]) -> Vec<crate::grammar::PartialPlacementSpec> {
    items.iter().filter_map(|i| i.as_spec().cloned()).collect()
}

/// The first field still missing after locating, with its question.
fn first_gap(located: &[Located]) -> Option<(usize, Field, String)> {
    all_gaps(located).into_iter().next()
}

fn all_gaps(located: &[Located]) -> Vec<(usize, Field, String)> {
    let mut out = Vec::new();
    for (i, l) in located.iter().enumerate() {
        match l {
            Located::Part(t) => {
                for f in missing_fields(&t.spec) {
                    out.push((i, f, question_text(&t.spec, f)));
                }
            }
            Located::Recall {
                shape, known, target, ..
            } => {
                if !known {
                    out.push((i, Field::Shape, recall_question(shape, Field::Shape)));
                }
                if target.spec.relative.is_none() {
                    for (f, v) in [(Field::X, target.spec.x), (Field::Y, target.spec.y)] {
                        if v.is_none() {
                            out.push((i, f, recall_question(shape, f)));
                        }
                    }
                }
            }
            Located::Name(_) => {}
        }
    }
    out
}

/// Reads a shape name out of an answer like "the C15" or "C15.".
fn shape_answer(answer: &str) -> String {
    let t = answer.trim().trim_end_matches(['.', '!', '?']).trim();
    let lower = t.to_lowercase();
    for article in ["the ", "a ", "an "] {
        if lower.starts_with(article) {
            return t[article.len()..].trim().to_string();
        }
    }
    t.to_string()
}

impl Session {
    pub fn new(backend: SharedBackend, memory: SharedShapeLibrary) -> Session {
        Session {
            grid: GridState::new(),
            memory,
            backend,
            dialogue: Vec::new(),
            pending: None,
            structure_start: PartId(0),
            questions: 0,
            turns: 0,
            traces: Vec::new(),
        }
    }

    /// Grammar-backed session with its own empty shape library.
    pub fn deterministic() -> Session {
        Session::new(Arc::new(DeterministicBackend), ShapeLibrary::new().shared())
    }

    /// Rebuilds a session by feeding the Architect's lines of `log` back in
    /// order.
    pub fn replay(backend: SharedBackend, memory: SharedShapeLibrary, log: &[DialogueTurn]) -> Session {
        let mut s = Session::new(backend, memory);
        for turn in log.iter().filter(|t| t.role == Role::Architect) {
            s.submit(&turn.text);
        }
        s
    }

    pub fn grid(&self) -> &GridState {
        &self.grid
    }

    pub fn memory(&self) -> &SharedShapeLibrary {
        &self.memory
    }

    pub fn backend(&self) -> &SharedBackend {
        &self.backend
    }

    pub fn dialogue(&self) -> &[DialogueTurn] {
        &self.dialogue
    }

    pub fn pending_question(&self) -> Option<&Question> {
        self.pending.as_ref().map(|p| &p.question)
    }

    pub fn is_busy(&self) -> bool {
        self.pending.is_some()
    }

    pub fn traces(&self) -> &[TurnTrace] {
        &self.traces
    }

    pub fn snapshot(&self) -> String {
        self.grid.snapshot()
    }

    /// Starts a new instruction. Fails while a question is open.
    pub fn process_turn(&mut self, text: &str) -> Result<TurnOutcome, PipelineError> {
        if self.pending.is_some() {
            return Err(PipelineError::SessionBusy);
        }
        self.log(Role::Architect, text, None);
        self.turns += 1;
        let trace = TurnTrace {
            turn: self.turns,
            text: text.to_string(),
            ..Default::default()
        };
        let outcome = self.begin(text, ClarificationState::default(), trace);
        Ok(self.respond(outcome))
    }

    /// Answers the open question. `id`, when given, must name it.
    pub fn answer(&mut self, id: Option<u32>, text: &str) -> Result<TurnOutcome, PipelineError> {
        let Some(mut p) = self.pending.take() else {
            return Err(PipelineError::NoPendingQuestion);
        };
        if let Some(id) = id.filter(|&id| id != p.question.id) {
            self.pending = Some(p);
            return Err(super::ClarifyError::UnknownQuestion(id).into());
        }
        self.log(Role::Architect, text, None);
        p.trace.answers.push(text.to_string());
        p.state.answers.insert(p.question.id, text.to_string());
        let outcome = match p.waiting {
            Waiting::Rephrase => match parse_with_backend(self.backend.as_ref(), text) {
                Err(ParseFailure::Unparseable) => {
                    p.waiting = Waiting::Rephrase;
                    self.reask(p)
                }
                _ => {
                    p.trace.text = text.to_string();
                    self.begin(text, p.state, p.trace)
                }
            },
            Waiting::Fill(mut entries) => match self.merge(&mut entries, &p.question, text) {
                Ok(()) => self.advance(entries, p.state, p.trace),
                Err(_) => {
                    p.waiting = Waiting::Fill(entries);
                    self.reask(p)
                }
            },
        };
        Ok(self.respond(outcome))
    }

    /// Answers the open question if there is one, otherwise starts a new
    /// instruction.
    pub fn submit(&mut self, text: &str) -> TurnOutcome {
        let result = if self.pending.is_some() {
            self.answer(None, text)
        } else {
            self.process_turn(text)
        };
        result.expect("submit never conflicts with the open question")
    }

    fn log(&mut self, role: Role, text: &str, outcome: Option<TurnOutcome>) {
        self.dialogue.push(DialogueTurn {
            role,
            text: text.to_string(),
            outcome,
        });
    }

    fn respond(&mut self, outcome: TurnOutcome) -> TurnOutcome {
        let text = outcome_text(&outcome);
        self.log(Role::System, &text, Some(outcome.clone()));
        outcome
    }

    fn finish(&mut self, mut trace: TurnTrace, outcome: TurnOutcome) -> TurnOutcome {
        self.pending = None;
        trace.outcome = Some(outcome.clone());
        self.traces.push(trace);
        outcome
    }

    fn fail(&mut self, trace: TurnTrace, reason: impl Into<String>) -> TurnOutcome {
        let reason = reason.into();
        log::debug!("turn failed: {reason}");
        self.finish(trace, TurnOutcome::Error { reason })
    }

    fn begin(&mut self, text: &str, state: ClarificationState, mut trace: TurnTrace) -> TurnOutcome {
        match parse_with_backend(self.backend.as_ref(), text) {
            Err(ParseFailure::Backend(e)) => self.fail(trace, format!("the parser agent failed ({e})")),
            Err(ParseFailure::Unparseable) => self.ask(Waiting::Rephrase, 0, Field::Rephrase, rephrase_text(), state, trace),
            Ok(items) => {
                trace.parsed = specs_of(&items);
                let entries = items.into_iter().map(Entry::from_item).collect();
                self.advance(entries, state, trace)
            }
        }
    }

    fn advance(&mut self, entries: Vec<Entry>, mut state: ClarificationState, trace: TurnTrace) -> TurnOutcome {
        let located = {
            let lib = self.memory.read().unwrap_or_else(|e| e.into_inner());
            locate_all(&entries, &self.grid, &lib)
        };
        let located = match located {
            Ok(l) => l,
            Err(e) => return self.fail(trace, e.to_string()),
        };
        state.pending = all_gaps(&located).into_iter().map(|(i, f, _)| (i, f)).collect();
        match first_gap(&located) {
            Some((target, field, text)) => self.ask(Waiting::Fill(entries), target, field, text, state, trace),
            None => self.execute(located, trace),
        }
    }

    fn ask(
        &mut self,
        waiting: Waiting,
        target: usize,
        field: Field,
        text: String,
        mut state: ClarificationState,
        mut trace: TurnTrace,
    ) -> TurnOutcome {
        self.questions += 1;
        let question = Question {
            id: self.questions,
            target,
            field,
            text,
        };
        state.asked.insert(question.id, (target, field));
        trace.questions.push(question.clone());
        let outcome = TurnOutcome::Clarify {
            question: question.text.clone(),
            question_id: question.id,
            field,
        };
        self.pending = Some(Pending {
            waiting,
            question,
            reasks: 0,
            state,
            trace,
        });
        outcome
    }

    fn reask(&mut self, mut p: Pending) -> TurnOutcome {
        p.reasks += 1;
        if p.reasks > MAX_REASKS {
            let reason = format!("I still don't have a usable {}, so I dropped that instruction", p.question.field);
            return self.fail(p.trace, reason);
        }
        let outcome = TurnOutcome::Clarify {
            question: format!("Sorry, I did not get that. {}", p.question.text),
            question_id: p.question.id,
            field: p.question.field,
        };
        self.pending = Some(p);
        outcome
    }

    fn merge(&self, entries: &mut [Entry], q: &Question, answer: &str) -> Result<(), super::ClarifyError> {
        let unusable = || super::ClarifyError::UnusableAnswer {
            field: q.field,
            answer: answer.to_string(),
        };
        match entries.get_mut(q.target).ok_or_else(unusable)? {
            Entry::Part(t) => fill(t, q.field, answer),
            Entry::Recall { shape, target, .. } => match q.field {
                Field::Shape => {
                    let name = shape_answer(answer);
                    let lib = self.memory.read().unwrap_or_else(|e| e.into_inner());
                    if name.is_empty() || !lib.contains(&name) {
                        return Err(unusable());
                    }
                    *shape = name;
                    Ok(())
                }
                f => fill(target, f, answer),
            },
            Entry::Name(_) => Err(unusable()),
        }
    }

    fn execute(&mut self, located: Vec<Located>, mut trace: TurnTrace) -> TurnOutcome {
        let mut scratch = self.grid.clone();
        let mut start = self.structure_start;
        let mut actions = Vec::new();
        let mut stored: Vec<(String, ShapeGraph)> = Vec::new();
        let mut segment: Vec<TracedSpec> = Vec::new();
        let origin = self.turns;

        let mut flush = |segment: &mut Vec<TracedSpec>, scratch: &mut GridState, trace: &mut TurnTrace| -> Result<(), String> {
            if segment.is_empty() {
                return Ok(());
            }
            for t in segment.iter() {
                t.check_sources()
                    .map_err(|field| format!("internal error: {field} has no source"))?;
            }
            let specs: Vec<_> = segment.iter().map(|t| t.spec.clone()).collect();
            let program = compile(&specs, origin).map_err(|e| e.to_string())?;
            let (next, log) = run(&program, scratch);
            if let Some(err) = log.error() {
                return Err(format!("I could not build that: {err}"));
            }
            *scratch = next;
            actions.extend(program.actions);
            trace.executed.append(segment);
            Ok(())
        };

        for l in located {
            let step = match l {
                Located::Part(t) => {
                    segment.push(t);
                    Ok(())
                }
                Located::Recall { parts: Some(parts), .. } => {
                    segment.extend(parts.iter().map(|p| TracedSpec::from_memory(p.to_spec())));
                    Ok(())
                }
                Located::Recall { shape, .. } => Err(format!("the {shape} could not be placed")),
                Located::Name(shape) => flush(&mut segment, &mut scratch, &mut trace).and_then(|()| {
                    let parts: Vec<PlacedPart> = scratch.parts().filter(|p| p.id >= start).cloned().collect();
                    let graph = to_graph(&parts).map_err(|e| match e {
                        MemoryError::EmptyStructure => format!("nothing has been built since the last shape, so there is no {shape} to store"),
                        other => other.to_string(),
                    })?;
                    if shape.trim().is_empty() {
                        return Err(MemoryError::EmptyName.to_string());
                    }
                    stored.push((shape.clone(), graph.named(shape)));
                    start = scratch.next_id();
                    Ok(())
                }),
            };
            if let Err(reason) = step {
                return self.fail(trace, reason);
            }
        }
        if let Err(reason) = flush(&mut segment, &mut scratch, &mut trace) {
            return self.fail(trace, reason);
        }

        self.grid = scratch;
        self.structure_start = start;
        let program = ActionProgram { actions, origin };
        let outcome = match stored.last().map(|(n, _)| n.clone()) {
            None => TurnOutcome::Execute { program },
            Some(shape) => {
                let mut lib = self.memory.write().unwrap_or_else(|e| e.into_inner());
                let mut version = 0;
                for (name, graph) in stored {
                    version = lib.store(&name, graph).expect("names were checked above");
                }
                TurnOutcome::Stored { shape, version, program }
            }
        };
        self.finish(trace, outcome)
    }
}
