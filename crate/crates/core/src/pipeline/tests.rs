use proptest::prelude::*;

use super::*;
use crate::grammar::{generate_instruction, RelativePosition, TemplateId};
use crate::grid::{Color, GridState, PartKind};
use crate::memory::shapes_equivalent;

fn spec(kind: Option<PartKind>, color: Option<Color>, x: Option<u8>, y: Option<u8>) -> PartialPlacementSpec {
    PartialPlacementSpec {
        kind,
        color,
        x,
        y,
        ..Default::default()
    }
}

fn placed(outcome: &TurnOutcome) -> usize {
    outcome.program().map(|p| p.len()).unwrap_or(0)
}

fn sample_c15(s: &mut Session) {
    let out = s.submit("Can you place a blue screw at row 4 column 5 height 1");
    assert_eq!(placed(&out), 1, "{out:?}");
    let out = s.submit("Place a red screw next to the blue screw, and put a red screw on top.");
    assert_eq!(placed(&out), 2, "{out:?}");
}

#[test]
fn locate_examples() {
    let g = GridState::new()
        .place(PartKind::Screw, Color::Blue, Cell::new(5, 4, 1).unwrap())
        .unwrap();
    let parsed = parse_instruction("Place a red screw next to the blue screw.").unwrap();
    let s = locate(parsed[0].as_spec().unwrap(), &g).unwrap();
    assert_eq!((s.x, s.y, s.z), (Some(6), Some(4), Some(1)));

    let s = locate(&spec(Some(PartKind::Nut), None, Some(5), Some(4)), &GridState::new()).unwrap();
    assert_eq!(s.z, Some(1));

    let mut mid = spec(Some(PartKind::Gasket), Some(Color::Purple), None, None);
    mid.relative = Some(RelativePosition::Middle);
    let s = locate(&mid, &GridState::new()).unwrap();
    assert_eq!((s.x, s.y, s.z), (Some(8), Some(8), Some(1)));

    // Unresolvable coordinates stay empty.
    let s = locate(&spec(Some(PartKind::Nut), None, Some(5), None), &GridState::new()).unwrap();
    assert_eq!((s.y, s.z), (None, None));

    let parsed = parse_instruction("Put a yellow washer on top of the green bolt.").unwrap();
    assert!(matches!(
        locate(parsed[0].as_spec().unwrap(), &g),
        Err(LocateError::AmbiguousAnchor(_))
    ));
}

#[test]
fn relation_offsets_respect_bridge_width() {
    let g = GridState::new()
        .place(PartKind::Nut, Color::Red, Cell::new(5, 5, 1).unwrap())
        .unwrap();
    let cases = [
        ("Place a blue horizontal bridge to the left of it.", (3, 5)),
        ("Place a blue nut to the left of it.", (4, 5)),
        ("Place a blue vertical bridge behind it.", (5, 3)),
        ("Place a blue nut in front of it.", (5, 6)),
        ("Place a blue nut to the right of it.", (6, 5)),
    ];
    for (text, (x, y)) in cases {
        let parsed = parse_instruction(text).unwrap();
        let s = locate(parsed[0].as_spec().unwrap(), &g).unwrap();
        assert_eq!((s.x, s.y, s.z), (Some(x), Some(y), Some(1)), "{text}");
    }
    let parsed = parse_instruction("Place a blue nut on top of it.").unwrap();
    let s = locate(parsed[0].as_spec().unwrap(), &g).unwrap();
    assert_eq!((s.x, s.y, s.z), (Some(5), Some(5), Some(2)));
}

#[test]
fn next_clarification_examples() {
    let q = next_clarification(&[spec(None, Some(Color::Blue), Some(3), Some(3))]).unwrap();
    assert_eq!(q.text, "Which part should I place at column 3, row 3?");
    assert_eq!(q.field, Field::Kind);
    let full = spec(Some(PartKind::Nut), Some(Color::Red), Some(1), Some(2));
    assert_eq!(next_clarification(std::slice::from_ref(&full)), None);
    let second = spec(Some(PartKind::Bolt), None, Some(1), Some(2));
    let q = next_clarification(&[full.clone(), second]).unwrap();
    assert_eq!((q.target, q.field), (1, Field::Color));
    assert_eq!(q.text, "What color should the bolt be?");
    let q = next_clarification(&[spec(Some(PartKind::Bolt), Some(Color::Red), None, Some(2))]).unwrap();
    assert_eq!(q.text, "Which column should the red bolt go in?");
}

#[test]
fn merge_answer_examples() {
    let specs = vec![spec(Some(PartKind::Nut), None, None, Some(2))];
    let (mut state, q) = ask_first(&specs, 1);
    let q = q.unwrap();
    assert_eq!(q.field, Field::Color);
    assert_eq!(state.pending, [(0, Field::Color), (0, Field::X)]);
    let merged = merge_answer(&mut state, q.id, "red", &specs).unwrap();
    assert_eq!(merged[0].color, Some(Color::Red));
    assert_eq!(state.pending, [(0, Field::X)]);

    state.asked.insert(2, (0, Field::X));
    let merged = merge_answer(&mut state, 2, "the 7th column", &merged).unwrap();
    assert_eq!(merged[0], spec(Some(PartKind::Nut), Some(Color::Red), Some(7), Some(2)));

    let specs = vec![spec(None, Some(Color::Red), Some(1), Some(1))];
    let (mut state, q) = ask_first(&specs, 5);
    assert!(matches!(
        merge_answer(&mut state, q.unwrap().id, "purple", &specs),
        Err(ClarifyError::UnusableAnswer { field: Field::Kind, .. })
    ));
    assert_eq!(
        merge_answer(&mut state, 99, "red", &specs),
        Err(ClarifyError::UnknownQuestion(99))
    );
}

#[test]
fn fully_specified_turn_executes() {
    let mut s = Session::deterministic();
    let out = s.process_turn("Place a blue screw at the 5th column, 4th row.").unwrap();
    let TurnOutcome::Execute { program } = &out else { panic!("{out:?}") };
    assert_eq!(
        program.to_json(),
        r#"[{"action":"place","part":"screw","color":"blue","x":5,"y":4,"z":1}]"#
    );
    assert_eq!(s.grid().len(), 1);
    assert!(s.traces()[0].questions.is_empty());
    assert_eq!(s.dialogue().len(), 2);
    assert_eq!(s.dialogue()[1].text, "Place a blue screw at row 4 column 5 height 1");
}

#[test]
fn missing_color_is_asked_then_filled() {
    let mut s = Session::deterministic();
    let out = s.process_turn("Place a nut at the 2nd column, 2nd row.").unwrap();
    let TurnOutcome::Clarify { question, question_id, field } = &out else { panic!("{out:?}") };
    assert_eq!(question, "What color should the nut be?");
    assert_eq!(*field, Field::Color);
    assert!(s.grid().is_empty());
    assert_eq!(s.process_turn("Place a red nut."), Err(PipelineError::SessionBusy));
    let out = s.answer(Some(*question_id), "green").unwrap();
    assert_eq!(placed(&out), 1);
    let part = s.grid().parts().next().unwrap();
    assert_eq!((part.color, part.anchor), (Color::Green, Cell::new(2, 2, 1).unwrap()));
    let trace = &s.traces()[0];
    assert_eq!(trace.parsed[0].color, None);
    assert_eq!(trace.executed[0].sources.color, Some(Provenance::Answer));
    assert_eq!(trace.executed[0].sources.z, Some(Provenance::Gravity));
    assert_eq!(s.answer(None, "red"), Err(PipelineError::NoPendingQuestion));
}

#[test]
fn unusable_answers_are_bounded() {
    let mut s = Session::deterministic();
    let out = s.process_turn("Place a red one at the 3rd column, 3rd row.").unwrap();
    let TurnOutcome::Clarify { question_id, .. } = out else { panic!() };
    for _ in 0..MAX_REASKS {
        let again = s.answer(None, "purple").unwrap();
        let TurnOutcome::Clarify { question, question_id: id, .. } = again else { panic!() };
        assert_eq!(id, question_id);
        assert!(question.ends_with("Which part should I place at column 3, row 3?"));
    }
    assert!(matches!(s.answer(None, "purple").unwrap(), TurnOutcome::Error { .. }));
    assert!(!s.is_busy());
    assert!(s.grid().is_empty());
    assert!(matches!(
        s.answer(Some(question_id), "nut"),
        Err(PipelineError::NoPendingQuestion)
    ));
}

#[test]
fn unparseable_text_asks_to_rephrase() {
    let mut s = Session::deterministic();
    let out = s.process_turn("sing me a song").unwrap();
    assert!(matches!(out, TurnOutcome::Clarify { field: Field::Rephrase, .. }));
    let out = s.answer(None, "Place a red nut at the 1st column, 1st row.").unwrap();
    assert_eq!(placed(&out), 1);
}

#[test]
fn errors_leave_the_grid_alone() {
    let mut s = Session::deterministic();
    s.submit("Place a red nut at the 1st column, 1st row.");
    let before = s.snapshot();
    let out = s.submit("Place a blue nut at the 2nd column, 2nd row and a red nut at the 2nd column, 2nd row, height 1.");
    assert!(matches!(out, TurnOutcome::Error { .. }), "{out:?}");
    assert_eq!(s.snapshot(), before);
    let out = s.submit("Put a yellow washer on top of the green bolt.");
    assert!(matches!(out, TurnOutcome::Error { .. }));
    assert_eq!(s.snapshot(), before);
    let out = s.submit("Place a blue nut to the right of it.");
    assert_eq!(placed(&out), 1);
}

#[test]
fn relations_wait_for_earlier_answers() {
    let mut s = Session::deterministic();
    let out = s.submit("Place a nut at the 4th column, 4th row, and put a red screw on top.");
    assert!(matches!(out, TurnOutcome::Clarify { field: Field::Color, .. }));
    let out = s.submit("blue");
    let TurnOutcome::Execute { program } = out else { panic!("{out:?}") };
    assert_eq!(
        program.to_json(),
        concat!(
            r#"[{"action":"place","part":"nut","color":"blue","x":4,"y":4,"z":1},"#,
            r#"{"action":"place","part":"screw","color":"red","x":4,"y":4,"z":2}]"#
        )
    );
}

#[test]
fn sample_dialogue_names_and_recalls() {
    let mut s = Session::deterministic();
    sample_c15(&mut s);
    let out = s.submit("This is what I call a C15");
    assert_eq!(
        out,
        TurnOutcome::Stored {
            shape: "C15".into(),
            version: 1,
            program: ActionProgram { actions: vec![], origin: 3 }
        }
    );
    let original: Vec<_> = s.grid().parts().cloned().collect();
    let out = s.submit("Now make me another C15 at the eighth row and ninth column");
    assert_eq!(placed(&out), 3);
    let copy: Vec<_> = s.grid().parts().skip(3).cloned().collect();
    assert_eq!(copy[0].anchor, Cell::new(9, 8, 1).unwrap());
    assert!(shapes_equivalent(&original, &copy, true));
    let trace = s.traces().last().unwrap();
    assert!(trace.executed.iter().all(|t| t.sources.kind == Some(Provenance::Memory)));
}

#[test]
fn unknown_shapes_are_asked_about() {
    let mut s = Session::deterministic();
    let out = s.submit("Make me another Z99 at the 3rd column, 3rd row.");
    let TurnOutcome::Clarify { question, field, .. } = out else { panic!() };
    assert_eq!(field, Field::Shape);
    assert!(question.contains("Z99"));
    assert!(s.submit("the C15").is_clarify());
}

#[test]
fn recall_stacks_over_existing_parts() {
    let mut s = Session::deterministic();
    s.submit("Build a tower of two red nuts at the 1st column, 1st row.");
    s.submit("This is what I call a Pair.");
    let out = s.submit("Make me another Pair at the 1st column, 1st row.");
    assert_eq!(placed(&out), 2);
    let z: Vec<u8> = s.grid().parts().map(|p| p.anchor.z).collect();
    assert_eq!(z, [1, 2, 3, 4]);
    let out = s.submit("Make me another Pair at the 5th column, 5th row in green twice as big.");
    assert!(placed(&out) > 2, "{out:?}");
    assert!(s.grid().parts().skip(4).all(|p| p.color == Color::Green));
}

#[test]
fn naming_nothing_is_an_error() {
    let mut s = Session::deterministic();
    assert!(matches!(s.submit("This is what I call a Blank."), TurnOutcome::Error { .. }));
    s.submit("Place a red nut at the 1st column, 1st row.");
    let out = s.submit("This is a Dot shape.");
    assert!(matches!(out, TurnOutcome::Stored { .. }), "{out:?}");
    assert!(matches!(s.submit("This is a Dot shape."), TurnOutcome::Error { .. }));
}

#[test]
fn replay_reproduces_the_board() {
    let mut s = Session::deterministic();
    sample_c15(&mut s);
    s.submit("Place a nut at the 2nd column, 2nd row.");
    s.submit("green");
    s.submit("This is what I call a C15");
    s.submit("Now make me another C15 at the eighth row and ninth column");
    let r = Session::replay(s.backend().clone(), ShapeLibrary::new().shared(), s.dialogue());
    assert_eq!(r.snapshot(), s.snapshot());
    assert_eq!(r.dialogue(), s.dialogue());
}

use crate::memory::ShapeLibrary;

fn arb_turn() -> impl Strategy<Value = String> {
    use crate::grammar::tests::strategies;
    prop_oneof![
        4 => strategies::full_spec().prop_map(|s| generate_instruction(&s, &TemplateId::Absolute).unwrap_or_else(|_| "Place a red nut.".into())),
        1 => strategies::color().prop_map(|c| c.to_string()),
        1 => strategies::kind().prop_map(|k| format!("a {}", k.phrase())),
        1 => (1u8..=16).prop_map(|n| format!("the {} column", crate::grammar::ordinal(n))),
        1 => (1u8..=16).prop_map(|n| format!("row {n}")),
        1 => Just("Place a nut.".to_string()),
        1 => Just("Put a red screw on top.".to_string()),
        1 => Just("This is what I call a Thing.".to_string()),
        1 => (1u8..=14, 1u8..=14).prop_map(|(x, y)| format!("Make me another Thing at the {}th column, {}th row.", x.max(4), y.max(4))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replay_is_deterministic(turns in prop::collection::vec(arb_turn(), 1..25)) {
        let mut s = Session::deterministic();
        for t in &turns {
            s.submit(t);
            s.grid().validate().unwrap();
        }
        let r = Session::replay(s.backend().clone(), ShapeLibrary::new().shared(), s.dialogue());
        prop_assert_eq!(r.snapshot(), s.snapshot());
    }

    #[test]
    fn questions_never_exceed_missing_fields(turns in prop::collection::vec(arb_turn(), 1..25)) {
        let mut s = Session::deterministic();
        for t in &turns {
            s.submit(t);
        }
        for trace in s.traces() {
            let distinct: std::collections::BTreeSet<u32> = trace.questions.iter().map(|q| q.id).collect();
            let missing: usize = trace.parsed.iter().map(|p| missing_fields(p).len()).sum();
            if trace.questions.iter().all(|q| q.field != Field::Rephrase && q.field != Field::Shape) {
                prop_assert!(distinct.len() <= missing, "{trace:?}");
            }
            for t in &trace.executed {
                prop_assert!(t.check_sources().is_ok());
            }
        }
    }
}
