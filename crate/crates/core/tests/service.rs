use std::sync::{Arc, Mutex};

use cobuild_core::session::{EventKind, ServiceConfig, ServiceError, SessionEvent, SessionManager};

fn persistent(dir: &std::path::Path) -> ServiceConfig {
    ServiceConfig {
        data_dir: Some(dir.to_path_buf()),
        ..Default::default()
    }
}

#[test]
fn updates_follow_their_instruction() {
    let manager = SessionManager::new(ServiceConfig::default()).unwrap();
    let seen: Arc<Mutex<Vec<SessionEvent>>> = Arc::default();
    let sink = seen.clone();
    manager.set_listener(Arc::new(move |e: &SessionEvent| sink.lock().unwrap().push(e.clone())));
    let id = manager.create_session().unwrap();
    manager.post_instruction(&id, "Place a washer at the 3rd column, 3rd row.").unwrap();
    manager.post_answer(&id, None, "green").unwrap();
    manager.post_instruction(&id, "Put a red nut on top of it.").unwrap();

    let seen = seen.lock().unwrap();
    assert_eq!(*seen, manager.events(&id, 0).unwrap());
    let seqs: Vec<u64> = seen.iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());
    let mut last_input = None;
    for (i, e) in seen.iter().enumerate() {
        match e.kind {
            EventKind::Instruction { .. } | EventKind::Answer { .. } => last_input = Some(i),
            EventKind::GridUpdate { .. } => assert!(last_input.is_some_and(|j| j < i)),
            _ => {}
        }
    }
    assert_eq!(seen.iter().filter(|e| matches!(e.kind, EventKind::GridUpdate { .. })).count(), 2);
}

#[test]
fn board_is_untouched_while_a_question_is_open() {
    let manager = SessionManager::new(ServiceConfig::default()).unwrap();
    let id = manager.create_session().unwrap();
    manager.post_instruction(&id, "Place a red nut at the 1st column, 1st row.").unwrap();
    let before = manager.snapshot(&id).unwrap();
    let out = manager
        .post_instruction(&id, "Place a nut at the 2nd column, 2nd row and a blue screw at the 4th column, 4th row.")
        .unwrap();
    assert!(out.is_clarify());
    let state = manager.get_state(&id).unwrap();
    assert!(state.pending.is_some());
    assert_eq!(state.parts.len(), 1);
    assert_eq!(manager.snapshot(&id).unwrap(), before);
    assert_eq!(manager.post_instruction(&id, "Place a red nut."), Err(ServiceError::SessionBusy));
}

#[test]
fn sessions_run_side_by_side() {
    let manager = Arc::new(SessionManager::new(ServiceConfig::default()).unwrap());
    let handles: Vec<_> = (1..=8u8)
        .map(|n| {
            let m = manager.clone();
            std::thread::spawn(move || {
                let id = m.create_session().unwrap();
                for row in 1..=n {
                    m.post_instruction(&id, &format!("Place a red nut at the 1st column, row {row}.")).unwrap();
                }
                (id, n as usize)
            })
        })
        .collect();
    let done: Vec<(String, usize)> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let mut ids: Vec<&String> = done.iter().map(|(id, _)| id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 8);
    for (id, n) in &done {
        assert_eq!(manager.get_state(id).unwrap().parts.len(), *n);
    }
}

#[test]
fn restart_recovers_every_session() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, snapshots) = {
        let manager = SessionManager::new(persistent(dir.path())).unwrap();
        let a = manager.create_session().unwrap();
        let b = manager.create_session().unwrap();
        manager.post_instruction(&a, "Build a tower of three blue nuts at the 2nd column, 2nd row.").unwrap();
        manager.post_instruction(&b, "Place a screw at the 5th column, 5th row.").unwrap();
        manager.post_answer(&b, None, "orange").unwrap();
        // A question left open when the service stops.
        manager.post_instruction(&b, "Place a nut at the 6th column, 6th row.").unwrap();
        (a.clone(), b.clone(), [manager.snapshot(&a).unwrap(), manager.snapshot(&b).unwrap()])
    };
    let manager = SessionManager::new(persistent(dir.path())).unwrap();
    let mut ids = manager.session_ids();
    ids.sort();
    let mut want = vec![a.clone(), b.clone()];
    want.sort();
    assert_eq!(ids, want);
    assert_eq!(manager.snapshot(&a).unwrap(), snapshots[0]);
    assert_eq!(manager.snapshot(&b).unwrap(), snapshots[1]);
    assert_eq!(manager.get_state(&a).unwrap().parts.len(), 3);
}
