//! Many sessions behind one handle: creation, turns, events, JSON-lines
//! logs under a data directory, and replay for recovery.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock, TryLockError};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::ActionProgram;
use crate::gateway::{build_backend, BackendConfig, SharedBackend};
use crate::grammar::{render_canonical, MemoryCommand, Overrides, ParsedItem, PartialPlacementSpec};
use crate::grid::{Color, PartKind, PlacedPart};
use crate::memory::{ShapeLibrary, SharedShapeLibrary};
use crate::pipeline::{DialogueTurn, Field, PipelineError, Question, Role, Session, TurnOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("no session {0}")]
    SessionNotFound(String),
    #[error("session is busy with another turn")]
    SessionBusy,
    #[error("no open question in this session")]
    NoPendingQuestion,
    #[error("question {0} is not the open question")]
    UnknownQuestion(u32),
    #[error("log line {0} is corrupt")]
    CorruptLog(usize),
    #[error("{0}")]
    Rejected(String),
    #[error("I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Io(e.to_string())
    }
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::SessionBusy => ServiceError::SessionBusy,
            PipelineError::NoPendingQuestion => ServiceError::NoPendingQuestion,
            PipelineError::Clarify(crate::pipeline::ClarifyError::UnknownQuestion(id)) => ServiceError::UnknownQuestion(id),
            PipelineError::Clarify(other) => ServiceError::Rejected(other.to_string()),
        }
    }
}

/// Service configuration; the server reads it from TOML.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub backend: BackendConfig,
    /// Shape library shared by every session and saved after each store.
    /// Without it each session starts with an empty library.
    pub shape_library: Option<PathBuf>,
    /// Where session logs live. Without it nothing is persisted.
    pub data_dir: Option<PathBuf>,
}

/// Something a subscriber should see, in turn order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventKind {
    Instruction { text: String },
    Answer { text: String },
    Question { question_id: u32, text: String, field: Field },
    GridUpdate { program: ActionProgram, parts: Vec<PlacedPart> },
    Stored { shape: String, version: u32 },
    Error { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session: String,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub created_at: u64,
    pub parts: Vec<PlacedPart>,
    pub dialogue: Vec<DialogueTurn>,
    pub shapes: Vec<String>,
    pub pending: Option<Question>,
}

/// Body of a shape application request.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApplyRequest {
    pub x: u8,
    pub y: u8,
    pub z: Option<u8>,
    pub color: Option<Color>,
    pub part: Option<PartKind>,
    /// Whole-number size multiplier, or 0 for half size.
    pub scale: Option<u8>,
}

impl ApplyRequest {
    /// The recall sentence this request stands for, so it goes through the
    /// dialogue log like anything the Architect types.
    pub fn instruction(&self, shape: &str) -> String {
        let size = self.scale.map(|s| match s {
            0 => crate::grammar::ScaleFactor::half(),
            n => crate::grammar::ScaleFactor::times(n),
        });
        render_canonical(&ParsedItem::Memory(MemoryCommand::Recall {
            shape: shape.to_string(),
            target: PartialPlacementSpec {
                x: Some(self.x),
                y: Some(self.y),
                z: self.z,
                ..Default::default()
            },
            overrides: Overrides {
                color: self.color,
                part: self.part,
                size: size.filter(|s| *s != crate::grammar::ScaleFactor::times(1)),
            },
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct SessionMeta {
    id: String,
    created_at: u64,
}

struct Live {
    meta: SessionMeta,
    session: Session,
    events: Vec<SessionEvent>,
    log: Option<File>,
}

pub type Listener = Arc<dyn Fn(&SessionEvent) + Send + Sync>;

pub struct SessionManager {
    config: ServiceConfig,
    backend: SharedBackend,
    shared_library: Option<SharedShapeLibrary>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Live>>>>,
    listener: RwLock<Option<Listener>>,
    ids: Mutex<ChaCha8Rng>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Parses a dialogue log, naming the first bad line (1-based).
pub fn read_log(text: &str) -> Result<Vec<DialogueTurn>, ServiceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|_| ServiceError::CorruptLog(i + 1)))
        .collect()
}

pub fn write_log(turns: &[DialogueTurn]) -> String {
    turns
        .iter()
        .map(|t| serde_json::to_string(t).expect("turns always serialise") + "\n")
        .collect()
}

/// Replays a log file into a fresh session.
pub fn replay_log(path: &Path, backend: SharedBackend, memory: SharedShapeLibrary) -> Result<Session, ServiceError> {
    let text = fs::read_to_string(path)?;
    let turns = read_log(&text)?;
    Ok(Session::replay(backend, memory, &turns))
}

fn lock(m: &Mutex<Live>) -> std::sync::MutexGuard<'_, Live> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl SessionManager {
    pub fn new(config: ServiceConfig) -> Result<SessionManager, ServiceError> {
        let backend_config = config.backend.clone().with_env();
        let backend = build_backend(&backend_config).map_err(|e| ServiceError::BadConfig(e.to_string()))?;
        SessionManager::with_backend(config, backend)
    }

    /// Uses an already built backend, e.g. a mock in tests.
    pub fn with_backend(config: ServiceConfig, backend: SharedBackend) -> Result<SessionManager, ServiceError> {
        let shared_library = match &config.shape_library {
            Some(path) => Some(
                ShapeLibrary::load(path)
                    .map_err(|e| ServiceError::BadConfig(format!("shape library {}: {e}", path.display())))?
                    .shared(),
            ),
            None => None,
        };
        let seed = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        let manager = SessionManager {
            config,
            backend,
            shared_library,
            sessions: RwLock::new(HashMap::new()),
            listener: RwLock::new(None),
            ids: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        };
        manager.recover()?;
        Ok(manager)
    }

    pub fn set_listener(&self, listener: Listener) {
        *self.listener.write().unwrap_or_else(|e| e.into_inner()) = Some(listener);
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn sessions_dir(&self) -> Option<PathBuf> {
        self.config.data_dir.as_ref().map(|d| d.join("sessions"))
    }

    fn library_for_new_session(&self) -> SharedShapeLibrary {
        match &self.shared_library {
            Some(lib) => lib.clone(),
            None => ShapeLibrary::new().shared(),
        }
    }

    /// Replays every persisted session log.
    fn recover(&self) -> Result<(), ServiceError> {
        let Some(dir) = self.sessions_dir() else { return Ok(()) };
        if !dir.exists() {
            return Ok(());
        }
        let mut metas: Vec<SessionMeta> = Vec::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.to_string_lossy().ends_with(".meta.json") {
                let text = fs::read_to_string(&path)?;
                metas.push(serde_json::from_str(&text).map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?);
            }
        }
        metas.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        for meta in metas {
            let log_path = dir.join(format!("{}.jsonl", meta.id));
            let turns = if log_path.exists() {
                read_log(&fs::read_to_string(&log_path)?)?
            } else {
                Vec::new()
            };
            let session = Session::replay(self.backend.clone(), self.library_for_new_session(), &turns);
            let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
            log::info!("recovered session {} ({} parts)", meta.id, session.grid().len());
            self.insert(Live {
                meta,
                session,
                events: Vec::new(),
                log: Some(log),
            });
        }
        Ok(())
    }

    fn insert(&self, live: Live) {
        let id = live.meta.id.clone();
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, Arc::new(Mutex::new(live)));
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Live>>, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap_or_else(|e| e.into_inner()).keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn create_session(&self) -> Result<String, ServiceError> {
        let id = loop {
            let id = format!("{:016x}", self.ids.lock().unwrap_or_else(|e| e.into_inner()).random::<u64>());
            if self.get(&id).is_err() {
                break id;
            }
        };
        let meta = SessionMeta {
            id: id.clone(),
            created_at: now(),
        };
        let log = match self.sessions_dir() {
            Some(dir) => {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join(format!("{id}.meta.json")), serde_json::to_string(&meta).expect("meta serialises"))?;
                Some(File::create(dir.join(format!("{id}.jsonl")))?)
            }
            None => None,
        };
        self.insert(Live {
            meta,
            session: Session::new(self.backend.clone(), self.library_for_new_session()),
            events: Vec::new(),
            log,
        });
        Ok(id)
    }

    /// Runs `f` on the session unless another turn holds it.
    fn with_turn<T>(&self, id: &str, f: impl FnOnce(&mut Live) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        let cell = self.get(id)?;
        let mut live = match cell.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => return Err(ServiceError::SessionBusy),
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
        };
        f(&mut live)
    }

    fn emit(&self, live: &mut Live, kind: EventKind) {
        let event = SessionEvent {
            session: live.meta.id.clone(),
            seq: live.events.len() as u64 + 1,
            kind,
        };
        if let Some(l) = self.listener.read().unwrap_or_else(|e| e.into_inner()).as_ref() {
            l(&event);
        }
        live.events.push(event);
    }

    /// Appends the dialogue lines added since `from` to the log file.
    fn persist(&self, live: &mut Live, from: usize) -> Result<(), ServiceError> {
        if let Some(file) = live.log.as_mut() {
            file.write_all(write_log(&live.session.dialogue()[from..]).as_bytes())?;
            file.flush()?;
            if let Some(dir) = self.config.data_dir.as_ref().map(|d| d.join("sessions")) {
                fs::write(dir.join(format!("{}.snapshot.json", live.meta.id)), live.session.snapshot())?;
            }
        }
        Ok(())
    }

    fn publish(&self, live: &mut Live, outcome: &TurnOutcome) -> Result<(), ServiceError> {
        match outcome {
            TurnOutcome::Clarify {
                question,
                question_id,
                field,
            } => self.emit(
                live,
                EventKind::Question {
                    question_id: *question_id,
                    text: question.clone(),
                    field: *field,
                },
            ),
            TurnOutcome::Execute { program } => {
                let parts = live.session.grid().parts().cloned().collect();
                self.emit(live, EventKind::GridUpdate { program: program.clone(), parts });
            }
            TurnOutcome::Stored { shape, version, program } => {
                if !program.is_empty() {
                    let parts = live.session.grid().parts().cloned().collect();
                    self.emit(live, EventKind::GridUpdate { program: program.clone(), parts });
                }
                self.emit(
                    live,
                    EventKind::Stored {
                        shape: shape.clone(),
                        version: *version,
                    },
                );
                if let (Some(path), Some(lib)) = (&self.config.shape_library, &self.shared_library) {
                    lib.read()
                        .unwrap_or_else(|e| e.into_inner())
                        .save(path)
                        .map_err(|e| ServiceError::Io(e.to_string()))?;
                }
            }
            TurnOutcome::Error { reason } => self.emit(live, EventKind::Error { reason: reason.clone() }),
        }
        Ok(())
    }

    pub fn post_instruction(&self, id: &str, text: &str) -> Result<TurnOutcome, ServiceError> {
        self.with_turn(id, |live| {
            if live.session.is_busy() {
                return Err(ServiceError::SessionBusy);
            }
            let from = live.session.dialogue().len();
            self.emit(live, EventKind::Instruction { text: text.to_string() });
            let outcome = live.session.process_turn(text)?;
            self.persist(live, from)?;
            self.publish(live, &outcome)?;
            Ok(outcome)
        })
    }

    pub fn post_answer(&self, id: &str, question_id: Option<u32>, text: &str) -> Result<TurnOutcome, ServiceError> {
        self.with_turn(id, |live| {
            match (live.session.pending_question(), question_id) {
                (None, _) => return Err(ServiceError::NoPendingQuestion),
                (Some(q), Some(asked)) if q.id != asked => return Err(ServiceError::UnknownQuestion(asked)),
                _ => {}
            }
            let from = live.session.dialogue().len();
            self.emit(live, EventKind::Answer { text: text.to_string() });
            let outcome = live.session.answer(question_id, text)?;
            self.persist(live, from)?;
            self.publish(live, &outcome)?;
            Ok(outcome)
        })
    }

    /// Applies a stored shape by issuing the equivalent recall instruction.
    pub fn apply_shape(&self, id: &str, shape: &str, req: &ApplyRequest) -> Result<TurnOutcome, ServiceError> {
        self.post_instruction(id, &req.instruction(shape))
    }

    pub fn get_state(&self, id: &str) -> Result<SessionState, ServiceError> {
        let cell = self.get(id)?;
        let live = lock(&cell);
        let shapes = live.session.memory().read().unwrap_or_else(|e| e.into_inner()).names();
        Ok(SessionState {
            id: live.meta.id.clone(),
            created_at: live.meta.created_at,
            parts: live.session.grid().parts().cloned().collect(),
            dialogue: live.session.dialogue().to_vec(),
            shapes,
            pending: live.session.pending_question().cloned(),
        })
    }

    pub fn snapshot(&self, id: &str) -> Result<String, ServiceError> {
        let cell = self.get(id)?;
        let live = lock(&cell);
        Ok(live.session.snapshot())
    }

    /// Events with sequence number above `since`.
    pub fn events(&self, id: &str, since: u64) -> Result<Vec<SessionEvent>, ServiceError> {
        let cell = self.get(id)?;
        let live = lock(&cell);
        Ok(live.events.iter().filter(|e| e.seq > since).cloned().collect())
    }

    /// Names in the shared library, or in one session's library.
    pub fn shapes(&self, session: Option<&str>) -> Result<Vec<ShapeSummary>, ServiceError> {
        let lib = match (session, &self.shared_library) {
            (Some(id), _) => lock(&*self.get(id)?).session.memory().clone(),
            (None, Some(lib)) => lib.clone(),
            (None, None) => return Ok(Vec::new()),
        };
        let lib = lib.read().unwrap_or_else(|e| e.into_inner());
        Ok(lib
            .iter()
            .map(|s| ShapeSummary {
                name: s.graph.name.clone(),
                version: s.version,
                parts: s.graph.node_count(),
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub name: String,
    pub version: u32,
    pub parts: usize,
}

/// True when the dialogue ends with an Architect line and no reply.
pub fn is_dangling(turns: &[DialogueTurn]) -> bool {
    turns.last().is_some_and(|t| t.role == Role::Architect)
}
