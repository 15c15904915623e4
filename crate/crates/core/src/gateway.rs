//! Completion backends behind the agents.
//!
//! Every agent talks to a [`CompletionBackend`]. The deterministic backend
//! answers from the instruction grammar, so a whole dialogue is a pure
//! function of its transcript. The remote backend posts OpenAI-style chat
//! requests to a configured endpoint.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::grammar::{parse_instruction, render_canonical, MemoryCommand, ParsedItem};

const ENVIRONMENT: &str = include_str!("../prompts/environment.txt");
const PARSER: &str = include_str!("../prompts/parser.txt");
const LOCATOR: &str = include_str!("../prompts/locator.txt");
const BUILDER: &str = include_str!("../prompts/builder.txt");
const ABSTRACTOR: &str = include_str!("../prompts/abstractor.txt");
const COT: &str = include_str!("../prompts/cot.txt");

/// Version of the bundled prompt texts; bump when any file changes.
pub const PROMPT_VERSION: u32 = 1;

pub const ENV_API_KEY: &str = "COBUILD_API_KEY";
pub const ENV_ENDPOINT: &str = "COBUILD_ENDPOINT";
pub const ENV_MODEL: &str = "COBUILD_MODEL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("malformed model output: {0}")]
    MalformedOutput(String),
    #[error("bad backend config: {0}")]
    Config(String),
}

impl GatewayError {
    #[cfg(feature = "remote")]
    fn transient(&self) -> bool {
        match self {
            GatewayError::Timeout(_) | GatewayError::Transport(_) => true,
            GatewayError::Provider { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Parser,
    Locator,
    Builder,
    Abstractor,
    /// Single-prompt chain-of-thought baseline.
    Cot,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentPrompt {
    pub role: AgentRole,
    pub system: &'static str,
    pub environment: &'static str,
}

impl AgentPrompt {
    pub fn for_role(role: AgentRole) -> AgentPrompt {
        let system = match role {
            AgentRole::Parser => PARSER,
            AgentRole::Locator => LOCATOR,
            AgentRole::Builder => BUILDER,
            AgentRole::Abstractor => ABSTRACTOR,
            AgentRole::Cot => COT,
        };
        AgentPrompt {
            role,
            system,
            environment: ENVIRONMENT,
        }
    }

    /// The system message with the environment block spliced in where the
    /// prompt marks it.
    pub fn system_text(&self) -> String {
        self.system
            .lines()
            .map(|l| if l.trim() == "(Environment)" { self.environment.trim_end() } else { l })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Message {
        Message {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Message {
        Message {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &AgentPrompt, messages: &[Message]) -> Result<String, GatewayError>;

    fn name(&self) -> &str;
}

pub type SharedBackend = Arc<dyn CompletionBackend>;

/// One entry of the parser agent's `structures` list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub plan: String,
    #[serde(default)]
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputSchema {
    Structures,
    Instruction,
    PythonFunction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentOutput {
    Structures(Vec<Plan>),
    Instruction(String),
    PythonFunction(String),
}

/// Drops a surrounding code fence and its language tag if there is one.
fn strip_fence(text: &str) -> &str {
    let Some(start) = text.find("```") else { return text.trim() };
    let rest = &text[start + 3..];
    let body_start = rest.find('\n').map(|i| i + 1).unwrap_or(0);
    let tag = rest[..body_start].trim();
    // "```json {..} ```" on one line: no newline after the tag.
    let (rest, body_start) = if tag.contains('{') {
        let lang_end = rest.find('{').unwrap_or(0);
        (rest, lang_end)
    } else {
        (rest, body_start)
    };
    let body = &rest[body_start..];
    match body.find("```") {
        Some(end) => body[..end].trim(),
        None => body.trim(),
    }
}

/// Pulls the agent's answer out of raw model text. Never panics; every
/// failure is a [`GatewayError::MalformedOutput`].
pub fn extract_json(text: &str, schema: OutputSchema) -> Result<AgentOutput, GatewayError> {
    let bad = |why: String| GatewayError::MalformedOutput(why);
    let body = strip_fence(text);
    if schema == OutputSchema::PythonFunction {
        let start = body.find("def ").ok_or_else(|| bad("no function definition".into()))?;
        let code = body[start..].trim_end();
        if !code.contains("return") {
            return Err(bad("function never returns".into()));
        }
        return Ok(AgentOutput::PythonFunction(code.to_string()));
    }
    let (Some(open), Some(close)) = (body.find('{'), body.rfind('}')) else {
        return Err(bad("no JSON object found".into()));
    };
    if close < open {
        return Err(bad("no JSON object found".into()));
    }
    let value: Value = serde_json::from_str(&body[open..=close]).map_err(|e| bad(e.to_string()))?;
    match schema {
        OutputSchema::Structures => {
            let list = value
                .get("structures")
                .ok_or_else(|| bad("missing key `structures`".into()))?;
            let plans: Vec<Plan> = serde_json::from_value(list.clone()).map_err(|e| bad(e.to_string()))?;
            Ok(AgentOutput::Structures(plans))
        }
        OutputSchema::Instruction => match value.get("instruction") {
            Some(Value::String(s)) => Ok(AgentOutput::Instruction(s.clone())),
            Some(_) => Err(bad("`instruction` is not a string".into())),
            None => Err(bad("missing key `instruction`".into())),
        },
        OutputSchema::PythonFunction => unreachable!(),
    }
}

/// Answers every agent from the instruction grammar.
#[derive(Clone, Copy, Debug, Default)]
pub struct DeterministicBackend;

fn last_user(messages: &[Message]) -> &str {
    messages
        .iter()
        .rev()
        .find(|m| m.role == "user")
        .map(|m| m.content.as_str())
        .unwrap_or("")
}

impl DeterministicBackend {
    /// One plan per parsed item, in canonical phrasing. Text outside the
    /// grammar gives an empty list.
    fn parser(&self, text: &str) -> Value {
        let items = parse_instruction(text).unwrap_or_default();
        let structures: Vec<Value> = items
            .iter()
            .map(|item| {
                let name = match item {
                    ParsedItem::Memory(MemoryCommand::Name { shape })
                    | ParsedItem::Memory(MemoryCommand::Recall { shape, .. }) => shape.clone(),
                    ParsedItem::Place(_) => String::new(),
                };
                serde_json::json!({ "plan": render_canonical(item), "name": name })
            })
            .collect();
        serde_json::json!({ "structures": structures })
    }

    fn abstractor(&self, text: &str) -> String {
        let mut out = String::from(
            "def build_structure():\n    \"\"\"Rebuilds the recorded structure.\"\"\"\n    actions = []\n",
        );
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            out.push_str(&format!("    actions.append({:?})\n", line));
        }
        out.push_str("    return actions\n");
        out
    }
}

impl CompletionBackend for DeterministicBackend {
    fn complete(&self, prompt: &AgentPrompt, messages: &[Message]) -> Result<String, GatewayError> {
        let text = last_user(messages);
        Ok(match prompt.role {
            AgentRole::Parser => self.parser(text).to_string(),
            // Locating and matching names need the board and library, which
            // the pipeline resolves locally; the plan passes through as is.
            AgentRole::Locator => serde_json::json!({ "instruction": text }).to_string(),
            AgentRole::Builder => serde_json::json!({ "name": "", "plan": text }).to_string(),
            AgentRole::Abstractor => format!("```python\n{}```", self.abstractor(text)),
            AgentRole::Cot => self.parser(text).to_string(),
        })
    }

    fn name(&self) -> &str {
        "deterministic"
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Deterministic,
    Remote,
}

/// The `backend` section of the config file. Env vars fill in anything
/// left unset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Never serialised; comes from the environment.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u8,
    pub temperature: f32,
    /// Log request and response bodies, key redacted.
    pub debug: bool,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Deterministic,
            endpoint: None,
            model: None,
            api_key: None,
            timeout_secs: 60,
            max_retries: 3,
            temperature: 0.0,
            debug: false,
        }
    }
}

impl BackendConfig {
    pub fn with_env(mut self) -> BackendConfig {
        let var = |k| std::env::var(k).ok().filter(|v: &String| !v.is_empty());
        self.endpoint = self.endpoint.or_else(|| var(ENV_ENDPOINT));
        self.model = self.model.or_else(|| var(ENV_MODEL));
        self.api_key = self.api_key.or_else(|| var(ENV_API_KEY));
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.timeout_secs == 0 {
            return Err(GatewayError::Config("timeout must be positive".into()));
        }
        if self.max_retries > 5 {
            return Err(GatewayError::Config("at most 5 retries".into()));
        }
        if self.kind == BackendKind::Remote {
            if self.endpoint.is_none() {
                return Err(GatewayError::Config(format!("remote backend needs an endpoint ({ENV_ENDPOINT})")));
            }
            if self.model.is_none() {
                return Err(GatewayError::Config(format!("remote backend needs a model ({ENV_MODEL})")));
            }
        }
        Ok(())
    }
}

pub fn build_backend(config: &BackendConfig) -> Result<SharedBackend, GatewayError> {
    config.validate()?;
    match config.kind {
        BackendKind::Deterministic => Ok(Arc::new(DeterministicBackend)),
        #[cfg(feature = "remote")]
        BackendKind::Remote => Ok(Arc::new(RemoteBackend::new(config.clone())?)),
        #[cfg(not(feature = "remote"))]
        BackendKind::Remote => Err(GatewayError::Config("built without the `remote` feature".into())),
    }
}

#[cfg(feature = "remote")]
fn redact(text: &str, key: Option<&str>) -> String {
    match key {
        Some(k) if !k.is_empty() => text.replace(k, "[redacted]"),
        _ => text.to_string(),
    }
}

/// Request body for an OpenAI-style chat completion.
pub fn chat_request(model: &str, temperature: f32, prompt: &AgentPrompt, messages: &[Message]) -> Value {
    let mut all = vec![serde_json::json!({ "role": "system", "content": prompt.system_text() })];
    all.extend(messages.iter().map(|m| serde_json::json!({ "role": m.role, "content": m.content })));
    serde_json::json!({ "model": model, "messages": all, "temperature": temperature })
}

/// The assistant text of a chat completion response.
pub fn chat_content(body: &str) -> Result<String, GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::MalformedOutput(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::MalformedOutput("response has no choices[0].message.content".into()))
}

#[cfg(feature = "remote")]
pub use remote::RemoteBackend;

#[cfg(feature = "remote")]
mod remote {
    use super::*;

    pub struct RemoteBackend {
        config: BackendConfig,
        agent: ureq::Agent,
    }

    impl RemoteBackend {
        pub fn new(config: BackendConfig) -> Result<RemoteBackend, GatewayError> {
            config.validate()?;
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
                .http_status_as_error(false)
                .build()
                .into();
            Ok(RemoteBackend { config, agent })
        }

        fn attempt(&self, body: &Value) -> Result<String, GatewayError> {
            let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
            let mut req = self.agent.post(endpoint).header("Content-Type", "application/json");
            if let Some(key) = &self.config.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let timeout = Duration::from_secs(self.config.timeout_secs);
            let mut resp = req.send_json(body).map_err(|e| match e {
                ureq::Error::Timeout(_) => GatewayError::Timeout(timeout),
                ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => GatewayError::Timeout(timeout),
                other => GatewayError::Transport(other.to_string()),
            })?;
            let status = resp.status().as_u16();
            let text = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| GatewayError::Transport(e.to_string()))?;
            if self.config.debug {
                log::debug!("response {status}: {}", redact(&text, self.config.api_key.as_deref()));
            }
            if !(200..300).contains(&status) {
                return Err(GatewayError::Provider { status, body: text });
            }
            chat_content(&text)
        }
    }

    impl CompletionBackend for RemoteBackend {
        fn complete(&self, prompt: &AgentPrompt, messages: &[Message]) -> Result<String, GatewayError> {
            let model = self.config.model.as_deref().unwrap_or_default();
            let body = chat_request(model, self.config.temperature, prompt, messages);
            if self.config.debug {
                log::debug!(
                    "request to {}: {}",
                    self.config.endpoint.as_deref().unwrap_or_default(),
                    redact(&body.to_string(), self.config.api_key.as_deref())
                );
            }
            let mut tries = 0;
            loop {
                match self.attempt(&body) {
                    Err(e) if e.transient() && tries < self.config.max_retries => {
                        tries += 1;
                        log::warn!("retrying after {e} ({tries}/{})", self.config.max_retries);
                        std::thread::sleep(Duration::from_millis(50 * tries as u64));
                    }
                    other => return other,
                }
            }
        }

        fn name(&self) -> &str {
            "remote"
        }
    }
}
