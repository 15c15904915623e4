//! A chat-completions endpoint on a local socket for exercising the remote
//! backend without a model.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use cobuild_core::gateway::{AgentPrompt, AgentRole, CompletionBackend, DeterministicBackend, Message};
use serde_json::{json, Value};

#[derive(Clone, Copy)]
#[allow(dead_code)]
pub enum Mode {
    /// Answers like the grammar-backed agents would.
    Echo,
    /// Fails with this status for the first `n` requests, then echoes.
    FailFirst(u16, usize),
    /// 200 with a body that is not a chat completion.
    Garbage,
}

pub struct MockEndpoint {
    pub url: String,
    #[allow(dead_code)]
    pub hits: Arc<AtomicUsize>,
}

const ROLES: [AgentRole; 5] = [AgentRole::Parser, AgentRole::Locator, AgentRole::Builder, AgentRole::Abstractor, AgentRole::Cot];

fn reply(body: &Value) -> Option<String> {
    let messages = body["messages"].as_array()?;
    let system = messages.first()?["content"].as_str()?;
    let role = ROLES.into_iter().find(|r| AgentPrompt::for_role(*r).system_text() == system)?;
    let rest: Vec<Message> = messages[1..].iter().filter_map(|m| serde_json::from_value(m.clone()).ok()).collect();
    DeterministicBackend.complete(&AgentPrompt::for_role(role), &rest).ok()
}

fn respond(stream: &mut std::net::TcpStream, status: u16, body: &str) {
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

/// Serves until the test process exits.
pub fn spawn(mode: Mode) -> MockEndpoint {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut raw = vec![0; len];
            if reader.read_exact(&mut raw).is_err() {
                continue;
            }
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let body: Value = serde_json::from_slice(&raw).unwrap_or(Value::Null);
            match mode {
                Mode::FailFirst(status, k) if n < k => respond(&mut stream, status, r#"{"error":"try later"}"#),
                Mode::Garbage => respond(&mut stream, 200, r#"{"unexpected":true}"#),
                _ => match reply(&body) {
                    Some(content) => {
                        let out = json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] });
                        respond(&mut stream, 200, &out.to_string())
                    }
                    None => respond(&mut stream, 400, r#"{"error":"unknown prompt"}"#),
                },
            }
        }
    });
    MockEndpoint { url, hits }
}
