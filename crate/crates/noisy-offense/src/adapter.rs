//! Client for external classifiers that run as a child process and speak a
//! line-delimited JSON protocol over stdin/stdout.
//!
//! ```text
//! host -> {"proto":1}
//! host <- {"proto":1,"name":"<model name>"}
//! host -> {"id":"<id>","text":"<text>"}          one per request
//! host -> {"end":true}
//! host <- {"id":"<id>","label":"OFF"|"NOT","score":<0..1>}   one per request, any order
//! ```
//!
//! The adapter may answer requests in any order; results are returned in
//! request order. A batch either yields exactly one prediction per request
//! or fails.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use noisy_offense_core::classifier::Prediction;
use noisy_offense_core::Label;

pub const PROTOCOL_VERSION: u32 = 1;

/// Fine-tuning settings handed to the external transformer; the client
/// itself only records them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformerSettings {
    pub epochs: u32,
    pub warmup_steps: u32,
    pub batch_size: u32,
    pub learning_rate: f64,
    pub sequence_length: u32,
    pub adam_epsilon: f64,
}

impl Default for TransformerSettings {
    fn default() -> Self {
        TransformerSettings {
            epochs: 10,
            warmup_steps: 1000,
            batch_size: 8,
            learning_rate: 2.0e-5,
            sequence_length: 64,
            adam_epsilon: 1.0e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterConfig {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    /// Longest wait for any single line from the adapter.
    pub timeout: Duration,
    pub training: TransformerSettings,
}

impl AdapterConfig {
    pub fn new(command: Vec<String>, timeout: Duration) -> Result<Self, AdapterError> {
        let cfg = AdapterConfig { command, timeout, training: TransformerSettings::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Splits a shell-style command line.
    pub fn parse_command(line: &str) -> Result<Vec<String>, AdapterError> {
        match shlex::split(line) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(AdapterError::Config(format!("cannot parse adapter command {line:?}"))),
        }
    }

    pub fn validate(&self) -> Result<(), AdapterError> {
        if self.command.is_empty() {
            return Err(AdapterError::Config("empty adapter command".into()));
        }
        if self.timeout.is_zero() {
            return Err(AdapterError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("{0}")]
    Config(String),
    #[error("cannot launch {command:?}: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("i/o with adapter: {0}")]
    Io(#[from] std::io::Error),
    #[error("timed out after {0:?} waiting for adapter")]
    Timeout(Duration),
    #[error("adapter closed its output")]
    Closed,
    #[error("protocol version mismatch: expected {expected}, adapter speaks {found}")]
    Version { expected: u32, found: u64 },
    #[error("malformed line {line:?}: {reason}")]
    Malformed { line: String, reason: String },
    #[error("adapter reported error {message:?} in line {line:?}")]
    Remote { line: String, message: String },
    #[error("response for unknown or already answered id in line {line:?}")]
    UnknownId { line: String },
    #[error("score outside [0, 1] in line {line:?}")]
    ScoreRange { line: String },
}

#[derive(Serialize)]
struct Hello {
    proto: u32,
}

#[derive(Deserialize)]
struct HelloReply {
    proto: u64,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Serialize)]
struct Request<'a> {
    id: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct End {
    end: bool,
}

#[derive(Deserialize)]
struct Response {
    id: Option<String>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    score: Option<f64>,
    #[serde(default)]
    error: Option<String>,
}

/// Serialized protocol lines, exposed for conformance fixtures.
pub mod wire {
    use super::*;

    pub fn hello() -> String {
        serde_json::to_string(&Hello { proto: PROTOCOL_VERSION }).expect("serializable")
    }

    pub fn request(id: &str, text: &str) -> String {
        serde_json::to_string(&Request { id, text }).expect("serializable")
    }

    pub fn end() -> String {
        serde_json::to_string(&End { end: true }).expect("serializable")
    }
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

/// One running adapter process. Batches sent from several threads are
/// serialized.
pub struct AdapterClient {
    config: AdapterConfig,
    name: String,
    session: Mutex<Session>,
}

impl Session {
    fn send(&mut self, line: &str) -> Result<(), AdapterError> {
        let stdin = self.stdin.as_mut().ok_or(AdapterError::Closed)?;
        stdin.write_all(line.as_bytes())?;
        stdin.write_all(b"\n")?;
        Ok(())
    }

    fn flush(&mut self) -> Result<(), AdapterError> {
        self.stdin.as_mut().ok_or(AdapterError::Closed)?.flush()?;
        Ok(())
    }

    fn recv(&self, timeout: Duration) -> Result<String, AdapterError> {
        match self.lines.recv_timeout(timeout) {
            Ok(line) => Ok(line?),
            Err(RecvTimeoutError::Timeout) => Err(AdapterError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(AdapterError::Closed),
        }
    }
}

fn malformed(line: &str, reason: impl ToString) -> AdapterError {
    AdapterError::Malformed { line: line.to_string(), reason: reason.to_string() }
}

impl AdapterClient {
    /// Launches the adapter and performs the version handshake.
    pub fn spawn(config: AdapterConfig) -> Result<Self, AdapterError> {
        config.validate()?;
        let mut child = Command::new(&config.command[0])
            .args(&config.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AdapterError::Spawn { command: config.command.join(" "), source })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let mut session = Session { child, stdin, lines: rx };
        session.send(&wire::hello())?;
        session.flush()?;
        let line = session.recv(config.timeout)?;
        let reply: HelloReply = serde_json::from_str(&line).map_err(|e| malformed(&line, e))?;
        if reply.proto != u64::from(PROTOCOL_VERSION) {
            return Err(AdapterError::Version { expected: PROTOCOL_VERSION, found: reply.proto });
        }
        let name = reply.name.unwrap_or_default();
        Ok(AdapterClient { config, name, session: Mutex::new(session) })
    }

    /// Model name announced in the handshake.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &AdapterConfig {
        &self.config
    }

    /// Sends one batch and waits for all of its responses.
    pub fn predict(&self, batch: &[(String, String)]) -> Result<Vec<Prediction>, AdapterError> {
        let mut session = self.session.lock().unwrap_or_else(|e| e.into_inner());
        let mut pending: HashMap<&str, usize> = HashMap::with_capacity(batch.len());
        for (i, (id, _)) in batch.iter().enumerate() {
            if pending.insert(id.as_str(), i).is_some() {
                return Err(AdapterError::Config(format!("duplicate id {id:?} in batch")));
            }
        }
        for (id, text) in batch {
            session.send(&wire::request(id, text))?;
        }
        session.send(&wire::end())?;
        session.flush()?;

        let mut out: Vec<Option<Prediction>> = vec![None; batch.len()];
        for _ in 0..batch.len() {
            let line = session.recv(self.config.timeout)?;
            let resp: Response = serde_json::from_str(&line).map_err(|e| malformed(&line, e))?;
            if let Some(message) = resp.error {
                return Err(AdapterError::Remote { line, message });
            }
            let id = resp.id.ok_or_else(|| malformed(&line, "missing id"))?;
            let slot = pending.remove(id.as_str()).ok_or_else(|| AdapterError::UnknownId { line: line.clone() })?;
            let label: Label = resp
                .label
                .as_deref()
                .ok_or_else(|| malformed(&line, "missing label"))?
                .parse()
                .map_err(|e| malformed(&line, e))?;
            let score = resp.score.ok_or_else(|| malformed(&line, "missing score"))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(AdapterError::ScoreRange { line });
            }
            out[slot] = Some(Prediction { id, label, score, overridden: false, override_term: None });
        }
        Ok(out.into_iter().map(|p| p.expect("every slot answered")).collect())
    }
}

impl Drop for AdapterClient {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|e| e.into_inner());
        // Closing stdin tells a well-behaved adapter to exit.
        session.stdin.take();
        match session.child.try_wait() {
            Ok(Some(_)) => {}
            _ => {
                thread::sleep(Duration::from_millis(20));
                if !matches!(session.child.try_wait(), Ok(Some(_))) {
                    let _ = session.child.kill();
                }
                let _ = session.child.wait();
            }
        }
    }
}

/// Launches an adapter, runs one batch and shuts it down.
pub fn external_predict(config: &AdapterConfig, batch: &[(String, String)]) -> Result<Vec<Prediction>, AdapterError> {
    AdapterClient::spawn(config.clone())?.predict(batch)
}
