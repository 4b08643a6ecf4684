//! Scriptable stand-in for an external classifier, used by the protocol
//! conformance tests. Buffers each batch until `{"end":true}` and then
//! answers according to `--mode`:
//!
//! * `constant-not` (default): every id gets `NOT` with score 0.0
//! * `reverse`: like `constant-not` but answers in reverse request order
//! * `keyword`: `OFF`/0.9 when the lowercased text contains `--keyword`, else `NOT`/0.1
//! * `unknown-id`: answers one id that was never requested
//! * `bad-score`: answers with score 1.5
//! * `malformed`: answers with a line that is not JSON
//! * `silent`: never answers a batch
//! * `wrong-proto`: handshake announces protocol 2
//!
//! `--transcript <path>` appends every line received from the host to a file.

use std::fs::OpenOptions;
use std::io::{self, BufRead, Write};

use serde_json::{json, Value};

fn error_line(out: &mut impl Write, message: &str) -> io::Result<()> {
    writeln!(out, "{{\"id\":null,\"error\":{}}}", Value::from(message))
}

fn main() -> io::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let flag = |name: &str| args.iter().position(|a| a == name).and_then(|i| args.get(i + 1)).cloned();
    let mode = flag("--mode").unwrap_or_else(|| "constant-not".into());
    let keyword = flag("--keyword").unwrap_or_default().to_lowercase();
    let mut transcript = match flag("--transcript") {
        Some(p) => Some(OpenOptions::new().create(true).append(true).open(p)?),
        None => None,
    };

    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let mut pending: Vec<(String, String)> = Vec::new();

    for line in stdin.lock().lines() {
        let line = line?;
        if let Some(t) = transcript.as_mut() {
            writeln!(t, "{line}")?;
        }
        let msg: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                error_line(&mut out, &e.to_string())?;
                out.flush()?;
                continue;
            }
        };
        if msg.get("proto").is_some() {
            let proto = if mode == "wrong-proto" { 2 } else { 1 };
            writeln!(out, "{{\"proto\":{proto},\"name\":\"stub-{mode}\"}}")?;
            out.flush()?;
        } else if msg.get("end").is_some() {
            if mode == "silent" {
                pending.clear();
                continue;
            }
            if mode == "reverse" {
                pending.reverse();
            }
            for (i, (id, text)) in pending.drain(..).enumerate() {
                let resp = match mode.as_str() {
                    "unknown-id" if i == 0 => json!({"id": format!("{id}-unrequested"), "label": "NOT", "score": 0.0}),
                    "bad-score" => json!({"id": id, "label": "OFF", "score": 1.5}),
                    "malformed" => {
                        writeln!(out, "not json at all")?;
                        continue;
                    }
                    "keyword" if !keyword.is_empty() && text.to_lowercase().contains(&keyword) => {
                        json!({"id": id, "label": "OFF", "score": 0.9})
                    }
                    "keyword" => json!({"id": id, "label": "NOT", "score": 0.1}),
                    _ => json!({"id": id, "label": "NOT", "score": 0.0}),
                };
                writeln!(out, "{resp}")?;
            }
            out.flush()?;
        } else {
            match (msg.get("id").and_then(Value::as_str), msg.get("text").and_then(Value::as_str)) {
                (Some(id), Some(text)) => pending.push((id.to_string(), text.to_string())),
                _ => {
                    error_line(&mut out, "request needs string id and text")?;
                    out.flush()?;
                }
            }
        }
    }
    Ok(())
}
