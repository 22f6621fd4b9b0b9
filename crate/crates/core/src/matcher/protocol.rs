//! The `em-matcher/1` wire protocol and a server for in-process matchers.
//!
//! Messages are single JSON objects; over stdio each message is one line.
//!
//! ```text
//! server -> client   {"protocol":"em-matcher/1","threshold":0.5}      (startup, or GET /meta)
//! client -> server   {"id":"req-0","pairs":[{"pair_id":..,"a":..,"b":..}]}   (line, or POST /predict)
//! server -> client   {"id":"req-0","scores":[0.93]}
//!                    {"id":"req-0","error":"..."}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Matcher;
use crate::data::RecordPair;

pub const PROTOCOL: &str = "em-matcher/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub id: String,
    pub pairs: Vec<RecordPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictResponse {
    Scores { id: String, scores: Vec<f64> },
    Error { id: String, error: String },
}

impl PredictResponse {
    pub fn id(&self) -> &str {
        match self {
            PredictResponse::Scores { id, .. } | PredictResponse::Error { id, .. } => id,
        }
    }
}

pub fn handshake_for<M: Matcher + ?Sized>(matcher: &M) -> Handshake {
    Handshake {
        protocol: PROTOCOL.to_string(),
        threshold: Some(matcher.threshold()),
    }
}

/// Answers one request body. Never fails: malformed input yields an error
/// response echoing whatever id could be recovered.
pub fn respond<M: Matcher + ?Sized>(matcher: &M, body: &str, max_batch: usize) -> PredictResponse {
    let value: serde_json::Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => {
            return PredictResponse::Error {
                id: String::new(),
                error: format!("malformed request: {e}"),
            }
        }
    };
    let id = value
        .get("id")
        .and_then(|v| v.as_str())
        .unwrap_or_default()
        .to_string();
    let req: PredictRequest = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => {
            return PredictResponse::Error {
                id,
                error: format!("malformed request: {e}"),
            }
        }
    };
    if req.pairs.len() > max_batch {
        return PredictResponse::Error {
            id,
            error: format!("batch of {} exceeds limit {max_batch}", req.pairs.len()),
        };
    }
    match matcher.predict_batch(&req.pairs) {
        Ok(scores) => PredictResponse::Scores {
            id,
            scores: scores.into_iter().map(|s| s.get()).collect(),
        },
        Err(e) => PredictResponse::Error {
            id,
            error: e.to_string(),
        },
    }
}

/// Serves `matcher` over a line-delimited channel until `input` closes.
pub fn serve_stdio<M, R, W>(matcher: &M, input: R, mut output: W, max_batch: usize) -> std::io::Result<()>
where
    M: Matcher + ?Sized,
    R: BufRead,
    W: Write,
{
    serde_json::to_writer(&mut output, &handshake_for(matcher))?;
    output.write_all(b"\n")?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        serde_json::to_writer(&mut output, &respond(matcher, &line, max_batch))?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

/// Serves `matcher` over HTTP: `GET /meta` and `POST /predict`. Blocks forever
/// unless the server errors; requests are handled one at a time.
pub fn serve_http<M: Matcher + ?Sized>(
    matcher: &M,
    server: tiny_http::Server,
    max_batch: usize,
) -> std::io::Result<()> {
    let json_header =
        tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).unwrap();
    for mut request in server.incoming_requests() {
        let (status, body) = match (request.method(), request.url()) {
            (tiny_http::Method::Get, "/meta") => {
                (200, serde_json::to_string(&handshake_for(matcher)).unwrap())
            }
            (tiny_http::Method::Post, "/predict") => {
                let mut body = String::new();
                if let Err(e) = request.as_reader().read_to_string(&mut body) {
                    let r = PredictResponse::Error {
                        id: String::new(),
                        error: format!("cannot read body: {e}"),
                    };
                    (400, serde_json::to_string(&r).unwrap())
                } else {
                    let r = respond(matcher, &body, max_batch);
                    (200, serde_json::to_string(&r).unwrap())
                }
            }
            _ => (404, r#"{"error":"not found"}"#.to_string()),
        };
        let response = tiny_http::Response::from_string(body)
            .with_status_code(status)
            .with_header(json_header.clone());
        request.respond(response)?;
    }
    Ok(())
}
