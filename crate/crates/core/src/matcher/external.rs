//! Clients for matchers served over the [`protocol`](super::protocol).

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use super::protocol::{Handshake, PredictRequest, PredictResponse, PROTOCOL};
use super::{MatchScore, Matcher, DEFAULT_THRESHOLD};
use crate::data::RecordPair;
use crate::error::MatcherError;

fn check_handshake(h: &Handshake) -> Result<(f64, bool), MatcherError> {
    if h.protocol != PROTOCOL {
        return Err(MatcherError::Handshake(format!(
            "unsupported protocol {:?}, expected {PROTOCOL:?}",
            h.protocol
        )));
    }
    match h.threshold {
        Some(t) if t > 0.0 && t < 1.0 => Ok((t, false)),
        Some(t) => Err(MatcherError::Handshake(format!("threshold {t} outside (0, 1)"))),
        None => Ok((DEFAULT_THRESHOLD, true)),
    }
}

fn decode_scores(
    request_id: &str,
    n: usize,
    resp: PredictResponse,
) -> Result<Vec<MatchScore>, MatcherError> {
    if resp.id() != request_id {
        return Err(MatcherError::Transport {
            request_id: request_id.to_string(),
            message: format!("response id {:?} does not match", resp.id()),
        });
    }
    match resp {
        PredictResponse::Error { error, .. } => Err(MatcherError::Remote {
            request_id: request_id.to_string(),
            message: error,
        }),
        PredictResponse::Scores { scores, .. } => {
            if scores.len() != n {
                return Err(MatcherError::Shape {
                    expected: n,
                    got: scores.len(),
                });
            }
            scores.into_iter().map(MatchScore::new).collect()
        }
    }
}

struct StdioChannel {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A matcher running as a child process speaking the protocol on stdin/stdout.
/// One batch is in flight at a time; concurrent callers queue on a lock.
pub struct StdioMatcher {
    channel: Mutex<StdioChannel>,
    threshold: f64,
    threshold_defaulted: bool,
    next_id: AtomicU64,
}

impl StdioMatcher {
    /// Runs `command` through `sh -c` and reads its handshake.
    pub fn spawn_shell(command: &str) -> Result<Self, MatcherError> {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(command);
        Self::spawn(cmd)
    }

    pub fn spawn(mut command: Command) -> Result<Self, MatcherError> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| MatcherError::Handshake(format!("cannot start matcher: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut line = String::new();
        let read = stdout.read_line(&mut line);
        let handshake = match read {
            Ok(0) | Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(MatcherError::Handshake(
                    "matcher exited before sending a handshake".into(),
                ));
            }
            Ok(_) => serde_json::from_str::<Handshake>(&line).map_err(|e| {
                let _ = child.kill();
                let _ = child.wait();
                MatcherError::Handshake(format!("malformed handshake {line:?}: {e}"))
            })?,
        };
        let (threshold, threshold_defaulted) = check_handshake(&handshake)?;
        Ok(StdioMatcher {
            channel: Mutex::new(StdioChannel {
                child,
                stdin,
                stdout,
            }),
            threshold,
            threshold_defaulted,
            next_id: AtomicU64::new(0),
        })
    }
}

impl Matcher for StdioMatcher {
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError> {
        let request_id = format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let transport = |message: String| MatcherError::Transport {
            request_id: request_id.clone(),
            message,
        };
        let body = serde_json::to_string(&PredictRequest {
            id: request_id.clone(),
            pairs: pairs.to_vec(),
        })
        .map_err(|e| transport(e.to_string()))?;

        let mut ch = self.channel.lock().unwrap_or_else(|p| p.into_inner());
        ch.stdin
            .write_all(body.as_bytes())
            .and_then(|_| ch.stdin.write_all(b"\n"))
            .and_then(|_| ch.stdin.flush())
            .map_err(|e| transport(format!("write failed: {e}")))?;
        let mut line = String::new();
        match ch.stdout.read_line(&mut line) {
            Ok(0) => return Err(transport("matcher closed its output".into())),
            Err(e) => return Err(transport(format!("read failed: {e}"))),
            Ok(_) => {}
        }
        drop(ch);
        let resp: PredictResponse = serde_json::from_str(&line)
            .map_err(|e| transport(format!("malformed response: {e}")))?;
        decode_scores(&request_id, pairs.len(), resp)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn threshold_defaulted(&self) -> bool {
        self.threshold_defaulted
    }
}

impl Drop for StdioMatcher {
    fn drop(&mut self) {
        let ch = self.channel.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = ch.child.kill();
        let _ = ch.child.wait();
    }
}

/// A matcher behind `GET {base}/meta` and `POST {base}/predict`.
pub struct HttpMatcher {
    base: String,
    client: reqwest::blocking::Client,
    threshold: f64,
    threshold_defaulted: bool,
    next_id: AtomicU64,
}

impl HttpMatcher {
    pub fn connect(base_url: &str) -> Result<Self, MatcherError> {
        let base = base_url.trim_end_matches('/').to_string();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| MatcherError::Handshake(e.to_string()))?;
        let handshake: Handshake = client
            .get(format!("{base}/meta"))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| MatcherError::Handshake(format!("GET {base}/meta: {e}")))?;
        let (threshold, threshold_defaulted) = check_handshake(&handshake)?;
        Ok(HttpMatcher {
            base,
            client,
            threshold,
            threshold_defaulted,
            next_id: AtomicU64::new(0),
        })
    }
}

impl Matcher for HttpMatcher {
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError> {
        let request_id = format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let req = PredictRequest {
            id: request_id.clone(),
            pairs: pairs.to_vec(),
        };
        let resp: PredictResponse = self
            .client
            .post(format!("{}/predict", self.base))
            .json(&req)
            .send()
            .and_then(|r| r.json())
            .map_err(|e| MatcherError::Transport {
                request_id: request_id.clone(),
                message: e.to_string(),
            })?;
        decode_scores(&request_id, pairs.len(), resp)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn threshold_defaulted(&self) -> bool {
        self.threshold_defaulted
    }
}
