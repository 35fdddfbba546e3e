//! Generator wire protocol.
//!
//! One JSON request object per line in, one JSON response object per line
//! out, over a child process's stdin/stdout; the same payloads go over HTTP
//! as `POST /generate`. Responses are validated against the request before
//! any scene reaches the rest of the toolkit.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caption::parse_prompt;
use crate::generate::generate_constructive;
use crate::tiles::{TileGrid, TileKind, SCENE_HEIGHT, SCENE_WIDTH};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const GENERATOR_ENV: &str = "LEVEL_FORGE_GENERATOR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRequest {
    pub id: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_prompt: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub num_samples: u32,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guidance_scale: Option<f64>,
}

fn one() -> u32 {
    1
}

fn default_width() -> usize {
    SCENE_WIDTH
}

impl GenRequest {
    pub fn new(id: impl Into<String>, prompt: impl Into<String>) -> Self {
        GenRequest {
            id: id.into(),
            prompt: prompt.into(),
            negative_prompt: None,
            seed: 0,
            num_samples: 1,
            width: SCENE_WIDTH,
            steps: None,
            guidance_scale: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.num_samples == 0 {
            return Err(ProtocolError::InvalidRequest(
                "num_samples must be positive".into(),
            ));
        }
        if self.width < SCENE_WIDTH {
            return Err(ProtocolError::InvalidRequest(format!(
                "width must be at least {SCENE_WIDTH}, got {}",
                self.width
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// Scenes stay as raw row strings here so that malformed ones can be
/// reported precisely by [`validate_response`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenResponse {
    pub id: String,
    #[serde(default)]
    pub scenes: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl GenResponse {
    pub fn ok(id: impl Into<String>, scenes: &[TileGrid]) -> Self {
        GenResponse {
            id: id.into(),
            scenes: scenes.iter().map(TileGrid::rows).collect(),
            error: None,
        }
    }

    pub fn failed(
        id: impl Into<String>,
        code: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        GenResponse {
            id: id.into(),
            scenes: Vec::new(),
            error: Some(ErrorBody {
                code: code.into(),
                message: message.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("generator timed out after {0:?}")]
    Timeout(Duration),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("generator error {code}: {message}")]
    GeneratorError { code: String, message: String },
    #[error("cannot reach generator: {0}")]
    Unreachable(String),
}

/// Checks a response against its request: id echo, error passthrough,
/// sample count, scene height and width, and the tile alphabet.
pub fn validate_response(
    request: &GenRequest,
    response: GenResponse,
) -> Result<Vec<TileGrid>, ProtocolError> {
    if response.id != request.id {
        return Err(ProtocolError::ProtocolViolation(format!(
            "response id {:?} does not echo request id {:?}",
            response.id, request.id
        )));
    }
    if let Some(err) = response.error {
        return Err(ProtocolError::GeneratorError {
            code: err.code,
            message: err.message,
        });
    }
    if response.scenes.len() != request.num_samples as usize {
        return Err(ProtocolError::ProtocolViolation(format!(
            "expected {} scenes, got {}",
            request.num_samples,
            response.scenes.len()
        )));
    }
    let mut grids = Vec::with_capacity(response.scenes.len());
    for (i, rows) in response.scenes.iter().enumerate() {
        if rows.len() != SCENE_HEIGHT {
            return Err(ProtocolError::ProtocolViolation(format!(
                "scene {i} has {} rows, expected {SCENE_HEIGHT}",
                rows.len()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            let width = row.chars().count();
            if width != request.width {
                return Err(ProtocolError::ProtocolViolation(format!(
                    "scene {i} row {r} has width {width}, expected {}",
                    request.width
                )));
            }
            if let Some((c, ch)) = row
                .chars()
                .enumerate()
                .find(|(_, ch)| TileKind::from_symbol(*ch).is_none())
            {
                return Err(ProtocolError::ProtocolViolation(format!(
                    "scene {i} has unknown symbol {ch:?} at row {r}, column {c}"
                )));
            }
        }
        let grid = TileGrid::from_rows(rows)
            .map_err(|e| ProtocolError::ProtocolViolation(format!("scene {i}: {e}")))?;
        grids.push(grid);
    }
    Ok(grids)
}

/// Anything that turns a [`GenRequest`] into validated scenes.
pub trait SceneGenerator: Send + Sync {
    fn generate(&self, request: &GenRequest) -> Result<Vec<TileGrid>, ProtocolError>;

    fn describe(&self) -> String;
}

/// The in-tree constructive generator behind the protocol. Sample `i` uses
/// seed `seed + i`; negative prompts are accepted and ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct Constructive;

impl SceneGenerator for Constructive {
    fn generate(&self, request: &GenRequest) -> Result<Vec<TileGrid>, ProtocolError> {
        request.validate()?;
        let prompt = parse_prompt(&request.prompt)
            .map_err(|e| ProtocolError::InvalidRequest(e.to_string()))?;
        if let Some(neg) = &request.negative_prompt {
            crate::caption::parse_caption(neg, crate::caption::CaptionStyle::Negative)
                .map_err(|e| ProtocolError::InvalidRequest(format!("negative prompt: {e}")))?;
        }
        (0..request.num_samples as u64)
            .map(|i| {
                generate_constructive(&prompt, request.seed.wrapping_add(i), request.width)
                    .map(|g| g.scene)
                    .map_err(|e| ProtocolError::InvalidRequest(e.to_string()))
            })
            .collect()
    }

    fn describe(&self) -> String {
        "constructive".into()
    }
}

/// Where an external generator lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Program plus arguments, spoken to over stdin/stdout.
    Process { program: String, args: Vec<String> },
    /// Base URL; requests go to `{url}/generate`.
    Http { url: String },
}

impl FromStr for Endpoint {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(Endpoint::Http {
                url: s.trim_end_matches('/').to_string(),
            });
        }
        let mut parts = s.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| ProtocolError::InvalidRequest("empty generator endpoint".into()))?;
        Ok(Endpoint::Process {
            program,
            args: parts.collect(),
        })
    }
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Running {
    fn spawn(program: &str, args: &[String]) -> Result<Running, ProtocolError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ProtocolError::Unreachable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Running {
            child,
            stdin,
            lines: rx,
        })
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A generator child process. The process is started lazily, kept alive
/// between requests, and restarted after a timeout or protocol failure.
/// Requests are serialized: one in flight at a time.
pub struct ProcessGenerator {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    running: Mutex<Option<Running>>,
}

impl ProcessGenerator {
    pub fn new(program: impl Into<String>, args: Vec<String>, timeout: Duration) -> Self {
        ProcessGenerator {
            program: program.into(),
            args,
            timeout,
            running: Mutex::new(None),
        }
    }

    fn exchange(
        &self,
        slot: &mut Option<Running>,
        request: &GenRequest,
    ) -> Result<GenResponse, ProtocolError> {
        if slot.is_none() {
            *slot = Some(Running::spawn(&self.program, &self.args)?);
        }
        let running = slot.as_mut().expect("spawned above");
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        running
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| running.stdin.flush())
            .map_err(|e| {
                ProtocolError::ProtocolViolation(format!("generator closed its input: {e}"))
            })?;
        let reply = match running.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => {
                return Err(ProtocolError::ProtocolViolation(format!(
                    "reading generator output: {e}"
                )))
            }
            Err(RecvTimeoutError::Timeout) => return Err(ProtocolError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(ProtocolError::ProtocolViolation(
                    "generator exited without replying".into(),
                ))
            }
        };
        serde_json::from_str(&reply)
            .map_err(|e| ProtocolError::ProtocolViolation(format!("malformed response line: {e}")))
    }
}

impl SceneGenerator for ProcessGenerator {
    fn generate(&self, request: &GenRequest) -> Result<Vec<TileGrid>, ProtocolError> {
        request.validate()?;
        let mut slot = self.running.lock().unwrap_or_else(|p| p.into_inner());
        let result = self
            .exchange(&mut slot, request)
            .and_then(|resp| validate_response(request, resp));
        if matches!(
            result,
            Err(ProtocolError::Timeout(_) | ProtocolError::ProtocolViolation(_))
        ) {
            // the stream may be out of step now; start over next time
            log::warn!("restarting generator {} after failure", self.program);
            *slot = None;
        }
        result
    }

    fn describe(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A generator reachable over HTTP at `{url}/generate`.
pub struct HttpGenerator {
    url: String,
    timeout: Duration,
    agent: ureq::Agent,
    in_flight: Mutex<()>,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpGenerator {
            url: url.into(),
            timeout,
            agent,
            in_flight: Mutex::new(()),
        }
    }
}

impl SceneGenerator for HttpGenerator {
    fn generate(&self, request: &GenRequest) -> Result<Vec<TileGrid>, ProtocolError> {
        request.validate()?;
        let _guard = self.in_flight.lock().unwrap_or_else(|p| p.into_inner());
        let body = serde_json::to_string(request).expect("request serializes");
        let url = format!("{}/generate", self.url);
        let mut resp = self
            .agent
            .post(&url)
            .header("content-type", "application/json")
            .send(body.as_bytes())
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ProtocolError::Timeout(self.timeout),
                other => ProtocolError::Unreachable(format!("{url}: {other}")),
            })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => ProtocolError::Timeout(self.timeout),
            other => ProtocolError::ProtocolViolation(format!("reading body: {other}")),
        })?;
        let parsed: Result<GenResponse, _> = serde_json::from_str(&text);
        if !(200..300).contains(&status) {
            // prefer the generator's own error body when it sent one
            return match parsed {
                Ok(response) if response.error.is_some() => validate_response(request, response),
                _ => Err(ProtocolError::GeneratorError {
                    code: format!("http_{status}"),
                    message: text.chars().take(200).collect(),
                }),
            };
        }
        let response = parsed.map_err(|e| {
            ProtocolError::ProtocolViolation(format!("malformed response body: {e}"))
        })?;
        validate_response(request, response)
    }

    fn describe(&self) -> String {
        self.url.clone()
    }
}

/// Opens a generator for `endpoint`.
pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Box<dyn SceneGenerator> {
    match endpoint {
        Endpoint::Process { program, args } => Box::new(ProcessGenerator::new(
            program.clone(),
            args.clone(),
            timeout,
        )),
        Endpoint::Http { url } => Box::new(HttpGenerator::new(url.clone(), timeout)),
    }
}

/// Sends one request to an external endpoint and validates the reply.
pub fn generate_external(
    endpoint: &Endpoint,
    request: &GenRequest,
    timeout: Duration,
) -> Result<Vec<TileGrid>, ProtocolError> {
    connect(endpoint, timeout).generate(request)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub checks: Vec<ConformanceCheck>,
    /// Same seed twice gave the same scenes. Informational: nondeterministic
    /// generators are allowed but flagged.
    pub deterministic: Option<bool>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Exercises a generator with a few requests and records what it got right.
pub fn conformance(generator: &dyn SceneGenerator, prompt: &str) -> ConformanceReport {
    let mut checks = Vec::new();
    let mut record = |name: &str, result: &Result<Vec<TileGrid>, ProtocolError>| {
        checks.push(ConformanceCheck {
            name: name.to_string(),
            passed: result.is_ok(),
            detail: match result {
                Ok(scenes) => format!("{} scenes", scenes.len()),
                Err(e) => e.to_string(),
            },
        });
    };
    let mut single = GenRequest::new("conformance-1", prompt);
    single.seed = 11;
    let first = generator.generate(&single);
    record("single sample", &first);
    let mut triple = GenRequest::new("conformance-3", prompt);
    triple.num_samples = 3;
    record("three samples", &generator.generate(&triple));
    let mut wide = GenRequest::new("conformance-wide", prompt);
    wide.width = 32;
    record("width 32", &generator.generate(&wide));
    let again = generator.generate(&single);
    let deterministic = match (&first, &again) {
        (Ok(a), Ok(b)) => Some(a == b),
        _ => None,
    };
    ConformanceReport {
        checks,
        deterministic,
    }
}
