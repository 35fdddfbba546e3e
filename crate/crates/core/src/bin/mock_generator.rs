//! Stand-in generator speaking the wire protocol on stdin/stdout, with modes
//! that misbehave in specific ways for conformance testing.
//!
//! Usage: level-forge-mock-generator [--mode MODE] [--delay-ms N]
//!
//! Modes: constructive (default), sky, short-scene, bad-symbol, wrong-width,
//! wrong-id, wrong-count, error, sleep, garbage, exit.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use level_forge::protocol::{Constructive, GenRequest, GenResponse, ProtocolError, SceneGenerator};

const MODES: [&str; 11] = [
    "constructive",
    "sky",
    "short-scene",
    "bad-symbol",
    "wrong-width",
    "wrong-id",
    "wrong-count",
    "error",
    "sleep",
    "garbage",
    "exit",
];

fn sky(width: usize, rows: usize) -> Vec<String> {
    vec!["-".repeat(width); rows]
}

fn respond(mode: &str, req: &GenRequest) -> Option<String> {
    let n = req.num_samples as usize;
    let resp = match mode {
        "constructive" => match Constructive.generate(req) {
            Ok(scenes) => GenResponse::ok(&req.id, &scenes),
            Err(ProtocolError::InvalidRequest(m)) => GenResponse::failed(&req.id, "bad_request", m),
            Err(e) => GenResponse::failed(&req.id, "internal", e.to_string()),
        },
        "sky" | "sleep" => GenResponse {
            id: req.id.clone(),
            scenes: vec![sky(req.width, 16); n],
            error: None,
        },
        "short-scene" => GenResponse {
            id: req.id.clone(),
            scenes: vec![sky(req.width, 15); n],
            error: None,
        },
        "bad-symbol" => {
            let mut scene = sky(req.width, 16);
            scene[8].replace_range(0..1, "Z");
            GenResponse {
                id: req.id.clone(),
                scenes: vec![scene; n],
                error: None,
            }
        }
        "wrong-width" => GenResponse {
            id: req.id.clone(),
            scenes: vec![sky(req.width + 1, 16); n],
            error: None,
        },
        "wrong-id" => GenResponse {
            id: format!("{}-not", req.id),
            scenes: vec![sky(req.width, 16); n],
            error: None,
        },
        "wrong-count" => GenResponse {
            id: req.id.clone(),
            scenes: vec![sky(req.width, 16); n + 1],
            error: None,
        },
        "error" => GenResponse::failed(&req.id, "model_failure", "the mock model refused"),
        "garbage" => return Some("this is not json".into()),
        _ => return None,
    };
    Some(serde_json::to_string(&resp).expect("response serializes"))
}

fn main() -> ExitCode {
    let mut mode = "constructive".to_string();
    let mut delay = Duration::from_millis(0);
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--mode" => mode = args.next().unwrap_or_default(),
            "--delay-ms" => {
                let ms = args.next().and_then(|v| v.parse().ok()).unwrap_or(0);
                delay = Duration::from_millis(ms);
            }
            _ => {
                eprintln!("unknown argument {arg}");
                return ExitCode::from(2);
            }
        }
    }
    if !MODES.contains(&mode.as_str()) {
        eprintln!("unknown mode {mode}; expected one of {}", MODES.join(", "));
        return ExitCode::from(2);
    }
    if mode == "sleep" && delay.is_zero() {
        delay = Duration::from_secs(3600);
    }

    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<GenRequest>(&line) {
            Ok(req) => {
                if mode == "exit" {
                    return ExitCode::SUCCESS;
                }
                thread::sleep(delay);
                respond(&mode, &req)
            }
            Err(e) => Some(
                serde_json::to_string(&GenResponse::failed("", "bad_request", e.to_string()))
                    .unwrap(),
            ),
        };
        if let Some(reply) = reply {
            if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
                break;
            }
        }
    }
    ExitCode::SUCCESS
}
