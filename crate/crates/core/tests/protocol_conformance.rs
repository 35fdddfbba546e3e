use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::{Duration, Instant};

use level_forge::concepts::{detect, ConceptKind};
use level_forge::protocol::{
    conformance, Endpoint, GenRequest, HttpGenerator, ProcessGenerator, ProtocolError,
    SceneGenerator,
};

const MOCK: &str = env!("CARGO_BIN_EXE_level-forge-mock-generator");

fn mock(mode: &str) -> ProcessGenerator {
    ProcessGenerator::new(
        MOCK,
        vec!["--mode".into(), mode.into()],
        Duration::from_secs(20),
    )
}

fn request(n: u32) -> GenRequest {
    let mut r = GenRequest::new("req-1", "full floor. two enemies.");
    r.num_samples = n;
    r.seed = 4;
    r
}

fn violation(mode: &str) -> String {
    match mock(mode).generate(&request(1)) {
        Err(ProtocolError::ProtocolViolation(m)) => m,
        other => panic!("{mode}: expected a protocol violation, got {other:?}"),
    }
}

#[test]
fn constructive_mock_round_trip() {
    let generator = mock("constructive");
    let scenes = generator.generate(&request(3)).unwrap();
    assert_eq!(scenes.len(), 3);
    for scene in &scenes {
        assert_eq!((scene.height(), scene.width()), (16, 16));
        assert_eq!(detect(scene).unwrap().count(ConceptKind::Enemy), 2);
    }
    // the process is reused between requests
    let again = generator.generate(&request(3)).unwrap();
    assert_eq!(scenes, again);
}

#[test]
fn sky_scenes_are_accepted() {
    let scenes = mock("sky").generate(&request(2)).unwrap();
    assert_eq!(scenes.len(), 2);
    let report = detect(&scenes[0]).unwrap();
    assert!(report.counts.values().all(|&n| n == 0));
}

#[test]
fn violations_are_rejected() {
    assert!(violation("short-scene").contains("15 rows"));
    assert!(violation("bad-symbol").contains("'Z'"));
    assert!(violation("wrong-width").contains("width 17"));
    assert!(violation("wrong-id").contains("echo"));
    assert!(violation("wrong-count").contains("expected 1 scenes, got 2"));
    assert!(violation("garbage").contains("malformed"));
    assert!(violation("exit").contains("exited"));
}

#[test]
fn generator_errors_pass_through() {
    match mock("error").generate(&request(1)) {
        Err(ProtocolError::GeneratorError { code, message }) => {
            assert_eq!(code, "model_failure");
            assert!(message.contains("refused"));
        }
        other => panic!("{other:?}"),
    }
    // the constructive mock reports grammar errors the same way
    let mut bad = request(1);
    bad.prompt = "a purple elephant.".into();
    assert!(matches!(
        mock("constructive").generate(&bad),
        Err(ProtocolError::GeneratorError { code, .. }) if code == "bad_request"
    ));
}

#[test]
fn slow_generator_times_out() {
    let slow = ProcessGenerator::new(
        MOCK,
        vec![
            "--mode".into(),
            "sleep".into(),
            "--delay-ms".into(),
            "1500".into(),
        ],
        Duration::from_millis(200),
    );
    let started = Instant::now();
    assert_eq!(
        slow.generate(&request(1)),
        Err(ProtocolError::Timeout(Duration::from_millis(200)))
    );
    assert!(started.elapsed() < Duration::from_millis(1400));
}

#[test]
fn missing_program_is_unreachable() {
    let g = ProcessGenerator::new("/nonexistent/generator", vec![], Duration::from_secs(1));
    assert!(matches!(
        g.generate(&request(1)),
        Err(ProtocolError::Unreachable(_))
    ));
}

#[test]
fn conformance_report_flags_nothing_for_mock() {
    let report = conformance(&mock("constructive"), "full floor. one pipe.");
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.deterministic, Some(true));
    let broken = conformance(&mock("wrong-id"), "full floor.");
    assert!(!broken.passed());
}

/// Serves one canned HTTP response per connection, `count` times.
fn canned_server(status: u16, body: String, count: usize) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming().take(count) {
            let mut stream = stream.unwrap();
            let mut buf = [0u8; 8192];
            let mut seen = Vec::new();
            // read headers and the declared body
            loop {
                let n = stream.read(&mut buf).unwrap();
                seen.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&seen);
                if let Some(split) = text.find("\r\n\r\n") {
                    let len = text
                        .lines()
                        .find_map(|l| {
                            l.to_ascii_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if seen.len() >= split + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    format!("http://{addr}")
}

#[test]
fn http_client_validates() {
    let sky = vec!["-".repeat(16); 16];
    let ok = serde_json::json!({"id": "req-1", "scenes": [sky]}).to_string();
    let url = canned_server(200, ok, 1);
    let endpoint: Endpoint = url.parse().unwrap();
    assert!(matches!(endpoint, Endpoint::Http { .. }));
    let scenes = HttpGenerator::new(url, Duration::from_secs(10))
        .generate(&request(1))
        .unwrap();
    assert_eq!(scenes.len(), 1);

    let short =
        serde_json::json!({"id": "req-1", "scenes": [vec!["-".repeat(16); 15]]}).to_string();
    let url = canned_server(200, short, 1);
    assert!(matches!(
        HttpGenerator::new(url, Duration::from_secs(10)).generate(&request(1)),
        Err(ProtocolError::ProtocolViolation(_))
    ));

    let url = canned_server(500, "boom".into(), 1);
    assert!(matches!(
        HttpGenerator::new(url, Duration::from_secs(10)).generate(&request(1)),
        Err(ProtocolError::GeneratorError { code, .. }) if code == "http_500"
    ));
}

#[test]
fn http_timeout() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        let (_stream, _) = listener.accept().unwrap();
        thread::sleep(Duration::from_secs(3));
    });
    let g = HttpGenerator::new(format!("http://{addr}"), Duration::from_millis(300));
    assert!(matches!(
        g.generate(&request(1)),
        Err(ProtocolError::Timeout(_))
    ));
}
