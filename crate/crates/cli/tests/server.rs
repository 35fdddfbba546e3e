use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use level_forge::project::ProjectStore;
use level_forge::protocol::{Constructive, GenRequest, ProtocolError, SceneGenerator};
use level_forge::solve::MoveModel;
use level_forge::tiles::TileGrid;
use level_forge_cli::server::{router, AppState};

#[derive(Debug)]
enum Failing {
    Timeout,
    Model,
}

impl SceneGenerator for Failing {
    fn generate(&self, _req: &GenRequest) -> Result<Vec<TileGrid>, ProtocolError> {
        Err(match self {
            Failing::Timeout => ProtocolError::Timeout(Duration::from_secs(1)),
            Failing::Model => ProtocolError::GeneratorError {
                code: "model_failure".into(),
                message: "refused".into(),
            },
        })
    }

    fn describe(&self) -> String {
        format!("failing:{self:?}")
    }
}

struct Harness {
    _dir: tempfile::TempDir,
    app: axum::Router,
}

fn harness_with(generator: Arc<dyn SceneGenerator>) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState {
        generator,
        store: Arc::new(ProjectStore::open(dir.path()).unwrap()),
        model: MoveModel::default(),
    };
    Harness {
        _dir: dir,
        app: router(state),
    }
}

fn harness() -> Harness {
    harness_with(Arc::new(Constructive))
}

impl Harness {
    async fn send(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header(header::CONTENT_TYPE, "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self
            .app
            .clone()
            .oneshot(req.body(body).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        (status, bytes)
    }

    async fn json(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.send(method, uri, body).await;
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| panic!("not json: {}", String::from_utf8_lossy(&bytes)))
        };
        (status, value)
    }
}

fn flat_rows() -> Vec<String> {
    let mut rows = vec!["-".repeat(16); 14];
    rows.push("X".repeat(16));
    rows.push("X".repeat(16));
    rows
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or("")
}

#[tokio::test]
async fn generate_annotates_every_sample() {
    let h = harness();
    let req =
        json!({"id": "r1", "prompt": "full floor.", "seed": 7, "num_samples": 2, "width": 16});
    let (status, v) = h.json(Method::POST, "/generate", Some(req)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["id"], "r1");
    let scenes = v["scenes"].as_array().unwrap();
    assert_eq!(scenes.len(), 2);
    for s in scenes {
        assert_eq!(s["scene"].as_array().unwrap().len(), 16);
        assert_eq!(s["caption"], "full floor.");
        assert_eq!(s["c_score"], 1.0);
    }
}

#[tokio::test]
async fn generate_rejects_bad_requests() {
    let h = harness();
    let (status, v) = h
        .json(
            Method::POST,
            "/generate",
            Some(json!({"id": "x", "prompt": "full floor.", "num_samples": 0})),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "invalid_request");

    let (status, _) = h
        .json(Method::POST, "/generate", Some(json!({"prompt": 3})))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn generator_failures_map_to_gateway_statuses() {
    let req = json!({"id": "x", "prompt": "full floor."});
    let (status, v) = harness_with(Arc::new(Failing::Model))
        .json(Method::POST, "/generate", Some(req.clone()))
        .await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(error_code(&v), "generator_error");
    assert!(v["error"]["message"]
        .as_str()
        .unwrap()
        .contains("model_failure"));

    let (status, v) = harness_with(Arc::new(Failing::Timeout))
        .json(Method::POST, "/generate", Some(req))
        .await;
    assert_eq!(status, StatusCode::GATEWAY_TIMEOUT);
    assert_eq!(error_code(&v), "generator_timeout");
}

#[tokio::test]
async fn caption_and_score() {
    let h = harness();
    let (status, v) = h
        .json(
            Method::POST,
            "/caption",
            Some(json!({"scene": flat_rows()})),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["regular"], "full floor.");
    assert!(v["absence"].as_str().unwrap().contains("no enemies."));

    let (status, v) = h
        .json(
            Method::POST,
            "/score",
            Some(json!({"prompt": "full floor.", "scene": flat_rows()})),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["c_score"], 1.0);

    let (status, v) = h
        .json(
            Method::POST,
            "/score",
            Some(json!({"prompt": "full floor. two enemies.", "caption": "full floor."})),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert!((v["c_score"].as_f64().unwrap() - 16.0 / 18.0).abs() < 1e-9);

    let (status, v) = h
        .json(
            Method::POST,
            "/score",
            Some(json!({"prompt": "flying pigs.", "caption": "full floor."})),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "invalid_request");

    let mut short = flat_rows();
    short.pop();
    let (status, _) = h
        .json(Method::POST, "/caption", Some(json!({"scene": short})))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn concepts_lists_the_grammar() {
    let h = harness();
    let (status, v) = h.json(Method::GET, "/concepts", None).await;
    assert_eq!(status, StatusCode::OK);
    let concepts = v["concepts"].as_array().unwrap();
    assert_eq!(concepts.len(), 18);
    let selectable = concepts
        .iter()
        .filter(|c| c["prompt_selectable"] == true)
        .count();
    assert_eq!(selectable, 16);
}

#[tokio::test]
async fn solve_reports_level_and_scenes() {
    let h = harness();
    let mut pit = flat_rows();
    pit[14] = "XXXXX------XXXXX".into();
    pit[15] = "XXXXX------XXXXX".into();
    let (status, v) = h
        .json(
            Method::POST,
            "/solve",
            Some(json!({"scenes": [flat_rows(), pit]})),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["level"]["beatable"], false);
    assert_eq!(v["scenes"].as_array().unwrap().len(), 2);

    let (status, _) = h
        .json(Method::POST, "/solve", Some(json!({"scenes": []})))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn project_lifecycle() {
    let h = harness();
    let (status, v) = h
        .json(
            Method::POST,
            "/projects",
            Some(json!({"id": "world-1", "name": "World 1"})),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_eq!(v["revision"], 0);

    let (status, v) = h
        .json(Method::POST, "/projects", Some(json!({"id": "world-1"})))
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&v), "exists");

    let (status, v) = h
        .json(Method::POST, "/projects", Some(json!({"id": "../etc"})))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");

    let mut rev = 0;
    for i in 0..3 {
        let mut scene = flat_rows();
        scene[13].replace_range(i..i + 1, "E");
        let (status, v) = h
            .json(
                Method::POST,
                "/projects/world-1/scenes",
                Some(json!({"scene": scene, "revision": rev})),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        rev = v["revision"].as_u64().unwrap();
    }
    assert_eq!(rev, 3);

    // a stale revision is refused
    let (status, v) = h
        .json(
            Method::POST,
            "/projects/world-1/scenes",
            Some(json!({"scene": flat_rows(), "revision": 1})),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&v), "conflict");

    let (status, v) = h
        .json(
            Method::POST,
            "/projects/world-1/scenes/0/move",
            Some(json!({"to": 2})),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["scenes"][2][13].as_str().unwrap().as_bytes()[0], b'E');

    let (status, _) = h
        .json(
            Method::POST,
            "/projects/world-1/scenes/9/move",
            Some(json!({"to": 0})),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, bytes) = h.send(Method::GET, "/projects/world-1/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(bytes).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.len() == 48));

    let (status, v) = h
        .json(Method::DELETE, "/projects/world-1/scenes/1", None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["scenes"].as_array().unwrap().len(), 2);

    let (status, v) = h.json(Method::GET, "/projects", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["projects"].as_array().unwrap().len(), 1);

    let (status, _) = h
        .json(Method::DELETE, "/projects/world-1?revision=0", None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = h.json(Method::DELETE, "/projects/world-1", None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, v) = h.json(Method::GET, "/projects/world-1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "not_found");
}
