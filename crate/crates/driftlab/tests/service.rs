use std::path::Path;

use driftlab::label_store::LabelStore;
use driftlab::service::{router, ApiErrorBody, AppState, DetectResponse};
use driftlab::workflow::{self, PeriodQuery, TrainSettings, DEFAULT_MODEL_ID};
use driftlab::workspace::DataDir;
use driftlab_core::ensemble::EnsembleConfig;
use driftlab_core::labels::{DriftLabel, ExpertInfo};
use driftlab_core::scada::{DriftInjection, DriftKind, GeneratorConfig, InjectionTarget};
use reqwest::StatusCode;
use serde_json::{json, Value};

const T: &str = "T01";
const M: &str = DEFAULT_MODEL_ID;
const DAY: i64 = 86_400;

/// A small trained turbine in a fresh data directory.
fn prepare(dir: &Path) -> (DataDir, GeneratorConfig) {
    let data = DataDir::new(dir);
    let gen = GeneratorConfig { n_records: 30 * 144, seed: 2, ..GeneratorConfig::default() };
    let inj = DriftInjection {
        kind: DriftKind::Sudden,
        target: InjectionTarget::PowerOffset,
        start: gen.start + 20 * DAY,
        end: gen.start + 25 * DAY,
        amplitude: -250.0,
        period: None,
    };
    workflow::generate(&data, T, &gen, vec![inj]).unwrap();
    let settings = TrainSettings {
        ensemble: EnsembleConfig { batch_size: 1440, ..EnsembleConfig::default() },
        train_until: Some(gen.start + 15 * DAY),
        seed: 2,
        ..TrainSettings::default()
    };
    workflow::train(&data, T, M, &settings).unwrap();
    workflow::compute_residuals(&data, T, M).unwrap();
    let store = LabelStore::open(data.labels_dir(), false).unwrap();
    for (id, name) in [("e1", "Expert One"), ("e2", "Expert Two")] {
        store.add_expert(ExpertInfo { expert_id: id.into(), display_name: name.into() }).unwrap();
    }
    (data, gen)
}

struct Server {
    base: String,
    client: reqwest::Client,
    handle: tokio::task::JoinHandle<()>,
}

impl Drop for Server {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

async fn start(data: &DataDir, read_only: bool) -> Server {
    let state = AppState::open(data.clone(), read_only).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = tokio::spawn(async move {
        axum::serve(listener, router(state)).await.unwrap();
    });
    Server { base: format!("http://{addr}"), client: reqwest::Client::new(), handle }
}

impl Server {
    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.get(self.url(path)).send().await.unwrap();
        (r.status(), r.json().await.unwrap())
    }

    async fn post(&self, path: &str, body: &Value, key: Option<&str>) -> (StatusCode, Value) {
        let mut req = self.client.post(self.url(path)).json(body);
        if let Some(k) = key {
            req = req.header("Idempotency-Key", k);
        }
        let r = req.send().await.unwrap();
        (r.status(), r.json().await.unwrap())
    }
}

fn assert_error(status: StatusCode, body: &Value, expected: StatusCode) -> ApiErrorBody {
    assert_eq!(status, expected, "{body}");
    let err: ApiErrorBody = serde_json::from_value(body.clone()).unwrap();
    assert!(!err.code.is_empty() && !err.message.is_empty());
    assert_eq!(uuid::Uuid::parse_str(&err.correlation_id).unwrap().get_version_num(), 4);
    err
}

fn label_body(gen: &GeneratorConfig, expert: &str, from_day: i64, to_day: i64) -> Value {
    json!({
        "turbine_id": T,
        "model_id": M,
        "start": (gen.start + from_day * DAY).to_string(),
        "end": (gen.start + to_day * DAY).to_string(),
        "drift_type": "sudden",
        "cause": "power_limitation",
        "severity": 3,
        "confidence": "high",
        "expert_id": expert,
        "note": "curtailment",
    })
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn turbines_and_experts() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = prepare(dir.path());
    let s = start(&data, false).await;
    let (st, body) = s.get("/turbines").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body, json!([{ "turbine_id": T, "models": [M], "residual_models": [M] }]));
    let (st, body) = s.get("/experts").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body.as_array().unwrap().len(), 2);
    assert_eq!(body[0]["expert_id"], "e1");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn residual_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (data, gen) = prepare(dir.path());
    let s = start(&data, false).await;
    let n = 30 * 144;

    let (st, page) = s.get(&format!("/turbines/{T}/models/{M}/residuals?max_points={n}")).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(page["points"].as_array().unwrap().len(), n);
    assert_eq!(page["downsampled"], false);

    let (_, small) = s.get(&format!("/turbines/{T}/models/{M}/residuals?max_points={}", n / 10)).await;
    let pts = small["points"].as_array().unwrap();
    assert!(pts.len() <= n / 10);
    assert_eq!(pts[0]["timestamp"], page["points"][0]["timestamp"]);
    assert_eq!(pts[pts.len() - 1]["timestamp"], page["points"][n - 1]["timestamp"]);

    let from = (gen.start + DAY).to_string();
    let to = (gen.start + 2 * DAY).to_string();
    let (st, day) = s.get(&format!("/turbines/{T}/models/{M}/residuals?from={from}&to={to}&overlay=labels,events")).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(day["points"].as_array().unwrap().len(), 144);
    assert_eq!(day["points"][0]["timestamp"], json!(from));
    assert_eq!(day["labels"], json!([]));
    assert_eq!(day["events"], json!([]));

    let (st, body) = s.get(&format!("/turbines/{T}/models/{M}/residuals?from={to}&to={from}")).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, body) = s.get(&format!("/turbines/{T}/models/{M}/residuals?overlay=bands")).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, body) = s.get(&format!("/turbines/{T}/models/{M}/residuals?from=yesterday")).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, body) = s.get(&format!("/turbines/T02/models/{M}/residuals")).await;
    assert_eq!(assert_error(st, &body, StatusCode::NOT_FOUND).code, "not_found");
    let (st, body) = s.get(&format!("/turbines/{T}/models/other/residuals")).await;
    assert_error(st, &body, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn posting_and_querying_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (data, gen) = prepare(dir.path());
    let s = start(&data, false).await;

    let (st, created) = s.post("/labels", &label_body(&gen, "e1", 3, 5), Some("k-1")).await;
    assert_eq!(st, StatusCode::CREATED, "{created}");
    let label: DriftLabel = serde_json::from_value(created.clone()).unwrap();
    assert_eq!(label.label_id, "L00000001");
    assert_eq!(label.start, gen.start + 3 * DAY);

    let (st, replay) = s.post("/labels", &label_body(&gen, "e1", 3, 5), Some("k-1")).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(replay, created);

    let (st, body) = s.post("/labels", &label_body(&gen, "e1", 5, 3), None).await;
    let err = assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.fields.iter().map(|f| f.field.as_str()).collect::<Vec<_>>(), ["end"]);

    let (st, body) = s.post("/labels", &label_body(&gen, "intruder", 3, 5), None).await;
    assert_error(st, &body, StatusCode::FORBIDDEN);

    let mut extra = label_body(&gen, "e1", 3, 5);
    extra["colour"] = json!("red");
    let (st, body) = s.post("/labels", &extra, None).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);

    s.post("/labels", &label_body(&gen, "e2", 10, 12), None).await;
    let (st, all) = s.get("/labels").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(all.as_array().unwrap().len(), 2);
    let (_, e2) = s.get("/labels?expert_id=e2").await;
    assert_eq!(e2.as_array().unwrap().len(), 1);
    let from = (gen.start + 4 * DAY).to_string();
    let to = (gen.start + 6 * DAY).to_string();
    let (_, window) = s.get(&format!("/labels?turbine_id={T}&from={from}&to={to}")).await;
    assert_eq!(window.as_array().unwrap()[0]["label_id"], "L00000001");
    let (_, by_cause) = s.get("/labels?cause=wear").await;
    assert_eq!(by_cause, json!([]));

    let (_, page) = s.get(&format!("/turbines/{T}/models/{M}/residuals?from={from}&to={to}&overlay=labels")).await;
    assert_eq!(page["labels"].as_array().unwrap().len(), 1);
    assert!(page.get("events").is_none());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn detect_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (data, gen) = prepare(dir.path());
    let s = start(&data, false).await;

    let (st, empty) = s.post("/detect", &json!({ "turbine_id": T, "model_id": M, "detectors": {} }), None).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(empty["events"], json!({}));
    assert_eq!(empty["status"], "completed");

    let request = json!({ "turbine_id": T, "model_id": M, "detectors": { "CUSUM": {}, "PH": { "lambda": 25.0 } } });
    let (st, first) = s.post("/detect", &request, Some("run-a")).await;
    assert_eq!(st, StatusCode::CREATED);
    let first: DetectResponse = serde_json::from_value(first).unwrap();
    let (st, again) = s.post("/detect", &request, Some("run-a")).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(serde_json::from_value::<DetectResponse>(again).unwrap(), first);
    let (_, fresh) = s.post("/detect", &request, None).await;
    let fresh: DetectResponse = serde_json::from_value(fresh).unwrap();
    assert_ne!(fresh.run_id, first.run_id);
    assert_eq!(fresh.events, first.events);

    let drift = gen.start + 20 * DAY;
    assert!(first.events["CUSUM"].iter().any(|e| e.timestamp >= drift && e.timestamp <= drift + 2 * DAY));

    let (_, page) = s.get(&format!("/turbines/{T}/models/{M}/residuals?overlay=events&run_id={}", first.run_id)).await;
    let ticks: Vec<&str> = page["events"].as_array().unwrap().iter().map(|e| e["timestamp"].as_str().unwrap()).collect();
    let mut expected: Vec<String> = first.events.values().flatten().map(|e| e.timestamp.to_string()).collect();
    expected.sort();
    let mut ticks: Vec<String> = ticks.into_iter().map(String::from).collect();
    ticks.sort();
    assert_eq!(ticks, expected);

    let (st, body) = s.post("/detect", &json!({ "turbine_id": T, "model_id": M, "detectors": { "DDM": {} } }), None).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, body) = s.post("/detect", &json!({ "turbine_id": T, "model_id": M, "detectors": { "ADWIN": { "delta": 0.0 } } }), None).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, body) = s.post("/detect", &json!({ "turbine_id": "T09", "model_id": M, "detectors": {} }), None).await;
    assert_error(st, &body, StatusCode::NOT_FOUND);

    let r = s
        .client
        .post(s.url("/evaluate"))
        .json(&json!({ "run_id": first.run_id, "source": "ground_truth", "tolerance_s": 3600 }))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let raw = r.text().await.unwrap();
    let store = LabelStore::open(data.labels_dir(), true).unwrap();
    let direct = workflow::evaluate_run(&data, &store, &first.run_id, &PeriodQuery::default(), 3600).unwrap();
    assert_eq!(raw, serde_json::to_string(&direct).unwrap());
    let report: Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(report["policy"], "period-any-event");
    assert_eq!(report["results"].as_array().unwrap().len(), 2);

    let (st, body) = s.post("/evaluate", &json!({ "run_id": "R12345678", "source": "expert", "tolerance_s": 0 }), None).await;
    assert_error(st, &body, StatusCode::NOT_FOUND);
    let (st, body) = s.post("/evaluate", &json!({ "run_id": first.run_id, "tolerance_s": -1 }), None).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, body) = s.post("/evaluate", &json!({ "run_id": first.run_id, "source": "rumour" }), None).await;
    assert_error(st, &body, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn read_only_mode_forbids_writes() {
    let dir = tempfile::tempdir().unwrap();
    let (data, gen) = prepare(dir.path());
    let s = start(&data, true).await;
    let (st, body) = s.post("/labels", &label_body(&gen, "e1", 3, 5), None).await;
    assert_eq!(assert_error(st, &body, StatusCode::FORBIDDEN).code, "read_only");
    let (st, body) = s.post("/detect", &json!({ "turbine_id": T, "model_id": M, "detectors": {} }), None).await;
    assert_error(st, &body, StatusCode::FORBIDDEN);
    let (st, _) = s.get("/labels").await;
    assert_eq!(st, StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn unknown_routes_carry_error_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = prepare(dir.path());
    let s = start(&data, false).await;
    let (st, body) = s.get("/nothing").await;
    assert_error(st, &body, StatusCode::NOT_FOUND);
    let r = s.client.delete(s.url("/labels")).send().await.unwrap();
    let st = r.status();
    assert_error(st, &r.json().await.unwrap(), StatusCode::METHOD_NOT_ALLOWED);
    let r = s.client.post(s.url("/labels")).body("{").header("content-type", "application/json").send().await.unwrap();
    let st = r.status();
    assert_error(st, &r.json().await.unwrap(), StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrent_posts_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (data, gen) = prepare(dir.path());
    let s = start(&data, false).await;
    let mut tasks = Vec::new();
    for i in 0..100i64 {
        let client = s.client.clone();
        let url = s.url("/labels");
        let body = label_body(&gen, if i % 2 == 0 { "e1" } else { "e2" }, i % 25, i % 25 + 1);
        tasks.push(tokio::spawn(async move {
            let r = client.post(url).header("Idempotency-Key", format!("post-{i}")).json(&body).send().await.unwrap();
            assert_eq!(r.status(), StatusCode::CREATED);
            r.json::<DriftLabel>().await.unwrap()
        }));
    }
    let mut posted = Vec::new();
    for t in tasks {
        posted.push(t.await.unwrap());
    }
    drop(s);

    let reopened = LabelStore::open(data.labels_dir(), true).unwrap();
    let mut stored = (*reopened.snapshot()).clone();
    stored.sort_by(|a, b| a.label_id.cmp(&b.label_id));
    posted.sort_by(|a, b| a.label_id.cmp(&b.label_id));
    assert_eq!(stored.len(), 100);
    assert_eq!(serde_json::to_vec(&stored).unwrap(), serde_json::to_vec(&posted).unwrap());
}
