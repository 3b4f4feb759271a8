use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;

use frictionbench_core::corpus::{load_corpus, SourceKind};
use frictionbench_core::embodied::{agent_script, generate_world, DEFAULT_ROOMS};
use frictionbench_core::llm::{ChatBackend, LlmError, Script, ScriptEntry, ScriptedBackend};
use frictionbench_core::taxonomy::FrictionCategory;
use frictionbench_service::{BackendFactory, Server, ServiceConfig, ServiceError, SessionMode};
use serde_json::{json, Value};
use tokio::sync::oneshot;

struct Running {
    base: String,
    stop: Option<oneshot::Sender<()>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Running {
    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn scripted(script: Script) -> Arc<dyn BackendFactory> {
    let script = Arc::new(script);
    Arc::new(move |_mode: SessionMode| -> Result<Box<dyn ChatBackend>, LlmError> {
        Ok(Box::new(ScriptedBackend::new(script.clone())))
    })
}

fn start_with(store: &Path, backends: Arc<dyn BackendFactory>) -> Running {
    let dialogues = load_corpus(fixtures().join("dialogues.jsonl"), Some(SourceKind::MultiwozLike)).unwrap();
    let config = ServiceConfig {
        addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        dialogues,
        store_path: store.to_path_buf(),
        db_seed: 5,
        backends,
    };
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let handle = thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let server = Server::bind(config).await.unwrap();
            addr_tx.send(server.local_addr().unwrap()).unwrap();
            server
                .run(async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
        });
    });
    let addr = addr_rx.recv().unwrap();
    Running {
        base: format!("http://{addr}"),
        stop: Some(stop_tx),
        handle: Some(handle),
    }
}

fn start(store: &Path) -> Running {
    start_with(store, scripted(Script::default()))
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

fn get(url: &str) -> (u16, Value) {
    let mut r = agent().get(url).call().unwrap();
    let status = r.status().as_u16();
    (status, r.body_mut().read_json().unwrap_or(Value::Null))
}

fn post(url: &str, body: Value) -> (u16, Value) {
    let mut r = agent().post(url).send_json(body).unwrap();
    let status = r.status().as_u16();
    (status, r.body_mut().read_json().unwrap_or(Value::Null))
}

#[test]
fn health_and_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(&dir.path().join("a.jsonl"));
    let body = agent().get(&s.url("/health")).call().unwrap().body_mut().read_to_string().unwrap();
    assert_eq!(body, "ok");
    let (status, tax) = get(&s.url("/taxonomy"));
    assert_eq!(status, 200);
    let cats = tax["categories"].as_array().unwrap();
    assert_eq!(cats.len(), 6);
    assert!(cats.iter().any(|c| c["name"] == "probing" && c["subcategories"].as_array().unwrap().len() == 3));
}

#[test]
fn detection_task_annotation_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(&dir.path().join("a.jsonl"));

    let (status, err) = get(&s.url("/annotations/export"));
    assert_eq!((status, err["error"].as_str()), (404, Some("empty_store")));

    let (status, task) = get(&s.url("/tasks/next?annotator=ann1&kind=detection&seed=3"));
    assert_eq!(status, 200);
    assert_eq!(task["kind"], "detection");
    assert_eq!(task["position"], 1);
    let id = task["dialogue_id"].as_str().unwrap().to_string();
    let turn = task["turn"].as_u64().unwrap();

    let (status, d) = get(&s.url(&format!("/dialogues/{id}")));
    assert_eq!(status, 200);
    assert_eq!(d["id"], id.as_str());

    let record = json!({
        "annotator": "ann1", "task": "detection", "dialogue_id": id, "turn": turn,
        "labels": ["probing"], "timestamp": 0,
    });
    let (status, stored) = post(&s.url("/annotations"), record);
    assert_eq!(status, 201);
    assert!(stored["timestamp"].as_u64().unwrap() > 0);

    let (status, out) = get(&s.url("/annotations/export"));
    assert_eq!(status, 200);
    assert_eq!(out["records"].as_array().unwrap().len(), 1);
    assert_eq!(out["agreement"]["detection_histograms"]["category"]["probing"], 1);
    let jsonl = agent()
        .get(&s.url("/annotations/export?format=jsonl"))
        .call()
        .unwrap()
        .body_mut()
        .read_to_string()
        .unwrap();
    assert_eq!(jsonl.lines().count(), 1);

    let (status, next) = get(&s.url("/tasks/next?annotator=ann1&kind=detection&seed=3"));
    assert_eq!(status, 200);
    assert_ne!((next["dialogue_id"].clone(), next["turn"].clone()), (json!(id), json!(turn)));
}

#[test]
fn production_batch_is_forty_truncations() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(&dir.path().join("a.jsonl"));
    let mut speakers = (0, 0);
    for i in 0..40 {
        let (status, task) = get(&s.url("/tasks/next?annotator=p1&kind=production&seed=0"));
        assert_eq!(status, 200, "task {i}");
        assert_eq!(task["total"], 40);
        let turns = task["turns"].as_array().unwrap();
        assert_eq!(turns.len() as u64, task["turn"].as_u64().unwrap() + 1);
        match task["respond_as"].as_str().unwrap() {
            "system" => speakers.0 += 1,
            _ => speakers.1 += 1,
        }
    }
    assert_eq!(speakers, (20, 20));
    let (status, err) = get(&s.url("/tasks/next?annotator=p1&kind=production&seed=0"));
    assert_eq!((status, err["error"].as_str()), (409, Some("exhausted_tasks")));
}

#[test]
fn malformed_requests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(&dir.path().join("a.jsonl"));
    let base = json!({"annotator": "a", "task": "detection", "dialogue_id": "mwz-000", "turn": 1, "labels": ["probing"]});

    let mut unknown_label = base.clone();
    unknown_label["labels"] = json!(["sarcasm"]);
    let mut two_labels = base.clone();
    two_labels["labels"] = json!(["probing", "reinforcement"]);
    let mut bad_turn = base.clone();
    bad_turn["turn"] = json!(99);
    let mut extra = base.clone();
    extra["mood"] = json!("happy");
    for (body, want) in [(unknown_label, 400), (two_labels, 400), (bad_turn, 400), (extra, 400)] {
        assert_eq!(post(&s.url("/annotations"), body.clone()).0, want, "{body}");
    }
    let mut missing = base.clone();
    missing["dialogue_id"] = json!("nope");
    assert_eq!(post(&s.url("/annotations"), missing).1["error"], "unknown_dialogue");
    assert_eq!(get(&s.url("/tasks/next?annotator=a&kind=summaries")).0, 400);
    assert_eq!(get(&s.url("/dialogues/nope")).0, 404);
    assert_eq!(post(&s.url("/annotations"), base).0, 201);
}

#[test]
fn annotations_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.jsonl");
    let s = start(&path);
    let mut served = Vec::new();
    for _ in 0..5 {
        let (_, task) = get(&s.url("/tasks/next?annotator=r&kind=detection&seed=9"));
        let rec = json!({
            "annotator": "r", "task": "detection", "dialogue_id": task["dialogue_id"],
            "turn": task["turn"], "labels": ["no-friction"],
        });
        assert_eq!(post(&s.url("/annotations"), rec).0, 201);
        served.push((task["dialogue_id"].clone(), task["turn"].clone()));
    }
    let before = get(&s.url("/annotations/export")).1;
    s.stop();

    let s = start(&path);
    let after = get(&s.url("/annotations/export")).1;
    assert_eq!(before, after);
    let (_, task) = get(&s.url("/tasks/next?annotator=r&kind=detection&seed=9"));
    assert!(!served.contains(&(task["dialogue_id"].clone(), task["turn"].clone())));
    assert_eq!(task["position"], 6);
}

#[test]
fn occupied_port_is_reported() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        addr: taken.local_addr().unwrap(),
        dialogues: Vec::new(),
        store_path: dir.path().join("s.jsonl"),
        db_seed: 0,
        backends: scripted(Script::default()),
    };
    let rt = tokio::runtime::Runtime::new().unwrap();
    let err = rt.block_on(Server::bind(config)).err().unwrap();
    assert!(matches!(err, ServiceError::PortInUse(_)));
}

#[test]
fn unwritable_store_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        dialogues: Vec::new(),
        store_path: dir.path().join("missing/dir/s.jsonl"),
        db_seed: 0,
        backends: scripted(Script::default()),
    };
    let rt = tokio::runtime::Runtime::new().unwrap();
    let err = rt.block_on(Server::bind(config)).err().unwrap();
    assert!(matches!(err, ServiceError::StoreUnwritable { .. }));
}

#[test]
fn unknown_session_is_404() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(&dir.path().join("a.jsonl"));
    let (status, err) = get(&s.url("/sessions/s-999999"));
    assert_eq!((status, err["error"].as_str()), (404, Some("unknown_session")));
    let (status, _) = post(&s.url("/sessions/s-999999/message"), json!({"text": "hi"}));
    assert_eq!(status, 404);
}

#[test]
fn booking_session_labels_probing_reply() {
    let dir = tempfile::tempdir().unwrap();
    let script = Script::new(vec![
        ScriptEntry::when("need a hotel", "Response: Which area of town would you like to stay in?"),
        ScriptEntry::when("the east", "Response: The hotel has free parking."),
    ]);
    let s = start_with(&dir.path().join("a.jsonl"), scripted(script));
    let (status, snap) = post(&s.url("/sessions"), json!({"mode": "booking", "friction": ["probing"]}));
    assert_eq!(status, 201);
    assert_eq!(snap["friction"], json!(["probing"]));
    let id = snap["id"].as_str().unwrap().to_string();

    let (status, out) = post(&s.url(&format!("/sessions/{id}/message")), json!({"text": "I need a hotel"}));
    assert_eq!(status, 200);
    assert_eq!(out["reply"]["friction"], "probing");
    assert_eq!(out["reply"]["speaker"], "system");

    let (status, out) = post(
        &s.url(&format!("/sessions/{id}/message")),
        json!({"text": "In the east", "friction": []}),
    );
    assert_eq!(status, 200);
    assert_eq!(out["reply"]["friction"], "no-friction");

    let (_, snap) = get(&s.url(&format!("/sessions/{id}")));
    assert_eq!(snap["friction"], json!([]));
    assert_eq!(snap["transcript"].as_array().unwrap().len(), 4);

    // Script exhausted: the failure surfaces and the transcript is unchanged.
    let (status, err) = post(&s.url(&format!("/sessions/{id}/message")), json!({"text": "thanks"}));
    assert_eq!((status, err["error"].as_str()), (502, Some("backend_failure")));
    let (_, snap) = get(&s.url(&format!("/sessions/{id}")));
    assert_eq!(snap["transcript"].as_array().unwrap().len(), 4);
}

#[test]
fn embodied_session_reaches_goal_through_dialogue() {
    let dir = tempfile::tempdir().unwrap();
    let seed = 11;
    let wf = generate_world(seed, 0, DEFAULT_ROOMS);
    let script = agent_script(&wf, &[FrictionCategory::Probing]);
    let s = start_with(&dir.path().join("a.jsonl"), scripted(script));
    let (status, snap) = post(
        &s.url("/sessions"),
        json!({"mode": "embodied", "friction": ["probing"], "seed": seed}),
    );
    assert_eq!(status, 201);
    assert_eq!(snap["state"]["success"], false);
    let id = snap["id"].as_str().unwrap().to_string();

    let (_, out) = post(&s.url(&format!("/sessions/{id}/message")), json!({"text": "Hello, can you help?"}));
    let question = out["reply"]["text"].as_str().unwrap().to_string();
    assert!(question.ends_with('?'), "{question}");
    assert_eq!(out["reply"]["friction"], "probing");

    let (_, snap) = get(&s.url(&format!("/sessions/{id}")));
    let object = snap["state"]["task"]["object_class"].as_str().unwrap().to_string();
    let answer = format!("The {object} is in a closed cabinet or drawer.");
    let mut done = false;
    for _ in 0..6 {
        let (status, _) = post(&s.url(&format!("/sessions/{id}/message")), json!({"text": answer}));
        assert_eq!(status, 200);
        let (_, snap) = get(&s.url(&format!("/sessions/{id}")));
        if snap["state"]["success"] == true {
            done = true;
            break;
        }
    }
    assert!(done);
}

#[test]
fn concurrent_sessions_never_interleave() {
    let dir = tempfile::tempdir().unwrap();
    let (sessions, messages) = (6, 8);
    let mut entries = Vec::new();
    for a in 0..sessions {
        for i in 0..messages {
            entries.push(ScriptEntry::when(format!("msg {a}-{i}."), format!("Response: reply {a}-{i}.")));
        }
    }
    let s = start_with(&dir.path().join("a.jsonl"), scripted(Script::new(entries)));
    let ids: Vec<String> = (0..sessions)
        .map(|_| {
            let (_, snap) = post(&s.url("/sessions"), json!({"mode": "booking"}));
            snap["id"].as_str().unwrap().to_string()
        })
        .collect();
    thread::scope(|scope| {
        for (a, id) in ids.iter().enumerate() {
            let s = &s;
            scope.spawn(move || {
                for i in 0..messages {
                    let (status, out) =
                        post(&s.url(&format!("/sessions/{id}/message")), json!({"text": format!("msg {a}-{i}.")}));
                    assert_eq!(status, 200);
                    assert_eq!(out["reply"]["text"], format!("reply {a}-{i}."));
                }
            });
        }
    });
    for (a, id) in ids.iter().enumerate() {
        let (_, snap) = get(&s.url(&format!("/sessions/{id}")));
        let turns = snap["transcript"].as_array().unwrap();
        assert_eq!(turns.len(), 2 * messages);
        for (k, t) in turns.iter().enumerate() {
            let i = k / 2;
            let want = if k % 2 == 0 { format!("msg {a}-{i}.") } else { format!("reply {a}-{i}.") };
            assert_eq!(t["text"], want);
            assert_eq!(t["index"], k);
        }
    }
}
