//! Every endpoint through a real socket with a headless client.

use std::sync::Arc;
use std::time::Duration;

use futures_util::StreamExt;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;
use waysign::graph_json::{graph_from_json, graph_to_json};
use waysign::wire::{MotionJson, SignJson};
use waysign_bridge::{router, AppState};
use waysign_core::mcl::FilterConfig;
use waysign_core::sim::envgen::random_graph;
use waysign_core::sim::{generate_episode, run_episode_mcl, EpisodeConfig, EpisodeEvent, NoClock};
use waysign_core::{GraphMeta, NavGraph};

/// Two junctions on an east-west corridor: the cafe is north of `a`, the
/// pharmacy south of `b`. "cafe left, pharmacy ahead" holds only at `a`
/// facing east.
const TWO_JUNCTIONS: &str = r#"{
  "meta": {"name": "two"},
  "nodes": [
    {"id": "a", "kind": "intersection", "pos": [0, 0, 0]},
    {"id": "b", "kind": "intersection", "pos": [10, 0, 0]},
    {"id": "cafe", "kind": "place", "pos": [0, 10, 0], "label": "cafe"},
    {"id": "pharmacy", "kind": "place", "pos": [10, -10, 0], "label": "pharmacy"}
  ],
  "edges": [
    {"from": "a", "to": "b"}, {"from": "b", "to": "a"},
    {"from": "a", "to": "cafe"}, {"from": "cafe", "to": "a"},
    {"from": "b", "to": "pharmacy"}, {"from": "pharmacy", "to": "b"}
  ]
}"#;

fn one_hot(i: usize) -> [f64; 8] {
    let mut d = [0.0; 8];
    d[i] = 1.0;
    d
}

fn cafe_left_pharmacy_ahead() -> Value {
    json!({"cues": [{"label": "cafe", "dir_dist": one_hot(2)}, {"label": "pharmacy", "dir_dist": one_hot(0)}]})
}

struct Server {
    base: String,
    ws: String,
    http: reqwest::Client,
    _state: Arc<AppState>,
}

async fn serve(g: NavGraph) -> Server {
    let state = AppState::new(g);
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(state.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Server {
        base: format!("http://{addr}"),
        ws: format!("ws://{addr}/events"),
        http: reqwest::Client::new(),
        _state: state,
    }
}

impl Server {
    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap_or(Value::Null))
    }

    async fn get(&self, path: &str) -> (u16, String) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status().as_u16(), r.text().await.unwrap())
    }

    async fn put_graph(&self, body: &str) -> (u16, Value) {
        let r = self.http.put(format!("{}/graph", self.base)).body(body.to_owned()).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn session(&self, seed: u64) -> String {
        let (code, v) = self.post("/session", json!({"seed": seed, "config": {"num_particles": 2000}})).await;
        assert_eq!(code, 200, "{v}");
        v["id"].as_str().unwrap().to_owned()
    }
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn connect(url: &str) -> Ws {
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

async fn next_event(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.expect("event in time").unwrap().unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn events(ws: &mut Ws, n: usize) -> Vec<Value> {
    let mut out = Vec::new();
    for _ in 0..n {
        out.push(next_event(ws).await);
    }
    out
}

#[tokio::test]
async fn graph_round_trip_and_validation() {
    let srv = serve(NavGraph::empty(GraphMeta::named("empty"))).await;
    let (code, v) = srv.put_graph(TWO_JUNCTIONS).await;
    assert_eq!(code, 200, "{v}");
    assert_eq!(v["version"], 2);
    let (code, text) = srv.get("/graph").await;
    assert_eq!(code, 200);
    let expect = graph_from_json(TWO_JUNCTIONS).unwrap();
    assert_eq!(text, graph_to_json(&expect));
    assert_eq!(graph_from_json(&text).unwrap(), expect);

    let dangling = TWO_JUNCTIONS.replace(r#"{"from": "b", "to": "pharmacy"}"#, r#"{"from": "b", "to": "nowhere"}"#);
    let (code, v) = srv.put_graph(&dangling).await;
    assert_eq!(code, 422);
    let errors = v["errors"].as_array().unwrap();
    assert!(!errors.is_empty());
    assert!(errors[0]["field"].as_str().unwrap().contains("`nowhere`"), "{v}");
    assert!(errors[0]["message"].as_str().unwrap().contains("unknown node"), "{v}");

    let (code, _) = srv.put_graph("{not json").await;
    assert_eq!(code, 422);
    // A rejected PUT leaves the graph alone.
    assert_eq!(srv.get("/graph").await.1, graph_to_json(&expect));
}

#[tokio::test]
async fn sessions_step_observe_reset_and_belief() {
    let srv = serve(graph_from_json(TWO_JUNCTIONS).unwrap()).await;
    let id = srv.session(1).await;

    let (code, _) = srv.post("/session/nope/step", json!({"topo": 0})).await;
    assert_eq!(code, 404);

    let (code, before) = srv.post(&format!("/session/{id}/reset"), json!(null)).await;
    assert_eq!(code, 200);
    let c0 = before["estimate"]["confidence"].as_f64().unwrap();

    let (code, after) = srv.post(&format!("/session/{id}/observe"), cafe_left_pharmacy_ahead()).await;
    assert_eq!(code, 200, "{after}");
    let c1 = after["estimate"]["confidence"].as_f64().unwrap();
    assert_eq!(after["estimate"]["node"], "a");
    assert!(c1 > c0, "{c0} -> {c1}");

    let (code, moved) = srv.post(&format!("/session/{id}/step"), json!({"topo": 0})).await;
    assert_eq!(code, 200);
    assert_eq!(moved["estimate"]["node"], "b");
    assert_eq!(moved["commands"], 2);

    let (code, v) = srv.post(&format!("/session/{id}/observe"), json!({"cues": [{"label": "cafe", "dir_dist": [1, 0, 0]}]})).await;
    assert_eq!(code, 422, "{v}");
    let (code, v) = srv.post(&format!("/session/{id}/observe"), json!({"cues": [{"label": "cafe", "dir_dist": [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]}]})).await;
    assert_eq!(code, 422, "{v}");
    assert_eq!(v["errors"][0]["field"], "cues[0]");
    let (code, _) = srv.post(&format!("/session/{id}/step"), json!({"topo": 9})).await;
    assert_eq!(code, 422);

    let (code, b) = srv.get(&format!("/session/{id}/belief?max=100")).await;
    assert_eq!(code, 200);
    let b: Value = serde_json::from_str(&b).unwrap();
    assert_eq!(b["total"], 2000);
    let ps = b["particles"].as_array().unwrap();
    assert!(ps.len() <= 100);
    let mass: f64 = ps.iter().map(|p| p["weight"].as_f64().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);

    // Reset gives back exactly the belief of a fresh session with the seed.
    srv.post(&format!("/session/{id}/reset"), json!(null)).await;
    let fresh = srv.session(1).await;
    let strip = |s: String| {
        let mut v: Value = serde_json::from_str(&s).unwrap();
        v.as_object_mut().unwrap().remove("session");
        v
    };
    assert_eq!(
        strip(srv.get(&format!("/session/{id}/belief")).await.1),
        strip(srv.get(&format!("/session/{fresh}/belief")).await.1)
    );
}

#[tokio::test]
async fn empty_graph_cannot_step() {
    let srv = serve(NavGraph::empty(GraphMeta::named("empty"))).await;
    let id = srv.session(0).await;
    let (code, _) = srv.post(&format!("/session/{id}/step"), json!({"topo": 0})).await;
    assert_eq!(code, 409);
    let (code, _) = srv.post(&format!("/session/{id}/observe"), cafe_left_pharmacy_ahead()).await;
    assert_eq!(code, 409);
}

#[tokio::test]
async fn events_per_command_converged_and_graph_swap() {
    let srv = serve(graph_from_json(TWO_JUNCTIONS).unwrap()).await;
    let mut ws = connect(&format!("{}?since=0", srv.ws)).await;
    let id = srv.session(3).await;

    srv.post(&format!("/session/{id}/step"), json!({"topo": 4})).await;
    let e = next_event(&mut ws).await;
    assert_eq!((e["seq"].as_u64(), e["type"].as_str()), (Some(1), Some("belief_updated")));
    assert_eq!(e["payload"]["cause"], "step");

    // Repeat the disambiguating sign until the estimate is confident.
    srv.post(&format!("/session/{id}/reset"), json!(null)).await;
    let mut seen = events(&mut ws, 1).await;
    let mut converged = false;
    for _ in 0..5 {
        let (_, r) = srv.post(&format!("/session/{id}/observe"), cafe_left_pharmacy_ahead()).await;
        let confident = r["estimate"]["confidence"].as_f64().unwrap() >= 0.8;
        let evs = events(&mut ws, if confident && !converged { 2 } else { 1 }).await;
        assert_eq!(evs[0]["type"], "belief_updated");
        if confident && !converged {
            assert_eq!(evs[1]["type"], "converged");
            assert_eq!(evs[1]["payload"]["estimate"]["node"], "a");
            converged = true;
        }
        seen.extend(evs);
    }
    assert!(converged);
    let seqs: Vec<u64> = seen.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1), "{seqs:?}");

    // Swapping the graph mid-episode resets the session's belief.
    let (code, _) = srv.put_graph(TWO_JUNCTIONS).await;
    assert_eq!(code, 200);
    let evs = events(&mut ws, 2).await;
    assert_eq!(evs[0]["type"], "graph_updated");
    assert_eq!(evs[0]["payload"]["version"], 2);
    assert_eq!(evs[1]["type"], "belief_updated");
    assert_eq!(evs[1]["payload"]["cause"], "graph_replaced");
    assert!(evs[1]["payload"]["estimate"]["confidence"].as_f64().unwrap() < 0.8);
    ws.close(None).await.unwrap();
}

#[tokio::test]
async fn reconnect_replays_and_marks_gaps() {
    let srv = serve(graph_from_json(TWO_JUNCTIONS).unwrap()).await;
    let id = srv.session(5).await;
    for _ in 0..10 {
        srv.post(&format!("/session/{id}/step"), json!({"topo": 0})).await;
    }
    let mut ws = connect(&format!("{}?since=4", srv.ws)).await;
    let evs = events(&mut ws, 6).await;
    assert_eq!(evs.iter().map(|e| e["seq"].as_u64().unwrap()).collect::<Vec<_>>(), (5..=10).collect::<Vec<_>>());
    ws.close(None).await.unwrap();

    for _ in 0..300 {
        srv.post(&format!("/session/{id}/step"), json!({"topo": 0})).await;
    }
    let mut ws = connect(&format!("{}?since=10", srv.ws)).await;
    let gap = next_event(&mut ws).await;
    assert_eq!(gap["type"], "gap");
    assert_eq!(gap["payload"], json!({"from": 11, "to": 54}));
    let first = next_event(&mut ws).await;
    assert_eq!(first["seq"], 55);
}

#[tokio::test]
async fn concurrent_posts_are_serialized() {
    let srv = Arc::new(serve(graph_from_json(TWO_JUNCTIONS).unwrap()).await);
    let id = srv.session(2).await;
    let mut tasks = Vec::new();
    for _ in 0..16 {
        let (srv, id) = (srv.clone(), id.clone());
        tasks.push(tokio::spawn(async move { srv.post(&format!("/session/{id}/step"), json!({"topo": 0})).await.1 }));
    }
    let mut pairs = Vec::new();
    for t in tasks {
        let r = t.await.unwrap();
        pairs.push((r["commands"].as_u64().unwrap(), r["seq"].as_u64().unwrap()));
    }
    pairs.sort();
    assert_eq!(pairs.iter().map(|p| p.0).collect::<Vec<_>>(), (1..=16).collect::<Vec<_>>());
    // Application order and event order agree.
    assert!(pairs.windows(2).all(|w| w[1].1 > w[0].1));
}

/// Replaying an episode through a session reproduces the per-sighting
/// estimates of the offline replay with the same seed.
#[tokio::test]
async fn replay_matches_offline_run() {
    let g = random_graph(25, 8, 6);
    let log = generate_episode(&g, &EpisodeConfig::default(), 6).unwrap();
    let cfg = FilterConfig {
        num_particles: 2000,
        ..FilterConfig::default()
    };
    let offline = run_episode_mcl(&g, &log, &cfg, 6, &NoClock).unwrap();

    let srv = serve(g.clone()).await;
    let id = srv.session(6).await;
    let mut online = Vec::new();
    for r in &log.records {
        match &r.event {
            EpisodeEvent::Motion(m) => {
                srv.post(&format!("/session/{id}/step"), serde_json::to_value(MotionJson::from_command(m)).unwrap()).await;
            }
            EpisodeEvent::Sign(o) => {
                let (_, v) = srv.post(&format!("/session/{id}/observe"), serde_json::to_value(SignJson::from_observation(o)).unwrap()).await;
                online.push((v["estimate"]["node"].as_str().unwrap().to_owned(), v["estimate"]["heading"].as_f64().unwrap()));
            }
        }
    }
    let expect: Vec<(String, f64)> = offline.sightings.iter().map(|s| (s.estimate_node.clone(), s.estimate.heading)).collect();
    assert_eq!(online, expect);
}
