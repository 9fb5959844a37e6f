use std::collections::BTreeMap;
use std::sync::Arc;

use axum::http::StatusCode;
use serde_json::{json, Value};
use waysign_core::cue::SignObservation;
use waysign_core::mcl::resample::systematic_indices;
use waysign_core::mcl::{BeliefState, Estimate, FilterConfig, MotionCommand};
use waysign_core::NavGraph;

use crate::events::EventLog;
use crate::ApiError;

/// Confidence at which a `converged` event fires. A display cue only.
pub const CONVERGED_CONFIDENCE: f64 = 0.8;

pub struct Session {
    pub id: String,
    graph: Arc<NavGraph>,
    graph_version: u64,
    cfg: FilterConfig,
    seed: u64,
    /// `None` while the graph has nowhere to put particles.
    belief: Option<BeliefState>,
    /// Commands applied since creation.
    commands: u64,
    converged: bool,
}

impl Session {
    pub fn new(id: String, graph: Arc<NavGraph>, graph_version: u64, cfg: FilterConfig, seed: u64) -> Self {
        let mut s = Self {
            id,
            graph,
            graph_version,
            cfg,
            seed,
            belief: None,
            commands: 0,
            converged: false,
        };
        s.reset();
        s
    }

    pub fn len(&self) -> usize {
        self.belief.as_ref().map_or(0, BeliefState::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reset(&mut self) {
        self.belief = BeliefState::init_uniform(&self.graph, &self.cfg, self.seed).ok();
        self.converged = false;
    }

    pub fn replace_graph(&mut self, graph: Arc<NavGraph>, version: u64) {
        self.graph = graph;
        self.graph_version = version;
        self.reset();
    }

    fn belief_mut(&mut self) -> Result<&mut BeliefState, ApiError> {
        self.belief
            .as_mut()
            .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "graph has no intersection to localize on"))
    }

    pub fn step(&mut self, cmd: &MotionCommand) -> Result<(), ApiError> {
        let (g, cfg) = (self.graph.clone(), self.cfg.clone());
        self.belief_mut()?.apply_motion(&g, cmd, &cfg);
        self.commands += 1;
        Ok(())
    }

    pub fn observe(&mut self, obs: &SignObservation) -> Result<(), ApiError> {
        let (g, cfg) = (self.graph.clone(), self.cfg.clone());
        self.belief_mut()?
            .observation_update(&g, obs, &cfg)
            .map_err(|e| ApiError::invalid(vec![("cues".into(), e.to_string())]))?;
        self.commands += 1;
        Ok(())
    }

    pub fn estimate(&self) -> Option<Estimate> {
        self.belief.as_ref().map(|b| b.estimate(&self.graph))
    }

    fn estimate_json(&self) -> Value {
        match self.estimate() {
            Some(e) => json!({
                "node": self.graph.node(e.node).id,
                "heading": e.heading,
                "confidence": e.confidence,
            }),
            None => Value::Null,
        }
    }

    pub fn event_payload(&self, cause: &str) -> Value {
        json!({
            "session": self.id,
            "cause": cause,
            "commands": self.commands,
            "graph_version": self.graph_version,
            "estimate": self.estimate_json(),
            "ess": self.belief.as_ref().map(BeliefState::ess),
        })
    }

    /// Publishes `belief_updated`, plus `converged` when the estimate first
    /// reaches [`CONVERGED_CONFIDENCE`], and returns the update payload.
    pub fn publish_update(&mut self, events: &EventLog, cause: &str) -> Value {
        let mut payload = self.event_payload(cause);
        let seq = events.publish("belief_updated", payload.clone());
        let confident = self.estimate().is_some_and(|e| e.confidence >= CONVERGED_CONFIDENCE);
        if confident && !self.converged {
            events.publish("converged", payload.clone());
        }
        self.converged = confident;
        payload["seq"] = json!(seq);
        payload
    }

    /// Particles for display, at most `max` of them. Larger beliefs are
    /// thinned by systematic sampling on the weights; the kept particles
    /// carry their sampling counts as weights.
    pub fn belief_json(&self, max: usize) -> Value {
        let Some(b) = &self.belief else {
            return json!({"session": self.id, "graph_version": self.graph_version, "particles": [], "estimate": null, "ess": null, "total": 0});
        };
        let ps = b.particles();
        let picked: Vec<(usize, f64)> = if ps.len() <= max {
            ps.iter().enumerate().map(|(i, p)| (i, p.weight)).collect()
        } else {
            let w: Vec<f64> = b.weights().collect();
            let mut counts = BTreeMap::new();
            for i in systematic_indices(&w, max, 0.5) {
                *counts.entry(i).or_insert(0usize) += 1;
            }
            counts.into_iter().map(|(i, c)| (i, c as f64 / max as f64)).collect()
        };
        let particles: Vec<Value> = picked
            .into_iter()
            .map(|(i, w)| {
                let p = &ps[i];
                let n = self.graph.node(p.node);
                let pos = p.metric_pose.map_or(n.position, |m| m.position());
                json!({"node": n.id, "heading": p.heading, "weight": w, "pos": [pos.x, pos.y, pos.z]})
            })
            .collect();
        json!({
            "session": self.id,
            "graph_version": self.graph_version,
            "total": ps.len(),
            "particles": particles,
            "estimate": self.estimate_json(),
            "ess": b.ess(),
        })
    }
}
