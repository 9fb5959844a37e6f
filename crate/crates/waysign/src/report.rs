//! JSON reports for localization runs.

use serde::Serialize;
use waysign_core::sim::{EpisodeResult, Summary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SightingRow {
    pub index: usize,
    pub t: f64,
    pub gt_node: String,
    pub gt_heading: f64,
    pub estimate_node: String,
    pub estimate_heading: f64,
    pub confidence: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeReport {
    pub graph: String,
    pub episode_seed: u64,
    pub filter_seed: u64,
    /// `"i/n"`: converged at sighting i of n, `"–/n"` if never.
    pub convergence: String,
    pub converged_at: Option<usize>,
    pub success: bool,
    pub stable: bool,
    pub sightings: Vec<SightingRow>,
    pub mean_observation_ms: f64,
    pub mean_motion_ms: f64,
    /// Largest node-marginal TV distance to the exact filter, when checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_max_tv: Option<f64>,
}

fn mean_ms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64 * 1e3
    }
}

impl EpisodeReport {
    pub fn new(graph: &str, filter_seed: u64, r: &EpisodeResult) -> Self {
        Self {
            graph: graph.into(),
            episode_seed: r.seed,
            filter_seed,
            convergence: r.convergence_label(),
            converged_at: r.convergence,
            success: r.success(),
            stable: r.stable(),
            sightings: r
                .sightings
                .iter()
                .map(|s| SightingRow {
                    index: s.index,
                    t: s.t,
                    gt_node: s.gt_node.clone(),
                    gt_heading: s.gt_heading,
                    estimate_node: s.estimate_node.clone(),
                    estimate_heading: s.estimate.heading,
                    confidence: s.estimate.confidence,
                    correct: s.correct,
                })
                .collect(),
            mean_observation_ms: mean_ms(&r.observation_times),
            mean_motion_ms: mean_ms(&r.motion_times),
            oracle_max_tv: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub environment: String,
    pub episodes: usize,
    pub success_rate: f64,
    pub converged_by: Vec<f64>,
    pub labels: Vec<String>,
    pub mean_observation_ms: f64,
    pub mean_motion_ms: f64,
}

impl From<&Summary> for SummaryReport {
    fn from(s: &Summary) -> Self {
        Self {
            environment: s.environment.clone(),
            episodes: s.episodes,
            success_rate: s.success_rate,
            converged_by: s.converged_by.clone(),
            labels: s.rows.iter().map(|r| r.label.clone()).collect(),
            mean_observation_ms: s.mean_observation_time * 1e3,
            mean_motion_ms: s.mean_motion_time * 1e3,
        }
    }
}
