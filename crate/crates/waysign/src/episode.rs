//! Episode logs as JSONL. The first line is a header, every further line
//! one record holding either a motion or a sign, plus the ground-truth
//! state after it:
//!
//! ```json
//! {"episode": {"graph": "campus-1", "seed": 7, "noise": {"dir_temp": 0.3, "label_typo_prob": 0.15, "distractor_prob": 0.0}, "start": {"node": "a", "heading": 0.0}}}
//! {"t": 1.0, "motion": {"topo": 2}, "gt": {"node": "b", "heading": 1.5708}}
//! {"t": 1.0, "cues": [{"label": "cafe", "dir_dist": [1,0,0,0,0,0,0,0]}], "gt_node": "b", "gt": {"node": "b", "heading": 1.5708}}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use waysign_core::sim::{EpisodeEvent, EpisodeLog, EpisodeRecord, GtState, NoiseConfig};

use crate::error::{self, Error, Result};
use crate::wire::{CueJson, MotionJson, SignJson};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseJson {
    pub dir_temp: f64,
    pub label_typo_prob: f64,
    pub distractor_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtJson {
    pub node: String,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeaderJson {
    pub graph: String,
    pub seed: u64,
    pub noise: NoiseJson,
    pub start: GtJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    episode: HeaderJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    motion: Option<MotionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cues: Option<Vec<CueJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gt_node: Option<String>,
    gt: GtJson,
}

fn gt_json(g: &GtState) -> GtJson {
    GtJson {
        node: g.node.clone(),
        heading: g.heading,
    }
}

fn gt_state(g: GtJson) -> GtState {
    GtState {
        node: g.node,
        heading: g.heading,
    }
}

pub fn episode_to_jsonl(log: &EpisodeLog) -> String {
    let header = HeaderLine {
        episode: HeaderJson {
            graph: log.graph_name.clone(),
            seed: log.seed,
            noise: NoiseJson {
                dir_temp: log.noise.dir_temp,
                label_typo_prob: log.noise.label_typo_prob,
                distractor_prob: log.noise.distractor_prob,
            },
            start: gt_json(&log.start),
        },
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in &log.records {
        let line = match &r.event {
            EpisodeEvent::Motion(m) => RecordLine {
                t: r.t,
                motion: Some(MotionJson::from_command(m)),
                cues: None,
                gt_node: None,
                gt: gt_json(&r.gt),
            },
            EpisodeEvent::Sign(o) => {
                let s = SignJson::from_observation(o);
                RecordLine {
                    t: r.t,
                    motion: None,
                    cues: Some(s.cues),
                    gt_node: s.gt_node,
                    gt: gt_json(&r.gt),
                }
            }
        };
        out.push_str(&serde_json::to_string(&line).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Errors carry the 1-based line number.
pub fn episode_from_jsonl(text: &str) -> Result<EpisodeLog> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| Error::format("line 1", "empty episode log"))?;
    let header: HeaderLine = serde_json::from_str(first).map_err(|e| Error::format("line 1", e))?;
    let h = header.episode;
    let noise = NoiseConfig {
        dir_temp: h.noise.dir_temp,
        label_typo_prob: h.noise.label_typo_prob,
        distractor_prob: h.noise.distractor_prob,
    };
    noise.validate().map_err(|e| Error::format("line 1", e))?;
    let mut records = Vec::new();
    for (i, line) in lines {
        let ctx = format!("line {}", i + 1);
        let r: RecordLine = serde_json::from_str(line).map_err(|e| Error::format(&ctx, e))?;
        let event = match (r.motion, r.cues) {
            (Some(m), None) => EpisodeEvent::Motion(m.to_command().map_err(|e| Error::format(&ctx, e))?),
            (None, Some(cues)) => {
                let s = SignJson {
                    t: r.t,
                    cues,
                    gt_node: r.gt_node,
                };
                EpisodeEvent::Sign(s.to_observation().map_err(|e| Error::format(&ctx, e))?)
            }
            _ => return Err(Error::format(ctx, "record needs exactly one of `motion` or `cues`")),
        };
        records.push(EpisodeRecord {
            t: r.t,
            event,
            gt: gt_state(r.gt),
        });
    }
    Ok(EpisodeLog {
        graph_name: h.graph,
        seed: h.seed,
        noise,
        start: gt_state(h.start),
        records,
    })
}

pub fn read_episode(path: &Path) -> Result<EpisodeLog> {
    episode_from_jsonl(&error::read_to_string(path)?).map_err(|e| match e {
        Error::Format { context, message } => Error::format(format!("{}: {context}", path.display()), message),
        other => other,
    })
}

pub fn write_episode(path: &Path, log: &EpisodeLog) -> Result<()> {
    error::write(path, episode_to_jsonl(log))
}
