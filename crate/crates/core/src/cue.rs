//! Navigational cues read off a sign, and fuzzy matching of their labels
//! against graph place labels.

use alloc::string::String;
use alloc::vec::Vec;

use crate::direction::DirectionCategory;
use crate::error::{Error, Result};
use crate::graph::{normalize_label, NavGraph};

pub const DEFAULT_MIN_MATCH_SCORE: f64 = 0.35;
pub const DEFAULT_TOP_K: usize = 3;

/// One `(label, direction distribution)` entry of a sign.
#[derive(Debug, Clone, PartialEq)]
pub struct NavCue {
    label: String,
    direction_dist: [f64; 8],
}

impl NavCue {
    /// Validates the distribution (non-negative, sums to 1 within 1e-6) and
    /// normalizes the label.
    pub fn new(label: &str, direction_dist: [f64; 8]) -> Result<Self> {
        let label = normalize_label(label);
        if label.is_empty() {
            return Err(Error::InvalidArgument("cue label is empty".into()));
        }
        if direction_dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "cue `{label}`: direction probabilities must be finite and non-negative"
            )));
        }
        let sum: f64 = direction_dist.iter().sum();
        if (sum - 1.0).abs() >= 1e-6 {
            return Err(Error::InvalidArgument(alloc::format!(
                "cue `{label}`: direction distribution sums to {sum}, expected 1"
            )));
        }
        Ok(Self {
            label,
            direction_dist,
        })
    }

    pub fn one_hot(label: &str, dir: DirectionCategory) -> Result<Self> {
        let mut dist = [0.0; 8];
        dist[dir.index()] = 1.0;
        Self::new(label, dist)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn direction_dist(&self) -> &[f64; 8] {
        &self.direction_dist
    }
}

/// All cues parsed from one sign sighting.
#[derive(Debug, Clone, PartialEq)]
pub struct SignObservation {
    cues: Vec<NavCue>,
    pub timestamp: f64,
    /// Ground-truth node id, carried for evaluation only.
    pub gt_node: Option<String>,
}

impl SignObservation {
    pub fn new(cues: Vec<NavCue>, timestamp: f64) -> Result<Self> {
        if cues.is_empty() {
            return Err(Error::InvalidArgument("sign observation has no cues".into()));
        }
        Ok(Self {
            cues,
            timestamp,
            gt_node: None,
        })
    }

    pub fn with_gt_node(mut self, node: impl Into<String>) -> Self {
        self.gt_node = Some(node.into());
        self
    }

    pub fn cues(&self) -> &[NavCue] {
        &self.cues
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMatch {
    pub node: usize,
    pub score: f64,
    pub prob: f64,
}

/// Edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - dist / max(len)` on normalized strings; two empty strings are equal.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = normalize_label(a).chars().collect();
    let b: Vec<char> = normalize_label(b).chars().collect();
    similarity_chars(&a, &b)
}

fn similarity_chars(a: &[char], b: &[char]) -> f64 {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein_chars(a, b) as f64 / max_len as f64
}

/// The `k` labeled nodes most similar to `label`, dropping scores below
/// `min_score`, with probabilities renormalized over the survivors.
/// Ordered by score descending, then node index ascending.
pub fn top_k_matches(g: &NavGraph, label: &str, k: usize, min_score: f64) -> Vec<LabelMatch> {
    let query: Vec<char> = normalize_label(label).chars().collect();
    let mut scored: Vec<LabelMatch> = g
        .labeled_nodes()
        .iter()
        .filter_map(|&v| {
            let node_label: Vec<char> = g.node(v).label.as_deref()?.chars().collect();
            let score = similarity_chars(&query, &node_label);
            (score >= min_score).then_some(LabelMatch {
                node: v,
                score,
                prob: 0.0,
            })
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node.cmp(&b.node)));
    scored.truncate(k);
    let total: f64 = scored.iter().map(|m| m.score).sum();
    if total > 0.0 {
        for m in scored.iter_mut() {
            m.prob = m.score / total;
        }
    }
    scored.retain(|m| m.prob > 0.0);
    scored
}
