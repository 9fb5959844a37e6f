//! Exact Bayes filter over `node × 8 headings`.
//!
//! Uses the same edge-selection rule and observation likelihood as the
//! particle filter, with headings pinned to the canonical category angles, so
//! its posterior is what the particle filter converges to as N grows.

use alloc::vec;
use alloc::vec::Vec;

use crate::cue::SignObservation;
use crate::direction::DirectionCategory;
use crate::error::{Error, Result};
use crate::graph::NavGraph;
use crate::math;
use crate::mcl::motion::candidate_edge;
use crate::mcl::{Estimate, FilterConfig, ObservationModel};

/// Dense table indexed `node * 8 + category`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBelief {
    probs: Vec<f64>,
}

impl DiscreteBelief {
    /// Uniform over intersection nodes and all 8 headings.
    pub fn uniform(g: &NavGraph) -> Result<Self> {
        let nodes: Vec<usize> = g.intersection_nodes().collect();
        if nodes.is_empty() {
            return Err(Error::NoTraversableNodes);
        }
        let mut probs = vec![0.0; g.node_count() * 8];
        let p = 1.0 / (nodes.len() * 8) as f64;
        for v in nodes {
            for d in 0..8 {
                probs[v * 8 + d] = p;
            }
        }
        Ok(Self { probs })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if !probs.len().is_multiple_of(8) {
            return Err(Error::InvalidArgument("table length must be a multiple of 8".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        let mut b = Self { probs };
        if !b.normalize() {
            return Err(Error::InvalidArgument("table has zero mass".into()));
        }
        Ok(b)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, node: usize, dir: DirectionCategory) -> f64 {
        self.probs[node * 8 + dir.index()]
    }

    pub fn node_count(&self) -> usize {
        self.probs.len() / 8
    }

    fn normalize(&mut self) -> bool {
        let total: f64 = self.probs.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return false;
        }
        for p in self.probs.iter_mut() {
            *p /= total;
        }
        true
    }

    pub fn node_marginal(&self) -> Vec<f64> {
        self.probs.chunks_exact(8).map(|c| c.iter().sum()).collect()
    }

    /// Same contract as the particle estimate: heaviest node, weighted
    /// circular mean of its heading mass, node share.
    pub fn estimate(&self) -> Estimate {
        let marginal = self.node_marginal();
        let mut node = 0;
        for (i, w) in marginal.iter().enumerate() {
            if *w > marginal[node] {
                node = i;
            }
        }
        let (mut s, mut c) = (0.0, 0.0);
        for d in DirectionCategory::all() {
            let w = self.prob(node, d);
            let (ds, dc) = math::sin_cos(d.relative_heading());
            s += w * ds;
            c += w * dc;
        }
        let heading = if s == 0.0 && c == 0.0 { 0.0 } else { math::atan2(s, c) };
        Estimate {
            node,
            heading: math::wrap_angle(heading),
            confidence: marginal[node],
        }
    }
}

/// `b' = T_a · b` for a world-frame action.
pub fn exact_motion(b: &DiscreteBelief, g: &NavGraph, action: DirectionCategory, cfg: &FilterConfig) -> DiscreteBelief {
    let m = cfg.motion;
    let mut out = vec![0.0; b.probs.len()];
    for v in 0..g.node_count() {
        let edges = g.out_edges(v);
        for d in 0..8 {
            let mass = b.probs[v * 8 + d];
            if mass == 0.0 {
                continue;
            }
            if edges.is_empty() {
                out[v * 8 + d] += mass;
                continue;
            }
            if let Some(e) = candidate_edge(g, v, action) {
                out[e.to * 8 + e.direction.index()] += mass * m.p_correct;
            }
            out[v * 8 + d] += mass * m.p_stay;
            let share = mass * m.p_random / edges.len() as f64;
            for e in edges {
                out[e.to * 8 + e.direction.index()] += share;
            }
        }
    }
    DiscreteBelief { probs: out }
}

/// Transition matrix rows for every state, as `(from_state, to_state, p)`
/// triples. Exposed for stochasticity checks.
pub fn transition_entries(g: &NavGraph, action: DirectionCategory, cfg: &FilterConfig) -> Vec<(usize, usize, f64)> {
    let mut entries = Vec::new();
    let n = g.node_count();
    for s in 0..n * 8 {
        let mut one_hot = vec![0.0; n * 8];
        one_hot[s] = 1.0;
        let row = exact_motion(&DiscreteBelief { probs: one_hot }, g, action, cfg);
        for (t, p) in row.probs.iter().enumerate() {
            if *p != 0.0 {
                entries.push((s, t, *p));
            }
        }
    }
    entries
}

/// Outcome of an exact observation step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactUpdate {
    pub belief: DiscreteBelief,
    pub reinitialized: bool,
}

/// Pointwise product with the observation likelihood at canonical headings,
/// renormalized. Zero total mass resets to uniform.
pub fn exact_observe(b: &DiscreteBelief, g: &NavGraph, obs: &SignObservation, cfg: &FilterConfig) -> Result<ExactUpdate> {
    let model = ObservationModel::prepare(g, obs, cfg);
    exact_observe_with(b, g, &model)
}

pub(crate) fn exact_observe_with(b: &DiscreteBelief, g: &NavGraph, model: &ObservationModel) -> Result<ExactUpdate> {
    let mut probs = b.probs.clone();
    for v in 0..g.node_count() {
        for d in DirectionCategory::all() {
            let i = v * 8 + d.index();
            if probs[i] != 0.0 {
                probs[i] *= model.likelihood(v, d.relative_heading());
            }
        }
    }
    let mut belief = DiscreteBelief { probs };
    if belief.normalize() {
        Ok(ExactUpdate {
            belief,
            reinitialized: false,
        })
    } else {
        log::warn!("exact observation collapsed all mass; resetting to uniform");
        Ok(ExactUpdate {
            belief: DiscreteBelief::uniform(g)?,
            reinitialized: true,
        })
    }
}

/// `½ Σ |p − q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::MismatchedSupport {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// The exact filter packaged as a stateful localizer.
#[derive(Debug, Clone)]
pub struct ExactFilter {
    belief: DiscreteBelief,
}

impl ExactFilter {
    pub fn new(g: &NavGraph) -> Result<Self> {
        Ok(Self {
            belief: DiscreteBelief::uniform(g)?,
        })
    }

    pub fn belief(&self) -> &DiscreteBelief {
        &self.belief
    }

    pub fn motion(&mut self, g: &NavGraph, action: DirectionCategory, cfg: &FilterConfig) {
        self.belief = exact_motion(&self.belief, g, action, cfg);
    }

    pub fn observe(&mut self, g: &NavGraph, obs: &SignObservation, cfg: &FilterConfig) -> Result<bool> {
        let up = exact_observe(&self.belief, g, obs, cfg)?;
        self.belief = up.belief;
        Ok(up.reinitialized)
    }

    pub fn observe_model(&mut self, g: &NavGraph, model: &ObservationModel) -> Result<bool> {
        let up = exact_observe_with(&self.belief, g, model)?;
        self.belief = up.belief;
        Ok(up.reinitialized)
    }
}
