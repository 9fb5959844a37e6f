//! Sign observation likelihood.
//!
//! For a state `(v, θ)` and a cue `(ℓ, δ)`:
//!
//! ```text
//! p(cue | v, θ) = Σ_{u ∈ top-k(ℓ)} p(ℓ = label[u]) · Σ_d δ[d] · K(d_edge(v→w_u) · d_act(θ, d))
//! ```
//!
//! where `w_u` is the next hop from `v` toward `u` and `d_act` is the world
//! direction of relative heading `d` taken from `θ`. A sign's likelihood is the
//! geometric mean over its cues, floored at ε.

use alloc::vec::Vec;

use crate::cue::{top_k_matches, LabelMatch, NavCue, SignObservation};
use crate::direction::{COS, SIN};
use crate::graph::NavGraph;
use crate::math;
use crate::path::NextHopTable;

use super::{FilterConfig, Kernel, Particle};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Hop {
    Unreachable,
    AtTarget,
    /// World angle of the unit vector from the node to its next hop.
    Toward(f64),
}

/// `Σ_d δ[d] · K(cos(α - rel(d)))`, where `α` is the angle of the shortest
/// travel edge relative to the particle heading.
fn kernel_sum(alpha: f64, dist: &[f64; 8], kernel: Kernel) -> f64 {
    let (s, c) = math::sin_cos(alpha);
    let mut acc = 0.0;
    for d in 0..8 {
        let p = dist[d];
        if p == 0.0 {
            continue;
        }
        let dot = c * COS[d] + s * SIN[d];
        let k = match kernel {
            Kernel::Aligned => {
                let gap = 1.0 - dot;
                math::exp(-gap * gap)
            }
            Kernel::Literal => math::exp(-dot * dot),
        };
        acc += p * k;
    }
    acc
}

fn hop_of(g: &NavGraph, table: &NextHopTable, v: usize) -> Hop {
    match table.next_hop(v) {
        None => Hop::Unreachable,
        Some(w) if w == v => Hop::AtTarget,
        Some(w) => {
            let e = g.find_edge(v, w).expect("next hop follows an edge");
            let u = g.edge_unit_vector(e);
            Hop::Toward(math::atan2(u.y, u.x))
        }
    }
}

fn hop_likelihood(hop: Hop, heading: f64, dist: &[f64; 8], kernel: Kernel) -> f64 {
    match hop {
        Hop::Unreachable => 0.0,
        Hop::AtTarget => dist.iter().sum(),
        Hop::Toward(phi) => kernel_sum(phi - heading, dist, kernel),
    }
}

/// Likelihood that direction distribution `dist` describes the shortest
/// travel direction from `particle` toward `target`.
pub fn direction_likelihood(
    g: &NavGraph,
    particle: &Particle,
    target: usize,
    dist: &[f64; 8],
    kernel: Kernel,
) -> f64 {
    let table = NextHopTable::build(g, target);
    hop_likelihood(hop_of(g, &table, particle.node), particle.heading, dist, kernel)
}

/// Likelihood of one cue at one particle; ε when no label matches.
pub fn cue_likelihood(g: &NavGraph, particle: &Particle, cue: &NavCue, cfg: &FilterConfig) -> f64 {
    let matches = top_k_matches(g, cue.label(), cfg.top_k, cfg.min_match_score);
    if matches.is_empty() {
        return cfg.weight_floor;
    }
    matches
        .iter()
        .map(|m| m.prob * direction_likelihood(g, particle, m.node, cue.direction_dist(), cfg.kernel))
        .sum()
}

struct PreparedMatch {
    prob: f64,
    hops: Vec<Hop>,
}

struct PreparedCue {
    dist: [f64; 8],
    /// Empty when no label matched; the cue then contributes ε.
    matches: Vec<PreparedMatch>,
}

/// One sign observation with label matches and next-hop tables resolved
/// against a graph, ready to score many states.
pub struct ObservationModel {
    cues: Vec<PreparedCue>,
    kernel: Kernel,
    floor: f64,
}

impl ObservationModel {
    pub fn prepare(g: &NavGraph, obs: &SignObservation, cfg: &FilterConfig) -> Self {
        let cues = obs
            .cues()
            .iter()
            .map(|cue| {
                let matches: Vec<LabelMatch> =
                    top_k_matches(g, cue.label(), cfg.top_k, cfg.min_match_score);
                let matches = matches
                    .iter()
                    .map(|m| {
                        let table = NextHopTable::build(g, m.node);
                        let hops = (0..g.node_count()).map(|v| hop_of(g, &table, v)).collect();
                        PreparedMatch { prob: m.prob, hops }
                    })
                    .collect();
                PreparedCue {
                    dist: *cue.direction_dist(),
                    matches,
                }
            })
            .collect();
        Self {
            cues,
            kernel: cfg.kernel,
            floor: cfg.weight_floor,
        }
    }

    /// Per-cue likelihoods at state `(node, heading)`.
    pub fn cue_likelihoods(&self, node: usize, heading: f64) -> impl Iterator<Item = f64> + '_ {
        self.cues.iter().map(move |c| {
            if c.matches.is_empty() {
                self.floor
            } else {
                c.matches
                    .iter()
                    .map(|m| m.prob * hop_likelihood(m.hops[node], heading, &c.dist, self.kernel))
                    .sum()
            }
        })
    }

    /// `max(Π_j L_j^(1/J), ε)`.
    pub fn likelihood(&self, node: usize, heading: f64) -> f64 {
        let j = self.cues.len();
        if j == 0 {
            return 1.0;
        }
        let mut log_sum = 0.0;
        for l in self.cue_likelihoods(node, heading) {
            if l <= 0.0 {
                return self.floor;
            }
            log_sum += math::ln(l);
        }
        math::exp(log_sum / j as f64).max(self.floor)
    }
}
