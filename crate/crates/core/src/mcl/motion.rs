//! Motion models: discrete world-frame actions along graph edges, and noisy
//! odometry on metric poses snapped back onto the graph.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::direction::DirectionCategory;
use crate::graph::{NavEdge, NavGraph};
use crate::math;

use super::{normal, FilterConfig, MetricPose, Particle};

/// Robot-frame odometry increment: `dx` forward, `dy` left, `dz` up.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OdometryDelta {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionCommand {
    /// Move along the outgoing edge closest to this world-frame direction.
    Topo(DirectionCategory),
    Odometry(OdometryDelta),
}

/// Outgoing edge of `v` whose direction is angularly closest to `action`.
/// Ties go to the smaller angular gap, then the lower category index, then
/// the lower destination index.
pub fn candidate_edge(g: &NavGraph, v: usize, action: DirectionCategory) -> Option<&NavEdge> {
    g.out_edges(v)
        .iter()
        .min_by_key(|e| (e.direction.steps_between(action), e.direction.index(), e.to))
}

pub(crate) fn apply_topo(
    particles: &mut [Particle],
    g: &NavGraph,
    action: DirectionCategory,
    cfg: &FilterConfig,
    rng: &mut ChaCha8Rng,
) {
    let probs = cfg.motion;
    for p in particles.iter_mut() {
        let out = g.out_edges(p.node);
        if out.is_empty() {
            continue;
        }
        let u: f64 = rng.random();
        let edge = if u < probs.p_correct {
            candidate_edge(g, p.node, action)
        } else if u < probs.p_correct + probs.p_stay {
            None
        } else {
            Some(&out[rng.random_range(0..out.len())])
        };
        if let Some(e) = edge {
            p.node = e.to;
            p.heading =
                math::wrap_angle(e.direction.relative_heading() + normal(rng, cfg.heading_noise_sigma));
            if let Some(pose) = p.metric_pose.as_mut() {
                let q = g.node(e.to).position;
                *pose = MetricPose {
                    x: q.x,
                    y: q.y,
                    z: q.z,
                    theta: p.heading,
                };
            }
        }
    }
}

/// Nearest node on the pose's floor (`round(z / floor_height)`) within
/// `radius` meters horizontally; ties go to the lower index.
pub fn snap_to_node(g: &NavGraph, pose: &MetricPose, radius: f64) -> Option<usize> {
    let floor = math::round(pose.z / g.meta().floor_height) as i32;
    let mut best: Option<(f64, usize)> = None;
    for (i, n) in g.nodes().iter().enumerate() {
        if n.floor != floor {
            continue;
        }
        let d = math::hypot(n.position.x - pose.x, n.position.y - pose.y);
        if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

pub(crate) fn apply_metric(
    particles: &mut [Particle],
    g: &NavGraph,
    delta: &OdometryDelta,
    cfg: &FilterConfig,
    rng: &mut ChaCha8Rng,
) {
    let a = cfg.odom_noise;
    let trans = math::hypot(delta.dx, delta.dy);
    let rot = delta.dtheta.abs();
    let sigma_rot = a.rot_from_rot * rot + a.rot_from_trans * trans;
    let sigma_trans = a.trans_from_trans * trans + a.trans_from_rot * rot;
    for p in particles.iter_mut() {
        let pose = p.metric_pose.get_or_insert_with(|| {
            let q = g.node(p.node).position;
            MetricPose {
                x: q.x,
                y: q.y,
                z: q.z,
                theta: p.heading,
            }
        });
        let dx = delta.dx + normal(rng, sigma_trans);
        let dy = delta.dy + normal(rng, sigma_trans);
        let dtheta = delta.dtheta + normal(rng, sigma_rot);
        let (s, c) = math::sin_cos(pose.theta);
        pose.x += c * dx - s * dy;
        pose.y += s * dx + c * dy;
        pose.z += delta.dz;
        pose.theta = math::wrap_angle(pose.theta + dtheta);
        p.heading = pose.theta;
        match snap_to_node(g, pose, cfg.snap_radius) {
            Some(v) => p.node = v,
            None => p.weight *= cfg.off_graph_penalty,
        }
    }
}
