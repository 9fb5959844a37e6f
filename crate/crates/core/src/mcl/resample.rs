//! Effective sample size and mixture resampling.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::NavGraph;
use crate::math;

use super::{motion, normal, FilterConfig, FilterMode, Particle};

/// `1 / Σ w_i²` for normalized weights.
pub fn ess(weights: impl IntoIterator<Item = f64>) -> f64 {
    let s: f64 = weights.into_iter().map(|w| w * w).sum();
    if s > 0.0 {
        1.0 / s
    } else {
        0.0
    }
}

/// Low-variance (systematic) selection of `count` indices proportional to
/// `weights` with a single offset `u0 ∈ [0, 1)`.
pub fn systematic_indices(weights: &[f64], count: usize, u0: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    if count == 0 || weights.is_empty() {
        return out;
    }
    let total: f64 = weights.iter().sum();
    let step = total / count as f64;
    let mut cumulative = weights[0];
    let mut i = 0;
    for k in 0..count {
        let target = (u0 + k as f64) * step;
        while target >= cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}

/// Draws N particles: `round(α·N)` by systematic resampling on the weights,
/// the rest by systematic resampling on `(w_i + 1/N²)⁻¹`. Each copy gets
/// heading noise (and position jitter plus re-snapping in topometric mode);
/// weights reset to 1/N.
pub(crate) fn resample_particles(
    particles: &[Particle],
    g: &NavGraph,
    cfg: &FilterConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Particle> {
    let n = particles.len();
    if n == 0 {
        return Vec::new();
    }
    let n_lv = math::round(cfg.mixture_alpha * n as f64) as usize;
    let n_rec = n - n_lv.min(n);
    let weights: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    let mut sources = systematic_indices(&weights, n_lv.min(n), rng.random::<f64>());
    if n_rec > 0 {
        let eps_r = 1.0 / (n as f64 * n as f64);
        let reciprocal: Vec<f64> = weights.iter().map(|w| 1.0 / (w + eps_r)).collect();
        sources.extend(systematic_indices(&reciprocal, n_rec, rng.random::<f64>()));
    }

    let w = 1.0 / n as f64;
    sources
        .into_iter()
        .map(|i| {
            let src = &particles[i];
            let heading = math::wrap_angle(src.heading + normal(rng, cfg.heading_noise_sigma));
            let mut p = Particle {
                node: src.node,
                heading,
                weight: w,
                metric_pose: src.metric_pose,
            };
            if cfg.mode == FilterMode::Topometric {
                if let Some(pose) = p.metric_pose.as_mut() {
                    pose.x += normal(rng, cfg.position_jitter_sigma);
                    pose.y += normal(rng, cfg.position_jitter_sigma);
                    pose.theta = heading;
                    if let Some(v) = motion::snap_to_node(g, pose, cfg.snap_radius) {
                        p.node = v;
                    }
                }
            }
            p
        })
        .collect()
}
