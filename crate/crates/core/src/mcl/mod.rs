//! Monte Carlo localization over a [`NavGraph`].
//!
//! A particle is a `(node, heading)` hypothesis, optionally carrying a metric
//! pose in topometric mode. Sign observations reweight particles through the
//! shortest-travel-direction likelihood in [`observation`]; [`resample`] mixes
//! systematic and reciprocal sampling; [`motion`] holds the discrete-action
//! and odometry motion models.

pub mod motion;
pub mod observation;
pub mod resample;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cue::{SignObservation, DEFAULT_MIN_MATCH_SCORE, DEFAULT_TOP_K};
use crate::direction::DirectionCategory;
use crate::error::{Error, Result};
use crate::graph::{NavGraph, NodeKind};
use crate::math::{self, Point3};

pub use motion::{snap_to_node, MotionCommand, OdometryDelta};
pub use observation::{cue_likelihood, direction_likelihood, ObservationModel};
pub use resample::{ess, systematic_indices};

/// Angular kernel comparing the shortest-travel edge with the acted direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `exp(-(1 - d_edge·d_act)^2)`: peaks when the two directions agree.
    #[default]
    Aligned,
    /// `exp(-(d_edge·d_act)^2)`, the form as usually written; peaks at
    /// perpendicular directions.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    #[default]
    Topological,
    Topometric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionProbs {
    pub p_correct: f64,
    pub p_stay: f64,
    pub p_random: f64,
}

impl Default for MotionProbs {
    fn default() -> Self {
        Self {
            p_correct: 0.9,
            p_stay: 0.05,
            p_random: 0.05,
        }
    }
}

/// Odometry noise gains (rotation from rotation, rotation from translation,
/// translation from translation, translation from rotation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdomNoise {
    pub rot_from_rot: f64,
    pub rot_from_trans: f64,
    pub trans_from_trans: f64,
    pub trans_from_rot: f64,
}

impl Default for OdomNoise {
    fn default() -> Self {
        Self {
            rot_from_rot: 0.05,
            rot_from_trans: 0.01,
            trans_from_trans: 0.08,
            trans_from_rot: 0.02,
        }
    }
}

impl OdomNoise {
    pub const ZERO: OdomNoise = OdomNoise {
        rot_from_rot: 0.0,
        rot_from_trans: 0.0,
        trans_from_trans: 0.0,
        trans_from_rot: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub num_particles: usize,
    pub mode: FilterMode,
    pub top_k: usize,
    pub min_match_score: f64,
    pub kernel: Kernel,
    /// ε: floor on the per-particle observation multiplier.
    pub weight_floor: f64,
    /// Resample when ESS < ess_fraction · N.
    pub ess_fraction: f64,
    /// Share of resampled particles drawn by systematic resampling; the rest
    /// are drawn by reciprocal (inverse-weight) sampling.
    pub mixture_alpha: f64,
    pub heading_noise_sigma: f64,
    pub motion: MotionProbs,
    pub odom_noise: OdomNoise,
    pub snap_radius: f64,
    pub off_graph_penalty: f64,
    /// Position jitter applied to resampled particles in topometric mode.
    pub position_jitter_sigma: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            num_particles: 5000,
            mode: FilterMode::Topological,
            top_k: DEFAULT_TOP_K,
            min_match_score: DEFAULT_MIN_MATCH_SCORE,
            kernel: Kernel::Aligned,
            weight_floor: 1e-9,
            ess_fraction: 0.5,
            mixture_alpha: 0.9,
            heading_noise_sigma: 0.1,
            motion: MotionProbs::default(),
            odom_noise: OdomNoise::default(),
            snap_radius: 5.0,
            off_graph_penalty: 0.5,
            position_jitter_sigma: 0.5,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(alloc::format!("{name} must be in [0, 1], got {p}")))
            }
        };
        if self.num_particles == 0 {
            return Err(Error::InvalidArgument("num_particles must be positive".into()));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidArgument("top_k must be at least 1".into()));
        }
        prob("min_match_score", self.min_match_score)?;
        prob("ess_fraction", self.ess_fraction)?;
        prob("mixture_alpha", self.mixture_alpha)?;
        prob("p_correct", self.motion.p_correct)?;
        prob("p_stay", self.motion.p_stay)?;
        prob("p_random", self.motion.p_random)?;
        prob("off_graph_penalty", self.off_graph_penalty)?;
        let total = self.motion.p_correct + self.motion.p_stay + self.motion.p_random;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(alloc::format!(
                "motion probabilities sum to {total}, expected 1"
            )));
        }
        if !(self.weight_floor > 0.0 && self.weight_floor.is_finite()) {
            return Err(Error::InvalidArgument("weight_floor must be positive".into()));
        }
        let nonneg = [
            self.heading_noise_sigma,
            self.snap_radius,
            self.position_jitter_sigma,
            self.odom_noise.rot_from_rot,
            self.odom_noise.rot_from_trans,
            self.odom_noise.trans_from_trans,
            self.odom_noise.trans_from_rot,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("noise parameters must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
}

impl MetricPose {
    pub fn position(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub node: usize,
    pub heading: f64,
    pub weight: f64,
    pub metric_pose: Option<MetricPose>,
}

/// Point estimate of a belief: the heaviest node, the weighted circular mean
/// heading of the particles there, and that node's weight share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub node: usize,
    pub heading: f64,
    pub confidence: f64,
}

/// What an observation update did besides reweighting.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateReport {
    pub ess: f64,
    pub resampled: bool,
    /// Total weight collapsed and the belief was reset to uniform.
    pub reinitialized: bool,
}

pub(crate) fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}

#[derive(Debug, Clone)]
pub struct BeliefState {
    particles: Vec<Particle>,
    step: u64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl BeliefState {
    /// N particles on uniformly drawn intersection nodes, headings from the 8
    /// canonical directions plus Gaussian jitter, weights 1/N.
    pub fn init_uniform(g: &NavGraph, cfg: &FilterConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut belief = Self {
            particles: Vec::new(),
            step: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        belief.reinitialize(g, cfg)?;
        Ok(belief)
    }

    /// Replaces all particles with a fresh uniform draw, continuing the
    /// generator stream.
    pub fn reinitialize(&mut self, g: &NavGraph, cfg: &FilterConfig) -> Result<()> {
        let candidates: Vec<usize> = g.intersection_nodes().collect();
        if candidates.is_empty() {
            return Err(Error::NoTraversableNodes);
        }
        let n = cfg.num_particles;
        let w = 1.0 / n as f64;
        self.particles.clear();
        self.particles.reserve(n);
        for _ in 0..n {
            let node = candidates[self.rng.random_range(0..candidates.len())];
            let dir = DirectionCategory::new(self.rng.random_range(0..8u8))?;
            let heading = math::wrap_angle(dir.relative_heading() + normal(&mut self.rng, cfg.heading_noise_sigma));
            let metric_pose = (cfg.mode == FilterMode::Topometric).then(|| {
                let p = g.node(node).position;
                MetricPose {
                    x: p.x,
                    y: p.y,
                    z: p.z,
                    theta: heading,
                }
            });
            self.particles.push(Particle {
                node,
                heading,
                weight: w,
                metric_pose,
            });
        }
        Ok(())
    }

    /// Builds a belief from explicit particles; weights are normalized.
    pub fn from_particles(particles: Vec<Particle>, seed: u64) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InvalidArgument("belief needs at least one particle".into()));
        }
        let mut b = Self {
            particles,
            step: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        if !b.normalize() {
            return Err(Error::InvalidArgument("particle weights must have positive finite sum".into()));
        }
        Ok(b)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.particles.iter().map(|p| p.weight)
    }

    pub fn ess(&self) -> f64 {
        ess(self.particles.iter().map(|p| p.weight))
    }

    /// Returns false (and leaves weights untouched) if the total weight is
    /// zero or not finite.
    fn normalize(&mut self) -> bool {
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        if !(total.is_finite() && total > 0.0) {
            return false;
        }
        for p in self.particles.iter_mut() {
            p.weight /= total;
        }
        true
    }

    /// Multiplies each weight by `max(Π_j L_j^(1/J), ε)`, renormalizes and
    /// resamples when the ESS drops below `ess_fraction · N`. A collapsed
    /// total weight triggers a uniform reset.
    pub fn observation_update(
        &mut self,
        g: &NavGraph,
        obs: &SignObservation,
        cfg: &FilterConfig,
    ) -> Result<UpdateReport> {
        let model = ObservationModel::prepare(g, obs, cfg);
        self.apply_observation_model(g, &model, cfg)
    }

    pub fn apply_observation_model(
        &mut self,
        g: &NavGraph,
        model: &ObservationModel,
        cfg: &FilterConfig,
    ) -> Result<UpdateReport> {
        self.step += 1;
        for p in self.particles.iter_mut() {
            p.weight *= model.likelihood(p.node, p.heading);
        }
        let mut report = UpdateReport::default();
        if !self.normalize() {
            log::warn!("observation collapsed all particle weights; reinitializing uniformly");
            self.reinitialize(g, cfg)?;
            report.reinitialized = true;
            report.ess = self.ess();
            return Ok(report);
        }
        report.ess = self.ess();
        if report.ess < cfg.ess_fraction * self.particles.len() as f64 {
            self.resample(g, cfg);
            report.resampled = true;
        }
        Ok(report)
    }

    pub fn resample(&mut self, g: &NavGraph, cfg: &FilterConfig) {
        self.particles = resample::resample_particles(&self.particles, g, cfg, &mut self.rng);
    }

    pub fn motion_update_topo(&mut self, g: &NavGraph, action: DirectionCategory, cfg: &FilterConfig) {
        self.step += 1;
        motion::apply_topo(&mut self.particles, g, action, cfg, &mut self.rng);
    }

    pub fn motion_update_metric(&mut self, g: &NavGraph, delta: &OdometryDelta, cfg: &FilterConfig) {
        self.step += 1;
        motion::apply_metric(&mut self.particles, g, delta, cfg, &mut self.rng);
        if !self.normalize() {
            // Every particle was penalized to zero; keep them equally weighted.
            let w = 1.0 / self.particles.len() as f64;
            for p in self.particles.iter_mut() {
                p.weight = w;
            }
        }
    }

    pub fn apply_motion(&mut self, g: &NavGraph, cmd: &MotionCommand, cfg: &FilterConfig) {
        match cmd {
            MotionCommand::Topo(d) => self.motion_update_topo(g, *d, cfg),
            MotionCommand::Odometry(delta) => self.motion_update_metric(g, delta, cfg),
        }
    }

    /// Summed particle weight per node.
    pub fn node_marginal(&self, node_count: usize) -> Vec<f64> {
        let mut m = vec![0.0; node_count];
        for p in &self.particles {
            m[p.node] += p.weight;
        }
        m
    }

    /// Summed weight per `(node, direction category)` with headings binned to
    /// the nearest category; indexed `node * 8 + category`.
    pub fn state_marginal(&self, node_count: usize) -> Vec<f64> {
        let mut m = vec![0.0; node_count * 8];
        for p in &self.particles {
            let d = DirectionCategory::discretize(p.heading).unwrap_or_default();
            m[p.node * 8 + d.index()] += p.weight;
        }
        m
    }

    pub fn estimate(&self, g: &NavGraph) -> Estimate {
        let marginal = self.node_marginal(g.node_count());
        let mut node = 0;
        for (i, w) in marginal.iter().enumerate() {
            if *w > marginal[node] {
                node = i;
            }
        }
        let (mut s, mut c) = (0.0, 0.0);
        for p in self.particles.iter().filter(|p| p.node == node) {
            let (ps, pc) = math::sin_cos(p.heading);
            s += p.weight * ps;
            c += p.weight * pc;
        }
        let heading = if s == 0.0 && c == 0.0 { 0.0 } else { math::atan2(s, c) };
        let total: f64 = marginal.iter().sum();
        Estimate {
            node,
            heading: math::wrap_angle(heading),
            confidence: if total > 0.0 { marginal[node] / total } else { 0.0 },
        }
    }
}

/// True when the estimate is at `gt_node` and within π/4 of `gt_heading`.
pub fn estimate_is_correct(est: &Estimate, gt_node: usize, gt_heading: f64) -> bool {
    est.node == gt_node && math::angle_dist(est.heading, gt_heading) < PI / 4.0
}

/// Whether a graph offers any state a belief could occupy.
pub fn has_traversable_nodes(g: &NavGraph) -> bool {
    g.nodes().iter().any(|n| n.kind == NodeKind::Intersection)
}

#[cfg(test)]
mod tests;
