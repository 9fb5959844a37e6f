//! Synthetic episodes and the evaluation protocol.
//!
//! An episode is a ground-truth walk over the graph made of world-frame
//! actions, with sign sightings at some visited intersections. Each sighting
//! lists a few nearby places together with the direction of the first edge
//! of the shortest path to them, seen from the walker's heading, optionally
//! corrupted by label typos and blurred directions.

pub mod envgen;
pub mod floorplan;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cue::{NavCue, SignObservation};
use crate::direction::DirectionCategory;
use crate::error::{Error, Result};
use crate::exact::ExactFilter;
use crate::graph::{NavGraph, NodeKind};
use crate::math;
use crate::mcl::motion::candidate_edge;
use crate::mcl::{estimate_is_correct, BeliefState, Estimate, FilterConfig, MotionCommand, ObservationModel};
use crate::path::{distances_from, NextHopTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Softmax temperature (radians) for cue direction distributions; 0
    /// gives the one-hot truth.
    pub dir_temp: f64,
    pub label_typo_prob: f64,
    /// Probability a cue names a random other place instead of its target.
    pub distractor_prob: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::NONE
    }
}

impl NoiseConfig {
    pub const NONE: Self = Self {
        dir_temp: 0.0,
        label_typo_prob: 0.0,
        distractor_prob: 0.0,
    };

    pub const MILD: Self = Self {
        dir_temp: 0.3,
        label_typo_prob: 0.15,
        distractor_prob: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !(self.dir_temp.is_finite() && self.dir_temp >= 0.0) {
            return Err(Error::InvalidArgument("dir_temp must be non-negative".into()));
        }
        if !ok(self.label_typo_prob) || !ok(self.distractor_prob) {
            return Err(Error::InvalidArgument("noise probabilities must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// Named profiles: `none` and `mild`.
    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "none" | "zero" => Some(Self::NONE),
            "mild" => Some(Self::MILD),
            _ => None,
        }
    }
}

/// Ground-truth state by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct GtState {
    pub node: String,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpisodeEvent {
    Motion(MotionCommand),
    Sign(SignObservation),
}

/// One replayable step; `gt` is the state after the event.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub t: f64,
    pub event: EpisodeEvent,
    pub gt: GtState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub graph_name: String,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub start: GtState,
    pub records: Vec<EpisodeRecord>,
}

impl EpisodeLog {
    pub fn num_sightings(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.event, EpisodeEvent::Sign(_)))
            .count()
    }

    /// Checks ids against the graph and that timestamps never decrease.
    pub fn validate(&self, g: &NavGraph) -> Result<()> {
        g.require(&self.start.node)?;
        let mut last = f64::NEG_INFINITY;
        for (i, r) in self.records.iter().enumerate() {
            g.require(&r.gt.node)?;
            if !(r.t >= last) {
                return Err(Error::validation(format!("record {i}"), "timestamps must be non-decreasing"));
            }
            if !r.gt.heading.is_finite() {
                return Err(Error::validation(format!("record {i}"), "heading is not finite"));
            }
            last = r.t;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub num_signs: usize,
    /// Motion steps in the walk.
    pub steps: usize,
    /// Minimum number of steps between two sightings.
    pub min_gap: usize,
    pub cues_per_sign: usize,
    /// Signs pick their targets among this many nearest places.
    pub target_pool: usize,
    /// Prefer sightings at decision points (three or more non-place
    /// neighbors), falling back to any intersection.
    pub junction_signs: bool,
    pub noise: NoiseConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            num_signs: 5,
            steps: 25,
            min_gap: 3,
            cues_per_sign: 4,
            target_pool: 10,
            junction_signs: true,
            noise: NoiseConfig::NONE,
        }
    }
}

/// A walk with chosen sighting positions, before any cues are synthesized.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: (usize, f64),
    /// `(action, state after the action)` per step.
    pub steps: Vec<(DirectionCategory, (usize, f64))>,
    /// Step positions (0 = start state) where a sign is sighted.
    pub sightings: Vec<usize>,
}

impl Trajectory {
    pub fn state_at(&self, pos: usize) -> (usize, f64) {
        if pos == 0 {
            self.start
        } else {
            self.steps[pos - 1].1
        }
    }
}

/// Random start, then shortest-path legs to random waypoints, emitting the
/// world-frame action of each edge. Sightings go to distinct intersection
/// nodes at least `min_gap` steps apart, at junctions when possible.
pub fn generate_trajectory(g: &NavGraph, cfg: &EpisodeConfig, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    // A walk that keeps doubling back may not visit enough distinct nodes;
    // draw a fresh one a few times before giving up.
    for _ in 0..WALK_ATTEMPTS {
        if let Some(t) = try_trajectory(g, cfg, rng)? {
            return Ok(t);
        }
    }
    Err(Error::GraphTooSmall(format!(
        "cannot place {} sightings {} steps apart in a {}-step walk",
        cfg.num_signs, cfg.min_gap, cfg.steps
    )))
}

const WALK_ATTEMPTS: usize = 16;

fn try_trajectory(g: &NavGraph, cfg: &EpisodeConfig, rng: &mut ChaCha8Rng) -> Result<Option<Trajectory>> {
    let candidates: Vec<usize> = g.intersection_nodes().collect();
    if candidates.is_empty() {
        return Err(Error::NoTraversableNodes);
    }
    let start_node = candidates[rng.random_range(0..candidates.len())];
    let start_heading = DirectionCategory::new(rng.random_range(0..8u8))?.relative_heading();
    let mut steps = Vec::with_capacity(cfg.steps);
    let mut v = start_node;
    let mut leg: Option<NextHopTable> = None;
    while steps.len() < cfg.steps {
        let needs_leg = match &leg {
            None => true,
            Some(t) => t.target() == v || t.next_hop(v).is_none(),
        };
        if needs_leg {
            let reachable: Vec<usize> = {
                let d = distances_from(g, v);
                candidates.iter().copied().filter(|&u| u != v && d[u].is_finite()).collect()
            };
            if reachable.is_empty() {
                return Err(Error::GraphTooSmall(format!("node {} has nowhere to go", g.node(v).id)));
            }
            leg = Some(NextHopTable::build(g, reachable[rng.random_range(0..reachable.len())]));
        }
        let table = leg.as_ref().expect("leg is set");
        let w = table.next_hop(v).expect("waypoint is reachable");
        let action = g.find_edge(v, w).expect("next hop follows an edge").direction;
        let e = candidate_edge(g, v, action).expect("node has an out edge");
        v = e.to;
        steps.push((action, (v, e.direction.relative_heading())));
    }

    let traj = Trajectory {
        start: (start_node, start_heading),
        steps,
        sightings: Vec::new(),
    };
    let is_junction = |v: usize| {
        g.out_edges(v)
            .iter()
            .filter(|e| g.node(e.to).kind != NodeKind::Place)
            .count()
            >= 3
    };
    let eligible = |pos: usize, used: &[usize], junctions_only: bool| {
        let node = traj.state_at(pos).0;
        g.node(node).kind == NodeKind::Intersection
            && (!junctions_only || is_junction(node))
            && !used.iter().any(|&p| traj.state_at(p).0 == node)
    };
    let place = |slack: bool, junctions_only: bool, rng: &mut ChaCha8Rng| -> Option<Vec<usize>> {
        let mut chosen = Vec::new();
        let mut pos = 0;
        while chosen.len() < cfg.num_signs {
            let from = if slack { pos + rng.random_range(0..=1usize) } else { pos };
            let p = (from..=cfg.steps).find(|&p| eligible(p, &chosen, junctions_only))?;
            chosen.push(p);
            pos = p + cfg.min_gap.max(1);
        }
        Some(chosen)
    };
    let sightings = place(true, cfg.junction_signs, rng)
        .or_else(|| place(false, cfg.junction_signs, rng))
        .or_else(|| place(false, false, rng));
    Ok(sightings.map(|sightings| Trajectory { sightings, ..traj }))
}

fn typo(label: &str, rng: &mut ChaCha8Rng) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let mut chars: Vec<char> = label.chars().collect();
    let pick = |rng: &mut ChaCha8Rng| LETTERS[rng.random_range(0..LETTERS.len())] as char;
    let op = if chars.len() <= 1 { 0 } else { rng.random_range(0..3) };
    match op {
        0 => {
            let i = rng.random_range(0..chars.len());
            let old = chars[i];
            let mut c = pick(rng);
            while c == old {
                c = pick(rng);
            }
            chars[i] = c;
        }
        1 => {
            let i = rng.random_range(0..=chars.len());
            chars.insert(i, pick(rng));
        }
        _ => {
            let i = rng.random_range(0..chars.len());
            chars.remove(i);
        }
    }
    chars.into_iter().collect()
}

/// Relative category of the first shortest-path edge from `at` toward
/// `target`, seen from `facing`. `None` when unreachable or `at == target`.
pub fn true_cue_direction(g: &NavGraph, at: usize, facing: f64, target: usize) -> Option<DirectionCategory> {
    let table = NextHopTable::build(g, target);
    let w = table.next_hop(at)?;
    if w == at {
        return None;
    }
    let e = g.find_edge(at, w)?;
    let u = g.edge_unit_vector(e);
    DirectionCategory::discretize(math::atan2(u.y, u.x) - facing).ok()
}

/// Softmax over `-angdist(d, truth) / temp`; one-hot at `temp == 0`.
pub fn blurred_distribution(truth: DirectionCategory, temp: f64) -> [f64; 8] {
    let mut dist = [0.0; 8];
    if temp <= 0.0 {
        dist[truth.index()] = 1.0;
        return dist;
    }
    for d in DirectionCategory::all() {
        dist[d.index()] = math::exp(-(d.steps_between(truth) as f64 * PI / 4.0) / temp);
    }
    let z: f64 = dist.iter().sum();
    for p in dist.iter_mut() {
        *p /= z;
    }
    dist
}

/// One cue per target; unreachable targets are skipped with a warning.
/// Returns `None` when no cue survives.
pub fn synthesize_sign(
    g: &NavGraph,
    at: usize,
    facing: f64,
    targets: &[usize],
    noise: &NoiseConfig,
    timestamp: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<SignObservation>> {
    noise.validate()?;
    let places = g.labeled_nodes();
    let mut cues = Vec::new();
    for &t in targets {
        let mut target = t;
        if noise.distractor_prob > 0.0 && rng.random::<f64>() < noise.distractor_prob && places.len() > 1 {
            let others: Vec<usize> = places.iter().copied().filter(|&p| p != t).collect();
            target = others[rng.random_range(0..others.len())];
        }
        let label = g
            .node(target)
            .label
            .clone()
            .ok_or_else(|| Error::InvalidArgument(format!("target {} has no label", g.node(target).id)))?;
        let Some(truth) = true_cue_direction(g, at, facing, target) else {
            log::warn!("sign at {}: target {} is unreachable or here; skipped", g.node(at).id, g.node(target).id);
            continue;
        };
        let label = if noise.label_typo_prob > 0.0 && rng.random::<f64>() < noise.label_typo_prob {
            typo(&label, rng)
        } else {
            label
        };
        cues.push(NavCue::new(&label, blurred_distribution(truth, noise.dir_temp))?);
    }
    if cues.is_empty() {
        return Ok(None);
    }
    Ok(Some(SignObservation::new(cues, timestamp)?.with_gt_node(g.node(at).id.clone())))
}

/// Up to `count` places among the `pool` nearest to `at`, preferring targets
/// reached through different first edges.
pub fn choose_sign_targets(g: &NavGraph, at: usize, count: usize, pool: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let dist = distances_from(g, at);
    let mut near: Vec<usize> = g
        .labeled_nodes()
        .iter()
        .copied()
        .filter(|&p| p != at && dist[p].is_finite())
        .collect();
    near.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    near.truncate(pool.max(count));
    near.shuffle(rng);
    let first_hop = |p: usize| NextHopTable::build(g, p).next_hop(at);
    let mut chosen = Vec::new();
    let mut hops = Vec::new();
    let mut rest = Vec::new();
    for p in near {
        let h = first_hop(p);
        if chosen.len() < count && !hops.contains(&h) {
            hops.push(h);
            chosen.push(p);
        } else {
            rest.push(p);
        }
    }
    for p in rest {
        if chosen.len() >= count {
            break;
        }
        chosen.push(p);
    }
    chosen
}

/// Trajectory plus synthesized signs, as a replayable log.
pub fn generate_episode(g: &NavGraph, cfg: &EpisodeConfig, seed: u64) -> Result<EpisodeLog> {
    cfg.noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traj = generate_trajectory(g, cfg, &mut rng)?;
    let gt = |(node, heading): (usize, f64)| GtState {
        node: g.node(node).id.clone(),
        heading,
    };
    let mut records = Vec::new();
    for pos in 0..=traj.steps.len() {
        if pos > 0 {
            let (action, state) = traj.steps[pos - 1];
            records.push(EpisodeRecord {
                t: pos as f64,
                event: EpisodeEvent::Motion(MotionCommand::Topo(action)),
                gt: gt(state),
            });
        }
        if traj.sightings.contains(&pos) {
            let (node, heading) = traj.state_at(pos);
            let targets = choose_sign_targets(g, node, cfg.cues_per_sign, cfg.target_pool, &mut rng);
            if let Some(obs) = synthesize_sign(g, node, heading, &targets, &cfg.noise, pos as f64, &mut rng)? {
                records.push(EpisodeRecord {
                    t: pos as f64,
                    event: EpisodeEvent::Sign(obs),
                    gt: gt((node, heading)),
                });
            }
        }
    }
    Ok(EpisodeLog {
        graph_name: g.meta().name.clone(),
        seed,
        noise: cfg.noise,
        start: gt(traj.start),
        records,
    })
}

/// Monotonic time source in seconds; the core has no clock of its own.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Always reads zero; latencies come out as 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Anything that can track a belief over graph states.
pub trait Localizer {
    fn apply_motion(&mut self, g: &NavGraph, cmd: &MotionCommand) -> Result<()>;
    fn observe(&mut self, g: &NavGraph, obs: &SignObservation) -> Result<()>;
    fn estimate(&self, g: &NavGraph) -> Estimate;
    fn node_marginal(&self, g: &NavGraph) -> Vec<f64>;
}

/// The particle filter with its configuration.
#[derive(Debug, Clone)]
pub struct MclLocalizer {
    pub belief: BeliefState,
    pub cfg: FilterConfig,
}

impl MclLocalizer {
    pub fn new(g: &NavGraph, cfg: FilterConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            belief: BeliefState::init_uniform(g, &cfg, seed)?,
            cfg,
        })
    }
}

impl Localizer for MclLocalizer {
    fn apply_motion(&mut self, g: &NavGraph, cmd: &MotionCommand) -> Result<()> {
        self.belief.apply_motion(g, cmd, &self.cfg);
        Ok(())
    }

    fn observe(&mut self, g: &NavGraph, obs: &SignObservation) -> Result<()> {
        self.belief.observation_update(g, obs, &self.cfg).map(|_| ())
    }

    fn estimate(&self, g: &NavGraph) -> Estimate {
        self.belief.estimate(g)
    }

    fn node_marginal(&self, g: &NavGraph) -> Vec<f64> {
        self.belief.node_marginal(g.node_count())
    }
}

/// The exact discrete filter; accepts only discrete actions.
#[derive(Debug, Clone)]
pub struct ExactLocalizer {
    pub filter: ExactFilter,
    pub cfg: FilterConfig,
}

impl ExactLocalizer {
    pub fn new(g: &NavGraph, cfg: FilterConfig) -> Result<Self> {
        Ok(Self {
            filter: ExactFilter::new(g)?,
            cfg,
        })
    }
}

impl Localizer for ExactLocalizer {
    fn apply_motion(&mut self, g: &NavGraph, cmd: &MotionCommand) -> Result<()> {
        match cmd {
            MotionCommand::Topo(a) => {
                self.filter.motion(g, *a, &self.cfg);
                Ok(())
            }
            MotionCommand::Odometry(_) => Err(Error::InvalidArgument(
                "the exact filter only accepts discrete actions".into(),
            )),
        }
    }

    fn observe(&mut self, g: &NavGraph, obs: &SignObservation) -> Result<()> {
        let model = ObservationModel::prepare(g, obs, &self.cfg);
        self.filter.observe_model(g, &model).map(|_| ())
    }

    fn estimate(&self, _g: &NavGraph) -> Estimate {
        self.filter.belief().estimate()
    }

    fn node_marginal(&self, _g: &NavGraph) -> Vec<f64> {
        self.filter.belief().node_marginal()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SightingResult {
    /// 1-based position among the episode's sightings.
    pub index: usize,
    /// Position of the sighting in the log's records.
    pub record: usize,
    pub t: f64,
    pub gt_node: String,
    pub gt_heading: f64,
    pub estimate_node: String,
    pub estimate: Estimate,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    pub sightings: Vec<SightingResult>,
    /// First sighting from which every later sighting is correct (1-based).
    pub convergence: Option<usize>,
    /// First correct sighting (1-based).
    pub first_correct: Option<usize>,
    /// Whether the estimate was correct after each record, motion included.
    pub tracking: Vec<bool>,
    /// Seconds per observation update.
    pub observation_times: Vec<f64>,
    /// Seconds per motion update.
    pub motion_times: Vec<f64>,
}

impl EpisodeResult {
    pub fn num_sightings(&self) -> usize {
        self.sightings.len()
    }

    pub fn success(&self) -> bool {
        self.convergence.is_some()
    }

    /// Converged, and the estimate after the last record of the log (which is
    /// usually a motion step past the final sighting) is also correct.
    pub fn stable(&self) -> bool {
        self.convergence.is_some() && self.tracking.last().copied().unwrap_or(false)
    }

    /// Share of records from the converging sighting onward after which the
    /// estimate was correct. Motion steps between sightings count here.
    pub fn tracking_rate(&self) -> Option<f64> {
        let i = self.convergence?;
        let tail = &self.tracking[self.sightings[i - 1].record..];
        Some(tail.iter().filter(|c| **c).count() as f64 / tail.len() as f64)
    }

    /// `"i/n"`, or `"–/n"` without convergence.
    pub fn convergence_label(&self) -> String {
        match self.convergence {
            Some(i) => format!("{i}/{}", self.num_sightings()),
            None => format!("–/{}", self.num_sightings()),
        }
    }
}

fn convergence_index(correct: &[bool]) -> Option<usize> {
    let trailing = correct.iter().rev().take_while(|c| **c).count();
    (trailing > 0).then(|| correct.len() - trailing + 1)
}

/// Replays a log through a localizer, scoring the estimate after every
/// sighting.
pub fn run_episode(g: &NavGraph, log: &EpisodeLog, loc: &mut dyn Localizer, clock: &dyn Clock) -> Result<EpisodeResult> {
    log.validate(g)?;
    let mut sightings = Vec::new();
    let mut observation_times = Vec::new();
    let mut motion_times = Vec::new();
    let mut tracking = Vec::with_capacity(log.records.len());
    for (k, r) in log.records.iter().enumerate() {
        match &r.event {
            EpisodeEvent::Motion(cmd) => {
                let t0 = clock.now();
                loc.apply_motion(g, cmd)?;
                motion_times.push(clock.now() - t0);
            }
            EpisodeEvent::Sign(obs) => {
                let t0 = clock.now();
                loc.observe(g, obs)?;
                observation_times.push(clock.now() - t0);
            }
        }
        let est = loc.estimate(g);
        let gt_node = g.require(&r.gt.node)?;
        let correct = estimate_is_correct(&est, gt_node, r.gt.heading);
        tracking.push(correct);
        if matches!(r.event, EpisodeEvent::Sign(_)) {
            sightings.push(SightingResult {
                index: sightings.len() + 1,
                record: k,
                t: r.t,
                gt_node: r.gt.node.clone(),
                gt_heading: r.gt.heading,
                estimate_node: g.node(est.node).id.clone(),
                estimate: est,
                correct,
            });
        }
    }
    let correct: Vec<bool> = sightings.iter().map(|s| s.correct).collect();
    Ok(EpisodeResult {
        seed: log.seed,
        convergence: convergence_index(&correct),
        first_correct: correct.iter().position(|c| *c).map(|i| i + 1),
        tracking,
        sightings,
        observation_times,
        motion_times,
    })
}

/// [`run_episode`] with a fresh particle filter.
pub fn run_episode_mcl(g: &NavGraph, log: &EpisodeLog, cfg: &FilterConfig, seed: u64, clock: &dyn Clock) -> Result<EpisodeResult> {
    let mut loc = MclLocalizer::new(g, cfg.clone(), seed)?;
    run_episode(g, log, &mut loc, clock)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub seed: u64,
    pub label: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub environment: String,
    pub rows: Vec<SummaryRow>,
    pub episodes: usize,
    pub success_rate: f64,
    /// Share of episodes converged by the first, second, ... sighting.
    pub converged_by: Vec<f64>,
    pub mean_observation_time: f64,
    pub mean_motion_time: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn summarize(environment: &str, results: &[EpisodeResult]) -> Summary {
    let episodes = results.len();
    let max_n = results.iter().map(|r| r.num_sightings()).max().unwrap_or(0);
    let converged_by = (1..=max_n)
        .map(|i| {
            let k = results.iter().filter(|r| r.convergence.is_some_and(|c| c <= i)).count();
            if episodes == 0 {
                0.0
            } else {
                k as f64 / episodes as f64
            }
        })
        .collect();
    Summary {
        environment: environment.into(),
        rows: results
            .iter()
            .map(|r| SummaryRow {
                seed: r.seed,
                label: r.convergence_label(),
                success: r.success(),
            })
            .collect(),
        episodes,
        success_rate: if episodes == 0 {
            0.0
        } else {
            results.iter().filter(|r| r.success()).count() as f64 / episodes as f64
        },
        converged_by,
        mean_observation_time: mean(results.iter().flat_map(|r| r.observation_times.iter().copied())),
        mean_motion_time: mean(results.iter().flat_map(|r| r.motion_times.iter().copied())),
    }
}

impl Summary {
    /// Aligned plain-text table, one row per episode.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<24} {:>8} {:>6} {:>8}\n", "environment", "seed", "i/n", "success");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<24} {:>8} {:>6} {:>8}\n",
                self.environment,
                r.seed,
                r.label,
                if r.success { "yes" } else { "no" }
            ));
        }
        out.push_str(&format!(
            "success rate {:.1}%, mean observation {:.2} ms, mean motion {:.2} ms\n",
            self.success_rate * 100.0,
            self.mean_observation_time * 1e3,
            self.mean_motion_time * 1e3
        ));
        out
    }
}
