//! Evaluation harness: wall-clock timing, oracle cross-checks, latency
//! benchmarks and seeded episode campaigns.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waysign_core::exact::tv_distance;
use waysign_core::mcl::motion::candidate_edge;
use waysign_core::mcl::{BeliefState, FilterConfig, MotionCommand};
use waysign_core::sim::{
    choose_sign_targets, generate_episode, run_episode, run_episode_mcl, synthesize_sign, Clock, EpisodeConfig, EpisodeEvent,
    EpisodeLog, EpisodeRecord, EpisodeResult, ExactLocalizer, GtState, Localizer, MclLocalizer,
};
use waysign_core::{DirectionCategory, Error as CoreError, NavGraph};

use crate::error::Result;

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl Default for StdClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for StdClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// `steps` records alternating a random topological move (even positions)
/// with a sign sighting at the reached node (odd positions). Moves pick a
/// random out edge of the true node; the truth follows the same
/// candidate-edge rule as the filters.
pub fn alternating_log(g: &NavGraph, steps: usize, cfg: &EpisodeConfig, seed: u64) -> Result<EpisodeLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<usize> = g.intersection_nodes().filter(|&v| g.out_degree(v) > 0).collect();
    if starts.is_empty() {
        return Err(CoreError::NoTraversableNodes.into());
    }
    let mut v = starts[rng.random_range(0..starts.len())];
    let mut heading = DirectionCategory::new(rng.random_range(0..8u8))?.relative_heading();
    let gt = |v: usize, h: f64| GtState {
        node: g.node(v).id.clone(),
        heading: h,
    };
    let start = gt(v, heading);
    let mut records = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64;
        if k % 2 == 0 {
            let out = g.out_edges(v);
            if out.is_empty() {
                continue;
            }
            let action = out[rng.random_range(0..out.len())].direction;
            let e = candidate_edge(g, v, action).expect("node has an out edge");
            v = e.to;
            heading = e.direction.relative_heading();
            records.push(EpisodeRecord {
                t,
                event: EpisodeEvent::Motion(MotionCommand::Topo(action)),
                gt: gt(v, heading),
            });
        } else {
            let targets = choose_sign_targets(g, v, cfg.cues_per_sign, cfg.target_pool, &mut rng);
            if let Some(obs) = synthesize_sign(g, v, heading, &targets, &cfg.noise, t, &mut rng)? {
                records.push(EpisodeRecord {
                    t,
                    event: EpisodeEvent::Sign(obs),
                    gt: gt(v, heading),
                });
            }
        }
    }
    Ok(EpisodeLog {
        graph_name: g.meta().name.clone(),
        seed,
        noise: cfg.noise,
        start,
        records,
    })
}

/// Node-marginal TV distance between the particle filter and the exact
/// filter after each record of `log`. Topological moves only.
pub fn oracle_trace(g: &NavGraph, log: &EpisodeLog, cfg: &FilterConfig, seed: u64) -> Result<Vec<f64>> {
    let mut mcl = MclLocalizer::new(g, cfg.clone(), seed)?;
    let mut exact = ExactLocalizer::new(g, cfg.clone())?;
    let mut out = Vec::with_capacity(log.records.len());
    for r in &log.records {
        match &r.event {
            EpisodeEvent::Motion(m) => {
                mcl.apply_motion(g, m)?;
                exact.apply_motion(g, m)?;
            }
            EpisodeEvent::Sign(o) => {
                mcl.observe(g, o)?;
                exact.observe(g, o)?;
            }
        }
        out.push(tv_distance(&mcl.node_marginal(g), &exact.node_marginal(g))?);
    }
    Ok(out)
}

/// Replays `log` through the exact filter.
pub fn run_episode_exact(g: &NavGraph, log: &EpisodeLog, cfg: &FilterConfig) -> Result<EpisodeResult> {
    let mut loc = ExactLocalizer::new(g, cfg.clone())?;
    Ok(run_episode(g, log, &mut loc, &StdClock::default())?)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Latency {
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub samples: usize,
}

impl Latency {
    pub fn from_seconds(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self {
                mean_ms: 0.0,
                p95_ms: 0.0,
                samples: 0,
            };
        }
        let mut v: Vec<f64> = xs.iter().map(|x| x * 1e3).collect();
        v.sort_by(f64::total_cmp);
        let rank = ((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len());
        Self {
            mean_ms: v.iter().sum::<f64>() / v.len() as f64,
            p95_ms: v[rank - 1],
            samples: v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchReport {
    pub graph: String,
    pub nodes: usize,
    pub particles: usize,
    pub iters: usize,
    pub seed: u64,
    pub observation: Latency,
    pub motion: Latency,
}

/// Times `iters` motion updates (random world-frame actions) and `iters`
/// observation updates (noise-free signs with four cues at random
/// intersections) on one belief of `particles` particles.
pub fn bench(g: &NavGraph, particles: usize, iters: usize, seed: u64) -> Result<BenchReport> {
    let cfg = FilterConfig {
        num_particles: particles,
        ..FilterConfig::default()
    };
    let mut belief = BeliefState::init_uniform(g, &cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let nodes: Vec<usize> = g.intersection_nodes().collect();
    let noise = EpisodeConfig::default().noise;
    let (mut obs_t, mut mot_t) = (Vec::with_capacity(iters), Vec::with_capacity(iters));
    for _ in 0..iters {
        let action = DirectionCategory::new(rng.random_range(0..8u8))?;
        let t0 = Instant::now();
        belief.motion_update_topo(g, action, &cfg);
        mot_t.push(t0.elapsed().as_secs_f64());

        let at = nodes[rng.random_range(0..nodes.len())];
        let facing = DirectionCategory::new(rng.random_range(0..8u8))?.relative_heading();
        let targets = choose_sign_targets(g, at, 4, 10, &mut rng);
        let Some(obs) = synthesize_sign(g, at, facing, &targets, &noise, 0.0, &mut rng)? else { continue };
        let t0 = Instant::now();
        belief.observation_update(g, &obs, &cfg)?;
        obs_t.push(t0.elapsed().as_secs_f64());
    }
    Ok(BenchReport {
        graph: g.meta().name.clone(),
        nodes: g.node_count(),
        particles,
        iters,
        seed,
        observation: Latency::from_seconds(&obs_t),
        motion: Latency::from_seconds(&mot_t),
    })
}

/// Episodes with seeds `seed .. seed + episodes`; each filter is seeded
/// with its episode seed.
pub fn campaign(g: &NavGraph, episodes: usize, ep: &EpisodeConfig, filter: &FilterConfig, seed: u64) -> Result<Vec<(EpisodeLog, EpisodeResult)>> {
    let clock = StdClock::default();
    (seed..seed + episodes as u64)
        .map(|s| {
            let log = generate_episode(g, ep, s)?;
            let res = run_episode_mcl(g, &log, filter, s, &clock)?;
            Ok((log, res))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use waysign_core::sim::envgen::random_graph;

    #[test]
    fn alternating_log_alternates() {
        let g = random_graph(15, 6, 2);
        let log = alternating_log(&g, 10, &EpisodeConfig::default(), 3).unwrap();
        log.validate(&g).unwrap();
        assert_eq!(log.records.len(), 10);
        for (k, r) in log.records.iter().enumerate() {
            assert_eq!(matches!(r.event, EpisodeEvent::Motion(_)), k % 2 == 0);
        }
    }

    #[test]
    fn latency_stats() {
        let l = Latency::from_seconds(&[0.001, 0.002, 0.003, 0.004]);
        assert!((l.mean_ms - 2.5).abs() < 1e-12);
        assert!((l.p95_ms - 4.0).abs() < 1e-12);
        assert_eq!(Latency::from_seconds(&[]).samples, 0);
    }

    #[test]
    fn oracle_trace_is_small_with_many_particles() {
        let g = random_graph(12, 5, 8);
        let log = alternating_log(&g, 6, &EpisodeConfig::default(), 1).unwrap();
        let cfg = FilterConfig {
            num_particles: 20_000,
            mixture_alpha: 1.0,
            ..FilterConfig::default()
        };
        let tv = oracle_trace(&g, &log, &cfg, 5).unwrap();
        assert_eq!(tv.len(), log.records.len());
        assert!(tv.iter().all(|&d| d < 0.1), "{tv:?}");
    }

    #[test]
    fn bench_smoke() {
        let g = random_graph(20, 8, 1);
        let r = bench(&g, 500, 3, 1).unwrap();
        assert_eq!(r.motion.samples, 3);
        assert!(r.observation.samples <= 3);
    }
}
