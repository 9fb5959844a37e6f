use super::*;
use crate::cue::NavCue;
use crate::graph::{EdgeSpec, GraphMeta, NavNode};
use crate::math::Point3;
use alloc::vec;
use core::f64::consts::FRAC_PI_2;
use libm::exp;
use proptest::prelude::*;

fn dir(i: u8) -> DirectionCategory {
    DirectionCategory::new(i).unwrap()
}

fn undirected(pairs: &[(&str, &str)]) -> Vec<EdgeSpec> {
    let mut edges = Vec::new();
    for &(u, v) in pairs {
        edges.push(EdgeSpec::new(u, v));
        edges.push(EdgeSpec::new(v, u));
    }
    edges
}

/// a(0,0) - b(1,0) - cafe(2,0), with library(1,1) north of b.
fn tee() -> NavGraph {
    let nodes = vec![
        NavNode::intersection("a", Point3::new(0.0, 0.0, 0.0), 0),
        NavNode::intersection("b", Point3::new(1.0, 0.0, 0.0), 0),
        NavNode::place("c", Point3::new(2.0, 0.0, 0.0), 0, "cafe"),
        NavNode::place("d", Point3::new(1.0, 1.0, 0.0), 0, "library"),
    ];
    NavGraph::new(GraphMeta::default(), nodes, undirected(&[("a", "b"), ("b", "c"), ("b", "d")])).unwrap()
}

fn at(node: usize, heading: f64) -> Particle {
    Particle {
        node,
        heading,
        weight: 1.0,
        metric_pose: None,
    }
}

fn sign(cues: Vec<NavCue>) -> SignObservation {
    SignObservation::new(cues, 0.0).unwrap()
}

fn cfg_n(n: usize) -> FilterConfig {
    FilterConfig {
        num_particles: n,
        ..FilterConfig::default()
    }
}

#[test]
fn init_uniform_covers_intersections() {
    let g = tee();
    let b = BeliefState::init_uniform(&g, &cfg_n(2000), 7).unwrap();
    assert_eq!(b.len(), 2000);
    let on_a = b.particles().iter().filter(|p| p.node == 0).count();
    assert!(b.particles().iter().all(|p| p.node <= 1), "particles only on intersections");
    // Binomial(2000, 0.5): mean 1000, sd ~22.4.
    assert!((on_a as f64 - 1000.0).abs() < 3.0 * 22.4 + 1.0, "{on_a}");
    assert!(b.weights().all(|w| (w - 1.0 / 2000.0).abs() < 1e-15));
    for p in b.particles() {
        let d = DirectionCategory::discretize(p.heading).unwrap();
        assert!(math::angle_dist(p.heading, d.relative_heading()) < 0.6);
    }
}

#[test]
fn init_is_seeded() {
    let g = tee();
    let a1 = BeliefState::init_uniform(&g, &cfg_n(100), 3).unwrap();
    let a2 = BeliefState::init_uniform(&g, &cfg_n(100), 3).unwrap();
    let b = BeliefState::init_uniform(&g, &cfg_n(100), 4).unwrap();
    assert_eq!(a1.particles(), a2.particles());
    assert_ne!(a1.particles(), b.particles());
}

#[test]
fn init_rejects_bad_input() {
    let g = tee();
    assert!(BeliefState::init_uniform(&g, &cfg_n(0), 1).is_err());
    let only_places = NavGraph::new(
        GraphMeta::default(),
        vec![NavNode::place("p", Point3::new(0.0, 0.0, 0.0), 0, "x")],
        vec![],
    )
    .unwrap();
    assert!(matches!(
        BeliefState::init_uniform(&only_places, &cfg_n(10), 1),
        Err(Error::NoTraversableNodes)
    ));
    let bad = FilterConfig {
        motion: MotionProbs {
            p_correct: 0.9,
            p_stay: 0.2,
            p_random: 0.05,
        },
        ..FilterConfig::default()
    };
    assert!(bad.validate().is_err());
    assert!(FilterConfig { mixture_alpha: 1.5, ..FilterConfig::default() }.validate().is_err());
    assert!(FilterConfig { weight_floor: 0.0, ..FilterConfig::default() }.validate().is_err());
}

#[test]
fn direction_likelihood_hand_values() {
    let g = tee();
    let cafe = g.require("c").unwrap();
    let one_hot = |i: usize| {
        let mut d = [0.0; 8];
        d[i] = 1.0;
        d
    };
    // From a facing east, the cafe is straight ahead.
    let p = at(0, 0.0);
    let lik = |i, k| direction_likelihood(&g, &p, cafe, &one_hot(i), k);
    assert!((lik(0, Kernel::Aligned) - 1.0).abs() < 1e-12);
    assert!((lik(2, Kernel::Aligned) - exp(-1.0)).abs() < 1e-12);
    assert!((lik(4, Kernel::Aligned) - exp(-4.0)).abs() < 1e-12);
    assert!((lik(1, Kernel::Aligned) - exp(-(1.0 - FRAC_1_SQRT_2).powi(2))).abs() < 1e-12);
    assert!((lik(0, Kernel::Literal) - exp(-1.0)).abs() < 1e-12);
    assert!((lik(2, Kernel::Literal) - 1.0).abs() < 1e-12);

    // From b facing north, the cafe is to the right.
    let q = at(1, FRAC_PI_2);
    assert!((direction_likelihood(&g, &q, cafe, &one_hot(6), Kernel::Aligned) - 1.0).abs() < 1e-12);

    // At the target every direction counts.
    let here = at(cafe, 1.0);
    let spread = [0.125; 8];
    assert!((direction_likelihood(&g, &here, cafe, &spread, Kernel::Aligned) - 1.0).abs() < 1e-12);
}

#[test]
fn unreachable_target_scores_zero() {
    let nodes = vec![
        NavNode::intersection("a", Point3::new(0.0, 0.0, 0.0), 0),
        NavNode::place("p", Point3::new(1.0, 0.0, 0.0), 0, "exit"),
    ];
    let g = NavGraph::new(GraphMeta::default(), nodes, vec![EdgeSpec::new("p", "a")]).unwrap();
    let l = direction_likelihood(&g, &at(0, 0.0), 1, &[0.125; 8], Kernel::Aligned);
    assert_eq!(l, 0.0);
    let obs = sign(vec![NavCue::one_hot("exit", dir(0)).unwrap()]);
    let model = ObservationModel::prepare(&g, &obs, &FilterConfig::default());
    assert_eq!(model.likelihood(0, 0.0), 1e-9);
}

#[test]
fn cue_likelihood_mixes_label_matches() {
    let nodes = vec![
        NavNode::intersection("a", Point3::new(0.0, 0.0, 0.0), 0),
        NavNode::intersection("b", Point3::new(1.0, 0.0, 0.0), 0),
        NavNode::place("c", Point3::new(2.0, 0.0, 0.0), 0, "cafe"),
        NavNode::place("s", Point3::new(1.0, -1.0, 0.0), 0, "cafes"),
    ];
    let g = NavGraph::new(GraphMeta::default(), nodes, undirected(&[("a", "b"), ("b", "c"), ("b", "s")])).unwrap();
    let cfg = FilterConfig::default();
    let cue = NavCue::one_hot("cafe", dir(0)).unwrap();
    // Scores 1 and 0.8; "cafe" is ahead of b facing east, "cafes" is to the right.
    let expect = (1.0 / 1.8) * 1.0 + (0.8 / 1.8) * exp(-1.0);
    let got = cue_likelihood(&g, &at(1, 0.0), &cue, &cfg);
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");

    let model = ObservationModel::prepare(&g, &sign(vec![cue]), &cfg);
    assert!((model.likelihood(1, 0.0) - expect).abs() < 1e-12);

    let none = NavCue::one_hot("zzzzzzzz", dir(0)).unwrap();
    assert_eq!(cue_likelihood(&g, &at(1, 0.0), &none, &cfg), cfg.weight_floor);
}

#[test]
fn sign_likelihood_is_geometric_mean() {
    let g = tee();
    let cfg = FilterConfig::default();
    let obs = sign(vec![
        NavCue::one_hot("cafe", dir(0)).unwrap(),
        NavCue::one_hot("cafe", dir(2)).unwrap(),
    ]);
    let model = ObservationModel::prepare(&g, &obs, &cfg);
    // Cue likelihoods 1 and e^-1 from a facing east.
    assert!((model.likelihood(0, 0.0) - exp(-0.5)).abs() < 1e-12);

    // Second cue tuned to a likelihood of exactly 0.125.
    let half = [0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0];
    let mut eighth = [0.0; 8];
    let k_behind = exp(-4.0);
    // p·1 + (1-p)·e^-4 = 0.125
    let p = (0.125 - k_behind) / (1.0 - k_behind);
    eighth[0] = p;
    eighth[4] = 1.0 - p;
    let half_lik = 0.5 + 0.5 * k_behind;
    let obs = sign(vec![
        NavCue::new("cafe", half).unwrap(),
        NavCue::new("cafe", eighth).unwrap(),
    ]);
    let model = ObservationModel::prepare(&g, &obs, &cfg);
    let expect = libm::sqrt(half_lik * 0.125);
    assert!((model.likelihood(0, 0.0) - expect).abs() < 1e-12);
}

#[test]
fn observation_update_reweights() {
    let g = tee();
    let cfg = FilterConfig::default();
    let mut b = BeliefState::from_particles(vec![at(0, 0.0), at(0, core::f64::consts::PI - 1e-12)], 1).unwrap();
    let obs = sign(vec![NavCue::one_hot("cafe", dir(0)).unwrap()]);
    let report = b.observation_update(&g, &obs, &cfg).unwrap();
    let z = 1.0 + exp(-4.0);
    let w: Vec<f64> = b.weights().collect();
    assert!((w[0] - 1.0 / z).abs() < 1e-9);
    assert!((w[1] - exp(-4.0) / z).abs() < 1e-9);
    assert!(!report.resampled, "ESS {} stays above N/2", report.ess);
    assert!((report.ess - 1.0 / (w[0] * w[0] + w[1] * w[1])).abs() < 1e-12);
}

#[test]
fn observation_with_equal_likelihoods_keeps_weights() {
    let g = tee();
    let cfg = FilterConfig::default();
    let mut b = BeliefState::from_particles(vec![at(0, 0.0), at(1, 0.0)], 1).unwrap();
    // At b facing east and a facing east the cafe is ahead in both.
    let obs = sign(vec![NavCue::one_hot("cafe", dir(0)).unwrap()]);
    b.observation_update(&g, &obs, &cfg).unwrap();
    let w: Vec<f64> = b.weights().collect();
    assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
}

fn skewed_belief(heavy: usize, light: usize) -> BeliefState {
    let mut ps = vec![at(0, 0.0); heavy];
    ps.extend(vec![at(0, core::f64::consts::PI - 1e-12); light]);
    BeliefState::from_particles(ps, 11).unwrap()
}

fn count_heavy(b: &BeliefState) -> usize {
    b.particles().iter().filter(|p| math::angle_dist(p.heading, 0.0) < 1.0).count()
}

#[test]
fn resampling_pure_systematic() {
    let g = tee();
    let cfg = FilterConfig {
        mixture_alpha: 1.0,
        ..FilterConfig::default()
    };
    let mut b = skewed_belief(10, 90);
    let obs = sign(vec![NavCue::one_hot("cafe", dir(0)).unwrap()]);
    let report = b.observation_update(&g, &obs, &cfg).unwrap();
    assert!(report.resampled);
    assert!(b.weights().all(|w| (w - 0.01).abs() < 1e-15));
    let share = 10.0 / (10.0 + 90.0 * exp(-4.0));
    let heavy = count_heavy(&b) as f64;
    assert!((heavy - 100.0 * share).abs() <= 1.0, "{heavy} vs {}", 100.0 * share);
}

#[test]
fn resampling_reciprocal_share() {
    let g = tee();
    let cfg = FilterConfig::default();
    let mut b = skewed_belief(10, 90);
    let obs = sign(vec![NavCue::one_hot("cafe", dir(0)).unwrap()]);
    b.observation_update(&g, &obs, &cfg).unwrap();
    // 90 systematic draws, 10 reciprocal draws.
    let z = 10.0 + 90.0 * exp(-4.0);
    let (wh, wl) = (1.0 / z, exp(-4.0) / z);
    let eps = 1e-4;
    let (rh, rl) = (10.0 / (wh + eps), 90.0 / (wl + eps));
    let expect = 90.0 * 10.0 / z + 10.0 * rh / (rh + rl);
    let heavy = count_heavy(&b) as f64;
    assert!((heavy - expect).abs() <= 2.0, "{heavy} vs {expect}");
}

#[test]
fn resampled_headings_are_jittered() {
    let g = tee();
    let cfg = FilterConfig {
        mixture_alpha: 1.0,
        ..FilterConfig::default()
    };
    let mut b = BeliefState::from_particles(vec![at(0, 0.0); 4000], 5).unwrap();
    b.resample(&g, &cfg);
    let hs: Vec<f64> = b.particles().iter().map(|p| p.heading).collect();
    let m = hs.iter().sum::<f64>() / hs.len() as f64;
    let var = hs.iter().map(|h| (h - m) * (h - m)).sum::<f64>() / hs.len() as f64;
    assert!(m.abs() < 0.01, "{m}");
    assert!((libm::sqrt(var) - 0.1).abs() < 0.01, "{}", libm::sqrt(var));
}

#[test]
fn candidate_edge_rules() {
    let g = tee();
    let b = 1;
    let to = |a: u8| g.node(motion::candidate_edge(&g, b, dir(a)).unwrap().to).id.clone();
    assert_eq!(to(0), "c");
    assert_eq!(to(2), "d");
    assert_eq!(to(4), "a");
    // North-east is one step from both east and north; east has the lower index.
    assert_eq!(to(1), "c");
    // South is two steps from east and west.
    assert_eq!(to(6), "c");
    let lonely = NavGraph::new(
        GraphMeta::default(),
        vec![NavNode::intersection("x", Point3::new(0.0, 0.0, 0.0), 0)],
        vec![],
    )
    .unwrap();
    assert!(motion::candidate_edge(&lonely, 0, dir(0)).is_none());
}

#[test]
fn motion_transition_frequencies() {
    let g = tee();
    let cfg = FilterConfig::default();
    let n = 20000;
    let mut b = BeliefState::from_particles(vec![at(1, 0.0); n], 9).unwrap();
    b.motion_update_topo(&g, dir(0), &cfg);
    let count = |id: &str| {
        let v = g.require(id).unwrap();
        b.particles().iter().filter(|p| p.node == v).count() as f64
    };
    let expect = [
        ("c", 0.9 + 0.05 / 3.0),
        ("b", 0.05),
        ("a", 0.05 / 3.0),
        ("d", 0.05 / 3.0),
    ];
    for (id, p) in expect {
        let mean = n as f64 * p;
        let sd = libm::sqrt(n as f64 * p * (1.0 - p));
        assert!((count(id) - mean).abs() < 3.0 * sd + 1.0, "{id}: {} vs {mean}", count(id));
    }
    // Movers take the edge heading, stayers keep theirs.
    let c = g.require("c").unwrap();
    let d = g.require("d").unwrap();
    for p in b.particles() {
        if p.node == c || p.node == 1 {
            assert!(math::angle_dist(p.heading, 0.0) < 0.6);
        }
        if p.node == d {
            assert!(math::angle_dist(p.heading, FRAC_PI_2) < 0.6);
        }
    }
}

#[test]
fn motion_without_out_edges_is_noop() {
    let g = NavGraph::new(
        GraphMeta::default(),
        vec![NavNode::intersection("x", Point3::new(0.0, 0.0, 0.0), 0)],
        vec![],
    )
    .unwrap();
    let mut b = BeliefState::from_particles(vec![at(0, 0.3); 10], 1).unwrap();
    let before = b.particles().to_vec();
    b.motion_update_topo(&g, dir(0), &FilterConfig::default());
    assert_eq!(b.particles(), &before[..]);
}

#[test]
fn odometry_snaps_or_penalizes() {
    let g = tee();
    let cfg = FilterConfig {
        mode: FilterMode::Topometric,
        odom_noise: OdomNoise::ZERO,
        ..FilterConfig::default()
    };
    let mut b = BeliefState::from_particles(vec![at(0, 0.0), at(0, core::f64::consts::PI - 1e-12)], 1).unwrap();
    // One metre forward: east lands on b, west lands at x = -1 and snaps back to a.
    b.motion_update_metric(&g, &OdometryDelta { dx: 1.0, ..Default::default() }, &cfg);
    assert_eq!(b.particles()[0].node, 1);
    assert_eq!(b.particles()[1].node, 0);
    let w: Vec<f64> = b.weights().collect();
    assert!((w[0] - 0.5).abs() < 1e-12);

    // Six metres: east ends 4 m from the cafe, west ends 6 m from a.
    let mut b = BeliefState::from_particles(vec![at(0, 0.0), at(0, core::f64::consts::PI - 1e-12)], 1).unwrap();
    b.motion_update_metric(&g, &OdometryDelta { dx: 6.0, ..Default::default() }, &cfg);
    let w: Vec<f64> = b.weights().collect();
    assert!((w[0] - 2.0 / 3.0).abs() < 1e-12, "{w:?}");
    assert!((w[1] - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(b.particles()[0].node, g.require("c").unwrap());
    assert_eq!(b.particles()[1].node, 0, "off-graph particle keeps its node");
}

#[test]
fn snap_respects_floor() {
    let g = tee();
    let up = MetricPose {
        x: 0.0,
        y: 0.0,
        z: g.meta().floor_height,
        theta: 0.0,
    };
    assert_eq!(snap_to_node(&g, &up, 5.0), None);
    let near = MetricPose { z: 0.0, x: 0.4, ..up };
    assert_eq!(snap_to_node(&g, &near, 5.0), Some(0));
    let mid = MetricPose { z: 0.0, x: 0.5, ..up };
    assert_eq!(snap_to_node(&g, &mid, 5.0), Some(0), "ties go to the lower index");
}

#[test]
fn estimate_picks_heaviest_node() {
    let g = tee();
    let mut ps = vec![at(1, 0.1), at(1, -0.1), at(0, 2.0)];
    ps[2].weight = 1.5;
    let b = BeliefState::from_particles(ps, 1).unwrap();
    let e = b.estimate(&g);
    assert_eq!(e.node, 1);
    assert!(e.heading.abs() < 1e-12);
    assert!((e.confidence - 2.0 / 3.5).abs() < 1e-12);
    assert!(estimate_is_correct(&e, 1, 0.7));
    assert!(!estimate_is_correct(&e, 1, 0.8));
    assert!(!estimate_is_correct(&e, 0, 0.0));
}

#[test]
fn marginals_sum_to_one() {
    let g = tee();
    let b = BeliefState::init_uniform(&g, &cfg_n(500), 2).unwrap();
    let m = b.node_marginal(g.node_count());
    assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let s = b.state_marginal(g.node_count());
    for v in 0..g.node_count() {
        let row: f64 = s[v * 8..v * 8 + 8].iter().sum();
        assert!((row - m[v]).abs() < 1e-12);
    }
}

#[test]
fn updates_are_deterministic() {
    let g = tee();
    let cfg = cfg_n(300);
    let obs = sign(vec![NavCue::one_hot("library", dir(2)).unwrap()]);
    let run = || {
        let mut b = BeliefState::init_uniform(&g, &cfg, 42).unwrap();
        for _ in 0..3 {
            b.motion_update_topo(&g, dir(0), &cfg);
            b.observation_update(&g, &obs, &cfg).unwrap();
        }
        b.particles().to_vec()
    };
    assert_eq!(run(), run());
}

use core::f64::consts::FRAC_1_SQRT_2;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_stay_normalized(seed in 0u64..1000, steps in proptest::collection::vec((0u8..8, any::<bool>()), 1..6)) {
        let g = tee();
        let cfg = cfg_n(64);
        let mut b = BeliefState::init_uniform(&g, &cfg, seed).unwrap();
        for (d, observe) in steps {
            if observe {
                let obs = sign(vec![NavCue::one_hot("cafe", dir(d)).unwrap()]);
                b.observation_update(&g, &obs, &cfg).unwrap();
            } else {
                b.motion_update_topo(&g, dir(d), &cfg);
            }
            let total: f64 = b.weights().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(b.weights().all(|w| w >= 0.0 && w.is_finite()));
            prop_assert!(b.particles().iter().all(|p| p.heading >= -core::f64::consts::PI && p.heading < core::f64::consts::PI));
            prop_assert_eq!(b.len(), 64);
        }
    }

    #[test]
    fn likelihood_is_bounded(node in 0usize..4, heading in -3.0f64..3.0, d in 0u8..8, temp in 0.0f64..1.0) {
        let g = tee();
        let cfg = FilterConfig::default();
        let dist = crate::sim::blurred_distribution(dir(d), temp);
        let obs = sign(vec![NavCue::new("library", dist).unwrap(), NavCue::one_hot("cafe", dir(d)).unwrap()]);
        let l = ObservationModel::prepare(&g, &obs, &cfg).likelihood(node, heading);
        prop_assert!(l >= cfg.weight_floor && l <= 1.0 + 1e-12);
    }
}
