//! Synthetic environments: small random geometric graphs and a two-building
//! campus with an outdoor path network.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cue::levenshtein_similarity;
use crate::direction::DirectionCategory;
use crate::graph::{GraphBuilder, GraphMeta, NavGraph, NavNode, PortalKind};
use crate::math::{self, Point3};

const ONSETS: [&str; 24] = [
    "b", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "ch", "sh", "th", "br", "kr", "st", "pl",
];
const VOWELS: [&str; 8] = ["a", "e", "i", "o", "u", "y", "ai", "ou"];

/// Hands out pronounceable place names that stay well apart in edit
/// distance: any two differ by more than the default match threshold, so an
/// uncorrupted label matches exactly one place.
#[derive(Debug, Default)]
pub struct LabelGen {
    used: Vec<String>,
}

impl LabelGen {
    pub const MAX_SIMILARITY: f64 = crate::cue::DEFAULT_MIN_MATCH_SCORE;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn next(&mut self, rng: &mut ChaCha8Rng) -> String {
        for attempt in 0.. {
            let syllables = 4 + usize::from(attempt > 200) + usize::from(attempt > 1000);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
                w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
            }
            if self
                .used
                .iter()
                .all(|u| levenshtein_similarity(u, &w) < Self::MAX_SIMILARITY)
            {
                self.used.push(w.clone());
                return w;
            }
        }
        unreachable!()
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Random spanning tree of a candidate edge list plus each remaining edge
/// with probability `extra`. Returns the chosen pairs.
fn sparse_connected(n: usize, mut candidates: Vec<(usize, usize)>, extra: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    candidates.shuffle(rng);
    let mut dsu = Dsu::new(n);
    let mut chosen = Vec::new();
    let mut rest = Vec::new();
    for (a, b) in candidates {
        if dsu.union(a, b) {
            chosen.push((a, b));
        } else {
            rest.push((a, b));
        }
    }
    for e in rest {
        if rng.random::<f64>() < extra {
            chosen.push(e);
        }
    }
    chosen
}

fn jitter(rng: &mut ChaCha8Rng, amount: f64) -> f64 {
    (rng.random::<f64>() * 2.0 - 1.0) * amount
}

/// Random connected graph for filter cross-checks: `intersections` nodes in
/// a 30 m square joined by a nearest-earlier-node tree plus a few short
/// extra links, and `places` labeled leaves.
pub fn random_graph(intersections: usize, places: usize, seed: u64) -> NavGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    let mut pos: Vec<Point3> = Vec::new();
    for i in 0..intersections.max(1) {
        let p = loop {
            let p = Point3::new(rng.random::<f64>() * 30.0, rng.random::<f64>() * 30.0, 0.0);
            if pos.iter().all(|q| q.dist(p) > 1.0) {
                break p;
            }
        };
        pos.push(p);
        b.push_node(NavNode::intersection(format!("i{i:03}"), p, 0));
    }
    for i in 1..pos.len() {
        let nearest = (0..i)
            .min_by(|&a, &c| pos[a].dist(pos[i]).total_cmp(&pos[c].dist(pos[i])))
            .unwrap_or(0);
        b.connect(i, nearest);
    }
    for i in 0..pos.len() {
        let mut order: Vec<usize> = (0..pos.len()).filter(|&j| j != i).collect();
        order.sort_by(|&a, &c| pos[a].dist(pos[i]).total_cmp(&pos[c].dist(pos[i])));
        for &j in order.iter().take(3) {
            if rng.random::<f64>() < 0.3 {
                b.connect(i, j);
            }
        }
    }
    let mut labels = LabelGen::new();
    for k in 0..places {
        let anchor = rng.random_range(0..pos.len());
        let a = rng.random::<f64>() * core::f64::consts::TAU;
        let (s, c) = math::sin_cos(a);
        let p = Point3::new(pos[anchor].x + 0.7 * c, pos[anchor].y + 0.7 * s, 0.0);
        let idx = b.push_node(NavNode::place(format!("p{k:03}"), p, 0, &labels.next(&mut rng)));
        b.connect(anchor, idx);
    }
    b.build(GraphMeta::named(format!("random-{seed}")))
        .expect("generated graph is valid")
}

/// [`random_graph`] with about a quarter of the nodes as places.
pub fn random_geometric_graph(n: usize, seed: u64) -> NavGraph {
    let places = n / 4;
    random_graph(n - places, places, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampusConfig {
    pub buildings: usize,
    pub floors: usize,
    /// Corridor intersections per floor along x and y.
    pub floor_grid: (usize, usize),
    pub corridor_spacing: f64,
    pub outdoor_grid: (usize, usize),
    pub outdoor_spacing: f64,
    /// Probability that an intersection gets a room.
    pub room_prob: f64,
    /// Probability of each further room once an intersection has one.
    pub extra_room_prob: f64,
    pub outdoor_place_prob: f64,
    /// Probability of keeping each grid link beyond a spanning tree.
    pub extra_link_prob: f64,
}

impl Default for CampusConfig {
    fn default() -> Self {
        Self {
            buildings: 2,
            floors: 2,
            floor_grid: (8, 6),
            corridor_spacing: 6.0,
            outdoor_grid: (10, 8),
            outdoor_spacing: 15.0,
            room_prob: 0.8,
            extra_room_prob: 0.5,
            outdoor_place_prob: 0.7,
            extra_link_prob: 0.1,
        }
    }
}

fn grid_links(nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let mut links = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if i + 1 < nx {
                links.push((k, k + 1));
            }
            if j + 1 < ny {
                links.push((k, k + nx));
            }
        }
    }
    links
}

/// Attaches a labeled leaf 2.5 m from `anchor` along a compass direction not
/// already used by one of its edges.
fn attach_place(
    b: &mut GraphBuilder,
    anchor: usize,
    id: String,
    label: &str,
    used_dirs: &mut Vec<DirectionCategory>,
    rng: &mut ChaCha8Rng,
) {
    let free: Vec<DirectionCategory> = DirectionCategory::all().filter(|d| !used_dirs.contains(d)).collect();
    if free.is_empty() {
        return;
    }
    let d = free[rng.random_range(0..free.len())];
    used_dirs.push(d);
    let u = d.unit_vector();
    let a = &b.nodes[anchor];
    let p = Point3::new(a.position.x + 2.5 * u.x, a.position.y + 2.5 * u.y, a.position.z);
    let node = NavNode::place(id, p, a.floor, label);
    let node = match a.building.clone() {
        Some(bld) => node.with_building(bld),
        None => node,
    };
    let idx = b.push_node(node);
    b.connect(anchor, idx);
}

fn edge_dirs(b: &GraphBuilder, idx: usize, links: &[(usize, usize)], map: &[usize]) -> Vec<DirectionCategory> {
    links
        .iter()
        .filter_map(|&(a, c)| {
            let (from, to) = if map[a] == idx {
                (map[a], map[c])
            } else if map[c] == idx {
                (map[c], map[a])
            } else {
                return None;
            };
            let (p, q) = (b.nodes[from].position, b.nodes[to].position);
            DirectionCategory::discretize(math::atan2(q.y - p.y, q.x - p.x)).ok()
        })
        .collect()
}

/// A campus of multi-floor buildings north of an outdoor path grid, with
/// rooms and outdoor places as labeled leaves, a lift and a staircase per
/// building, and one entrance per building joining the outdoor network.
pub fn campus(cfg: &CampusConfig, seed: u64) -> NavGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = LabelGen::new();
    let mut b = GraphBuilder::new();
    let floor_height = crate::graph::DEFAULT_FLOOR_HEIGHT;

    // Outdoor network.
    let (ox, oy) = cfg.outdoor_grid;
    let mut outdoor = Vec::with_capacity(ox * oy);
    for j in 0..oy {
        for i in 0..ox {
            let p = Point3::new(
                i as f64 * cfg.outdoor_spacing + jitter(&mut rng, 2.0),
                j as f64 * cfg.outdoor_spacing + jitter(&mut rng, 2.0),
                0.0,
            );
            outdoor.push(b.push_node(NavNode::intersection(format!("out/i{:04}", j * ox + i), p, 0)));
        }
    }
    let mut links = grid_links(ox, oy);
    for j in 0..oy.saturating_sub(1) {
        for i in 0..ox.saturating_sub(1) {
            if rng.random::<f64>() < 0.1 {
                links.push((j * ox + i, (j + 1) * ox + i + 1));
            }
        }
    }
    let out_links = sparse_connected(ox * oy, links, cfg.extra_link_prob + 0.1, &mut rng);
    for &(a, c) in &out_links {
        b.connect(outdoor[a], outdoor[c]);
    }
    let mut place_no = 0;
    for k in 0..outdoor.len() {
        if rng.random::<f64>() < cfg.outdoor_place_prob {
            let mut used = edge_dirs(&b, outdoor[k], &out_links, &outdoor);
            place_no += 1;
            let label = labels.next(&mut rng);
            attach_place(&mut b, outdoor[k], format!("out/p{place_no:04}"), &label, &mut used, &mut rng);
        }
    }

    // Buildings north of the outdoor grid.
    let (fx, fy) = cfg.floor_grid;
    let width = (fx.max(1) - 1) as f64 * cfg.corridor_spacing;
    let north = (oy.max(1) - 1) as f64 * cfg.outdoor_spacing + 20.0;
    let stride = ((ox.max(1) - 1) as f64 * cfg.outdoor_spacing) / cfg.buildings.max(1) as f64;
    for bi in 0..cfg.buildings {
        let bname = format!("b{}", bi + 1);
        let origin = (10.0 + bi as f64 * stride.max(width + 20.0), north);
        let lift_cell = (1, 1);
        let stairs_cell = (fx.saturating_sub(2), fy.saturating_sub(2));
        let entrance_cell = (fx / 2, 0);
        let mut prev_lift: Option<usize> = None;
        let mut prev_stairs: Option<usize> = None;
        for f in 0..cfg.floors {
            let z = f as f64 * floor_height;
            let fl = f as i32;
            let prefix = format!("{bname}/f{f}");
            let mut grid = Vec::with_capacity(fx * fy);
            for j in 0..fy {
                for i in 0..fx {
                    let p = Point3::new(
                        origin.0 + i as f64 * cfg.corridor_spacing + jitter(&mut rng, 0.8),
                        origin.1 + j as f64 * cfg.corridor_spacing + jitter(&mut rng, 0.8),
                        z,
                    );
                    let node = NavNode::intersection(format!("{prefix}/i{:04}", j * fx + i), p, fl).with_building(bname.clone());
                    grid.push(b.push_node(node));
                }
            }
            let links = sparse_connected(fx * fy, grid_links(fx, fy), cfg.extra_link_prob, &mut rng);
            for &(a, c) in &links {
                b.connect(grid[a], grid[c]);
            }
            let mut dirs: Vec<Vec<DirectionCategory>> = (0..grid.len()).map(|k| edge_dirs(&b, grid[k], &links, &grid)).collect();

            let mut portal = |b: &mut GraphBuilder, cell: (usize, usize), kind: PortalKind, offset: (f64, f64), name: &str| {
                let k = cell.1 * fx + cell.0;
                let anchor = grid[k];
                let a = b.nodes[anchor].position;
                let p = Point3::new(origin.0 + cell.0 as f64 * cfg.corridor_spacing + offset.0, origin.1 + cell.1 as f64 * cfg.corridor_spacing + offset.1, z);
                let d = DirectionCategory::discretize(math::atan2(p.y - a.y, p.x - a.x)).unwrap_or_default();
                dirs[k].push(d);
                let idx = b.push_node(NavNode::portal(format!("{prefix}/{name}"), p, fl, kind).with_building(bname.clone()));
                b.connect(anchor, idx);
                idx
            };
            let lift = portal(&mut b, lift_cell, PortalKind::Lift, (-2.5, -2.5), "lift");
            let stairs = portal(&mut b, stairs_cell, PortalKind::Stairs, (2.5, 2.5), "stairs");
            if let Some(l) = prev_lift {
                b.connect(l, lift);
            }
            if let Some(s) = prev_stairs {
                b.connect(s, stairs);
            }
            prev_lift = Some(lift);
            prev_stairs = Some(stairs);
            if f == 0 {
                let entrance = portal(&mut b, entrance_cell, PortalKind::Entrance, (0.0, -4.0), "entrance");
                let ep = b.nodes[entrance].position;
                let nearest = outdoor
                    .iter()
                    .copied()
                    .min_by(|&a, &c| b.nodes[a].position.dist(ep).total_cmp(&b.nodes[c].position.dist(ep)))
                    .expect("outdoor grid is non-empty");
                b.connect(entrance, nearest);
            }

            let mut room_no = 0;
            for k in 0..grid.len() {
                let mut rooms = usize::from(rng.random::<f64>() < cfg.room_prob);
                while rooms > 0 && rooms < 4 && rng.random::<f64>() < cfg.extra_room_prob {
                    rooms += 1;
                }
                for _ in 0..rooms {
                    room_no += 1;
                    let label = labels.next(&mut rng);
                    attach_place(&mut b, grid[k], format!("{prefix}/p{room_no:04}"), &label, &mut dirs[k], &mut rng);
                }
            }
        }
    }
    let mut meta = GraphMeta::named(format!("campus-{seed}"));
    meta.floor_height = floor_height;
    b.build(meta).expect("generated campus is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeKind;

    #[test]
    fn labels_are_distinct_and_far_apart() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut gen = LabelGen::new();
        let words: Vec<String> = (0..200).map(|_| gen.next(&mut rng)).collect();
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                assert!(levenshtein_similarity(&words[i], &words[j]) < LabelGen::MAX_SIMILARITY);
            }
        }
    }

    #[test]
    fn random_graphs_are_connected() {
        for seed in 0..20 {
            let g = random_graph(30, 10, seed);
            assert_eq!(g.node_count(), 40);
            assert_eq!(g.weak_components().len(), 1);
            assert_eq!(g.labeled_nodes().len(), 10);
        }
    }

    #[test]
    fn campus_shape() {
        let g = campus(&CampusConfig::default(), 7);
        let n = g.node_count();
        assert!((500..=700).contains(&n), "{n} nodes");
        assert_eq!(g.weak_components().len(), 1);
        let lifts = g
            .nodes()
            .iter()
            .filter(|v| v.portal_kind == Some(PortalKind::Lift))
            .count();
        assert_eq!(lifts, 4);
        assert!(g.nodes().iter().filter(|v| v.kind == NodeKind::Place).count() > 150);
        // Deterministic.
        assert_eq!(g, campus(&CampusConfig::default(), 7));
    }
}
