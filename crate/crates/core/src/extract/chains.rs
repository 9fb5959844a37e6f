//! Polyline graphs shared by skeleton tracing and the chordal-axis
//! centerline: decomposition into chains, junction merging, spur pruning
//! and Douglas–Peucker simplification.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::simplify_polyline;
use crate::math::{point_segment_dist, Point2};

/// Fine-grained undirected graph (one vertex per pixel or per triangle edge
/// midpoint).
#[derive(Debug, Clone, Default)]
pub(crate) struct Sketch {
    pub pts: Vec<Point2>,
    pub adj: Vec<BTreeSet<usize>>,
}

impl Sketch {
    pub fn add(&mut self, p: Point2) -> usize {
        self.pts.push(p);
        self.adj.push(BTreeSet::new());
        self.pts.len() - 1
    }

    pub fn link(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub a: usize,
    pub b: usize,
    /// Polyline from node `a` to node `b`, endpoints included.
    pub pts: Vec<Point2>,
}

impl Chain {
    pub fn length(&self) -> f64 {
        self.pts.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    fn reversed(mut self) -> Self {
        self.pts.reverse();
        core::mem::swap(&mut self.a, &mut self.b);
        self
    }
}

/// Nodes (vertices of degree ≠ 2) joined by polyline chains.
#[derive(Debug, Clone, Default)]
pub(crate) struct Chains {
    pub nodes: Vec<Point2>,
    pub alive: Vec<bool>,
    pub chains: Vec<Option<Chain>>,
}

impl Chains {
    fn add_node(&mut self, p: Point2) -> usize {
        self.nodes.push(p);
        self.alive.push(true);
        self.nodes.len() - 1
    }

    pub fn live(&self) -> impl Iterator<Item = (usize, &Chain)> + '_ {
        self.chains.iter().enumerate().filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for (_, c) in self.live() {
            deg[c.a] += 1;
            deg[c.b] += 1;
        }
        deg
    }

    #[cfg(test)]
    pub fn total_length(&self) -> f64 {
        self.live().map(|(_, c)| c.length()).sum()
    }

    pub fn from_sketch(sk: &Sketch) -> Self {
        let n = sk.pts.len();
        let mut out = Chains::default();
        let mut node_of: Vec<Option<usize>> = vec![None; n];
        for v in 0..n {
            if sk.adj[v].len() != 2 {
                node_of[v] = Some(out.add_node(sk.pts[v]));
            }
        }
        let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let walk = |start: usize, first: usize, node_of: &[Option<usize>], used: &mut BTreeSet<(usize, usize)>| {
            let mut pts = vec![sk.pts[start], sk.pts[first]];
            used.insert(key(start, first));
            let (mut prev, mut cur) = (start, first);
            while node_of[cur].is_none() {
                let next = *sk.adj[cur].iter().find(|&&x| x != prev).expect("degree-2 vertex");
                used.insert(key(cur, next));
                pts.push(sk.pts[next]);
                prev = cur;
                cur = next;
            }
            (cur, pts)
        };
        for v in 0..n {
            let Some(a) = node_of[v] else { continue };
            for &u in &sk.adj[v] {
                if used.contains(&key(v, u)) {
                    continue;
                }
                let (end, pts) = walk(v, u, &node_of, &mut used);
                let b = node_of[end].expect("walk ends at a node");
                out.chains.push(Some(Chain { a, b, pts }));
            }
        }
        // Whatever is left forms pure cycles.
        for v in 0..n {
            if node_of[v].is_some() || sk.adj[v].iter().all(|&u| used.contains(&key(v, u))) {
                continue;
            }
            let a = out.add_node(sk.pts[v]);
            node_of[v] = Some(a);
            let u = *sk.adj[v].iter().next().expect("cycle vertex has neighbours");
            let (_, pts) = walk(v, u, &node_of, &mut used);
            out.chains.push(Some(Chain { a, b: a, pts }));
        }
        out
    }

    /// Splits every self-loop at its middle vertex so each chain joins two
    /// distinct nodes.
    pub fn split_self_loops(&mut self) {
        for i in 0..self.chains.len() {
            let is_loop = matches!(&self.chains[i], Some(c) if c.a == c.b);
            if !is_loop {
                continue;
            }
            let c = self.chains[i].take().expect("checked above");
            if c.pts.len() < 4 {
                continue;
            }
            let m = c.pts.len() / 2;
            let mid = self.add_node(c.pts[m]);
            self.chains[i] = Some(Chain {
                a: c.a,
                b: mid,
                pts: c.pts[..=m].to_vec(),
            });
            self.chains.push(Some(Chain {
                a: mid,
                b: c.b,
                pts: c.pts[m..].to_vec(),
            }));
        }
    }

    /// Collapses groups of junctions (degree ≥ 3) closer than `radius` to
    /// their centroid. Short chains inside a group disappear.
    pub fn merge_junctions(&mut self, radius: f64) {
        let deg = self.degrees();
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let junctions: Vec<usize> = (0..n).filter(|&v| self.alive[v] && deg[v] >= 3).collect();
        for (k, &u) in junctions.iter().enumerate() {
            for &v in &junctions[k + 1..] {
                if self.nodes[u].dist(self.nodes[v]) < radius {
                    let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                    if ru != rv {
                        parent[ru.max(rv)] = ru.min(rv);
                    }
                }
            }
        }
        let mut sum = vec![(Point2::default(), 0usize); n];
        for v in 0..n {
            let r = find(&mut parent, v);
            sum[r].0 = sum[r].0 + self.nodes[v];
            sum[r].1 += 1;
        }
        let mut moved = false;
        for v in 0..n {
            let r = find(&mut parent, v);
            if r != v {
                self.alive[v] = false;
                moved = true;
            } else if sum[v].1 > 1 {
                self.nodes[v] = sum[v].0.scale(1.0 / sum[v].1 as f64);
            }
        }
        if !moved {
            return;
        }
        for slot in self.chains.iter_mut() {
            let Some(c) = slot else { continue };
            c.a = find(&mut parent, c.a);
            c.b = find(&mut parent, c.b);
            let last = c.pts.len() - 1;
            c.pts[0] = self.nodes[c.a];
            c.pts[last] = self.nodes[c.b];
            if c.a == c.b && c.length() < 2.0 * radius {
                *slot = None;
            }
        }
        self.split_self_loops();
    }

    /// Removes leaf branches (leaf node to junction) shorter than
    /// `threshold(junction position)`. With `simultaneous`, every qualifying
    /// branch of a round goes at once, otherwise the shortest one; rounds
    /// repeat until nothing qualifies. With `isolated`, lone chains between
    /// two leaves go too when shorter than the larger threshold of their
    /// ends. Nodes left with degree 2 are dissolved into a single chain.
    pub fn prune(&mut self, threshold: &dyn Fn(Point2) -> f64, simultaneous: bool, isolated: bool) {
        self.dissolve_degree_two();
        loop {
            let deg = self.degrees();
            let mut doomed: Vec<(f64, usize, usize)> = Vec::new();
            for (i, c) in self.live() {
                if c.a == c.b {
                    continue;
                }
                let len = c.length();
                if isolated && deg[c.a] == 1 && deg[c.b] == 1 {
                    if len < threshold(self.nodes[c.a]).max(threshold(self.nodes[c.b])) {
                        doomed.push((len, i, c.a));
                        doomed.push((len, i, c.b));
                    }
                    continue;
                }
                let (leaf, junction) = if deg[c.a] == 1 && deg[c.b] >= 3 {
                    (c.a, c.b)
                } else if deg[c.b] == 1 && deg[c.a] >= 3 {
                    (c.b, c.a)
                } else {
                    continue;
                };
                if len < threshold(self.nodes[junction]) {
                    doomed.push((len, i, leaf));
                }
            }
            if doomed.is_empty() {
                return;
            }
            if !simultaneous {
                doomed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                doomed.truncate(1);
            }
            for (_, i, leaf) in doomed {
                self.chains[i] = None;
                self.alive[leaf] = false;
            }
            self.dissolve_degree_two();
        }
    }

    /// Joins the two chains meeting at each degree-2 node.
    pub fn dissolve_degree_two(&mut self) {
        loop {
            let deg = self.degrees();
            let mut changed = false;
            for v in 0..self.nodes.len() {
                if !self.alive[v] || deg[v] != 2 {
                    continue;
                }
                let ends: Vec<usize> = self.live().filter(|(_, c)| c.a == v || c.b == v).map(|(i, _)| i).collect();
                if ends.len() != 2 {
                    // A single self-loop: a pure cycle, nothing to join.
                    continue;
                }
                let c1 = self.chains[ends[0]].take().expect("live chain");
                let c2 = self.chains[ends[1]].take().expect("live chain");
                let c1 = if c1.b == v { c1 } else { c1.reversed() };
                let c2 = if c2.a == v { c2 } else { c2.reversed() };
                let mut pts = c1.pts;
                pts.extend_from_slice(&c2.pts[1..]);
                self.chains[ends[0]] = Some(Chain { a: c1.a, b: c2.b, pts });
                self.alive[v] = false;
                changed = true;
                break;
            }
            if !changed {
                self.split_self_loops();
                return;
            }
        }
    }

    /// Simplifies every chain with Douglas–Peucker, keeping retained bends
    /// as extra nodes.
    pub fn to_planar(&self, tol: f64) -> PlanarGraph {
        let mut out = PlanarGraph::default();
        let mut index = vec![usize::MAX; self.nodes.len()];
        let deg = self.degrees();
        for v in 0..self.nodes.len() {
            if self.alive[v] && (deg[v] > 0 || !self.chains.iter().any(|c| c.is_some())) {
                index[v] = out.add(self.nodes[v]);
            }
        }
        for (_, c) in self.live() {
            let keep = simplify_polyline(&c.pts, tol);
            let mut prev = index[c.a];
            for &k in &keep[1..keep.len() - 1] {
                let n = out.add(c.pts[k]);
                out.link(prev, n);
                prev = n;
            }
            out.link(prev, index[c.b]);
        }
        out
    }
}

/// Undirected straight-edge graph in meters; edges are stored as
/// `(min, max)` index pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanarGraph {
    pub pts: Vec<Point2>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl PlanarGraph {
    pub fn add(&mut self, p: Point2) -> usize {
        self.pts.push(p);
        self.pts.len() - 1
    }

    pub fn link(&mut self, a: usize, b: usize) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }

    pub fn nearest_node(&self, p: Point2) -> Option<usize> {
        (0..self.pts.len()).min_by(|&i, &j| p.dist(self.pts[i]).total_cmp(&p.dist(self.pts[j])))
    }

    /// Attaches `p` to the graph: projects onto the nearest edge within
    /// `max_dist`, reusing an endpoint within `merge` of the projection and
    /// otherwise splitting the edge. Falls back to the nearest node for
    /// edgeless graphs.
    pub fn attach(&mut self, p: Point2, max_dist: f64, merge: f64) -> Option<usize> {
        let mut best: Option<(f64, (usize, usize))> = None;
        for &(a, b) in &self.edges {
            let d = point_segment_dist(p, self.pts[a], self.pts[b]);
            if d <= max_dist && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, (a, b)));
            }
        }
        let Some((_, (a, b))) = best else {
            return self.nearest_node(p).filter(|&v| self.pts[v].dist(p) <= max_dist);
        };
        let (pa, pb) = (self.pts[a], self.pts[b]);
        let ab = pb - pa;
        let t = ((p - pa).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
        let q = pa.lerp(pb, t);
        if q.dist(pa) <= merge && q.dist(pa) <= q.dist(pb) {
            return Some(a);
        }
        if q.dist(pb) <= merge {
            return Some(b);
        }
        let n = self.add(q);
        self.edges.remove(&(a, b));
        self.link(a, n);
        self.link(n, b);
        Some(n)
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|&(a, b)| self.pts[a].dist(self.pts[b])).sum()
    }
}
