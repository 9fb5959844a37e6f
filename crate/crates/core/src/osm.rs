//! Pedestrian ways from an OpenStreetMap extract as an outdoor graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{project_lonlat, simplify_polyline, Polygon2D};
use crate::graph::{GraphBuilder, GraphMeta, NavGraph, NavNode};
use crate::math::{Point2, Point3};

/// `highway` values a pedestrian may use.
pub const WALKABLE_HIGHWAYS: &[&str] = &[
    "footway",
    "path",
    "pedestrian",
    "steps",
    "residential",
    "service",
    "cycleway",
    "unclassified",
    "living_street",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OsmWay {
    pub id: String,
    pub nodes: Vec<i64>,
    pub tags: BTreeMap<String, String>,
}

impl OsmWay {
    pub fn is_walkable(&self) -> bool {
        self.tags.get("highway").is_some_and(|h| WALKABLE_HIGHWAYS.contains(&h.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OsmExtract {
    /// OSM node id to `(lon, lat)`.
    pub nodes: BTreeMap<i64, (f64, f64)>,
    pub ways: Vec<OsmWay>,
    /// Building footprints in the local metric frame.
    pub footprints: BTreeMap<String, Polygon2D>,
}

impl OsmExtract {
    pub fn validate(&self) -> Result<()> {
        for w in &self.ways {
            if let Some(&n) = w.nodes.iter().find(|n| !self.nodes.contains_key(n)) {
                return Err(Error::UnresolvedNodeRef { way: w.id.clone(), node: n });
            }
        }
        Ok(())
    }
}

pub fn osm_node_id(id: i64) -> String {
    format!("osm/n{id}")
}

/// Builds the graph of walkable ways projected around `origin` `(lon, lat)`.
///
/// Chains of degree-2 nodes are collapsed to their ends plus the bends that
/// Douglas–Peucker keeps at `dp_tol` meters. A closed loop without any
/// branching keeps its lowest-id node and the node farthest from it, so it
/// stays a cycle.
pub fn osm_to_graph(extract: &OsmExtract, origin: (f64, f64), dp_tol: f64) -> Result<NavGraph> {
    let walkable: Vec<&OsmWay> = extract.ways.iter().filter(|w| w.is_walkable()).collect();
    let mut adj: BTreeMap<i64, BTreeSet<i64>> = BTreeMap::new();
    for w in &walkable {
        if let Some(&n) = w.nodes.iter().find(|n| !extract.nodes.contains_key(n)) {
            return Err(Error::UnresolvedNodeRef { way: w.id.clone(), node: n });
        }
        for &n in &w.nodes {
            adj.entry(n).or_default();
        }
        for pair in w.nodes.windows(2) {
            if pair[0] != pair[1] {
                adj.entry(pair[0]).or_default().insert(pair[1]);
                adj.entry(pair[1]).or_default().insert(pair[0]);
            }
        }
    }
    let mut pos = BTreeMap::new();
    for &n in adj.keys() {
        pos.insert(n, project_lonlat(origin, extract.nodes[&n])?);
    }

    let anchor = |n: i64| adj[&n].len() != 2;
    let mut keep: BTreeSet<i64> = adj.keys().copied().filter(|&n| anchor(n)).collect();
    let mut links: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut seen: BTreeSet<(i64, i64)> = BTreeSet::new();
    let norm = |a: i64, b: i64| (a.min(b), a.max(b));

    // Walk every chain once, starting from anchors; loops come second.
    let starts: Vec<i64> = keep.iter().copied().chain(adj.keys().copied()).collect();
    for s in starts {
        if !keep.contains(&s) {
            // Only pure loops reach here: every node of one has degree 2.
            if adj[&s].iter().all(|&m| seen.contains(&norm(s, m))) {
                continue;
            }
            keep.insert(s);
        }
        for &first in &adj[&s] {
            if seen.contains(&norm(s, first)) {
                continue;
            }
            let mut chain = Vec::from([s, first]);
            seen.insert(norm(s, first));
            let (mut prev, mut cur) = (s, first);
            while !keep.contains(&cur) {
                let next = *adj[&cur].iter().find(|&&m| m != prev).expect("degree-2 node");
                seen.insert(norm(cur, next));
                chain.push(next);
                prev = cur;
                cur = next;
            }
            let pts: Vec<Point2> = chain.iter().map(|n| pos[n]).collect();
            let mut kept = simplify_polyline(&pts, dp_tol);
            if chain.first() == chain.last() && kept.len() == 2 {
                // A loop needs one more vertex to stay a cycle.
                let far = (1..chain.len() - 1)
                    .max_by(|&a, &b| pts[0].dist(pts[a]).total_cmp(&pts[0].dist(pts[b])).then(b.cmp(&a)))
                    .expect("loop has interior nodes");
                kept.insert(1, far);
            }
            for w in kept.windows(2) {
                let (a, b) = (chain[w[0]], chain[w[1]]);
                keep.insert(a);
                keep.insert(b);
                if a != b {
                    links.insert(norm(a, b));
                }
            }
        }
    }

    let mut b = GraphBuilder::new();
    let mut idx = BTreeMap::new();
    for &n in &keep {
        let p = pos[&n];
        idx.insert(n, b.push_node(NavNode::intersection(osm_node_id(n), Point3::new(p.x, p.y, 0.0), 0)));
    }
    for (a, c) in links {
        b.connect(idx[&a], idx[&c]);
    }
    let meta = GraphMeta {
        crs_origin: Some(origin),
        sources: Vec::from([String::from("osm")]),
        ..GraphMeta::named("osm")
    };
    b.build(meta)
}
