//! The navigation graph: intersection, place and portal nodes joined by
//! directed edges that carry an 8-way world-frame direction and a length.
//!
//! A [`NavGraph`] is immutable once built. Nodes are kept sorted by id, so a
//! node index order is the id order; every "smallest id" tie-break in the
//! crate reduces to "smallest index". Edges are sorted by `(from, to)` and
//! stored in CSR form for fast outgoing/incoming iteration.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_8;
use core::fmt;

use crate::direction::DirectionCategory;
use crate::error::{Error, Result};
use crate::math::{self, Point2, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Intersection,
    Place,
    Portal,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Intersection => "intersection",
            NodeKind::Place => "place",
            NodeKind::Portal => "portal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "intersection" => Some(NodeKind::Intersection),
            "place" => Some(NodeKind::Place),
            "portal" => Some(NodeKind::Portal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortalKind {
    Door,
    Lift,
    Stairs,
    Escalator,
    Entrance,
}

impl PortalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PortalKind::Door => "door",
            PortalKind::Lift => "lift",
            PortalKind::Stairs => "stairs",
            PortalKind::Escalator => "escalator",
            PortalKind::Entrance => "entrance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "door" => Some(PortalKind::Door),
            "lift" | "elevator" => Some(PortalKind::Lift),
            "stairs" => Some(PortalKind::Stairs),
            "escalator" => Some(PortalKind::Escalator),
            "entrance" => Some(PortalKind::Entrance),
            _ => None,
        }
    }

    /// Portals that connect floors of one building.
    pub fn is_vertical(self) -> bool {
        matches!(self, PortalKind::Lift | PortalKind::Stairs | PortalKind::Escalator)
    }
}

impl fmt::Display for PortalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_label(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavNode {
    pub id: String,
    pub kind: NodeKind,
    pub position: Point3,
    pub floor: i32,
    pub building: Option<String>,
    pub label: Option<String>,
    pub portal_kind: Option<PortalKind>,
}

impl NavNode {
    pub fn intersection(id: impl Into<String>, position: Point3, floor: i32) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Intersection,
            position,
            floor,
            building: None,
            label: None,
            portal_kind: None,
        }
    }

    pub fn place(id: impl Into<String>, position: Point3, floor: i32, label: &str) -> Self {
        Self {
            label: Some(label.to_owned()),
            kind: NodeKind::Place,
            ..Self::intersection(id, position, floor)
        }
    }

    pub fn portal(id: impl Into<String>, position: Point3, floor: i32, kind: PortalKind) -> Self {
        Self {
            portal_kind: Some(kind),
            kind: NodeKind::Portal,
            ..Self::intersection(id, position, floor)
        }
    }

    pub fn with_building(mut self, building: impl Into<String>) -> Self {
        self.building = Some(building.into());
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_owned());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavEdge {
    pub from: usize,
    pub to: usize,
    pub direction: DirectionCategory,
    pub length: f64,
}

/// Edge as supplied to [`NavGraph::new`]: endpoints by id; direction and
/// length are derived from node geometry when omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub direction: Option<DirectionCategory>,
    pub length: Option<f64>,
}

impl EdgeSpec {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            direction: None,
            length: None,
        }
    }

    pub fn with_direction(mut self, d: DirectionCategory) -> Self {
        self.direction = Some(d);
        self
    }

    pub fn with_length(mut self, len: f64) -> Self {
        self.length = Some(len);
        self
    }
}

pub const DEFAULT_FLOOR_HEIGHT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMeta {
    pub name: String,
    /// (lon, lat) of the local metric frame origin, when geo-referenced.
    pub crs_origin: Option<(f64, f64)>,
    pub floor_height: f64,
    pub sources: Vec<String>,
    /// Simplified exterior outline of a single floor, in meters.
    pub exterior: Option<Vec<Point2>>,
}

impl Default for GraphMeta {
    fn default() -> Self {
        Self {
            name: String::new(),
            crs_origin: None,
            floor_height: DEFAULT_FLOOR_HEIGHT,
            sources: Vec::new(),
            exterior: None,
        }
    }
}

impl GraphMeta {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }
}

/// Direction and length implied by the geometry of two nodes.
///
/// The direction is that of the horizontal projection, or category 0 when the
/// projection is degenerate. The length is the 3D distance, or 1.0 for
/// coincident endpoints (pure topological input).
pub fn edge_geometry(a: &NavNode, b: &NavNode) -> (DirectionCategory, f64) {
    let dx = b.position.x - a.position.x;
    let dy = b.position.y - a.position.y;
    let dir = if math::hypot(dx, dy) > 1e-9 {
        DirectionCategory::discretize(math::atan2(dy, dx)).unwrap_or_default()
    } else {
        DirectionCategory::default()
    };
    let len = a.position.dist(b.position);
    (dir, if len > 1e-12 { len } else { 1.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavGraph {
    meta: GraphMeta,
    nodes: Vec<NavNode>,
    edges: Vec<NavEdge>,
    out_start: Vec<usize>,
    in_start: Vec<usize>,
    in_edges: Vec<usize>,
    labeled: Vec<usize>,
}

impl NavGraph {
    pub fn empty(meta: GraphMeta) -> Self {
        Self::new(meta, Vec::new(), Vec::new()).expect("empty graph is valid")
    }

    /// Validates and indexes a graph.
    ///
    /// Labels are normalized, nodes are sorted by id and edges by endpoint
    /// indices. Fails on duplicate ids, dangling or self-loop edges, duplicate
    /// `(from, to)` pairs, non-positive lengths, directions inconsistent with
    /// same-floor geometry, and kind-specific attribute violations.
    pub fn new(meta: GraphMeta, mut nodes: Vec<NavNode>, edges: Vec<EdgeSpec>) -> Result<Self> {
        if !(meta.floor_height.is_finite() && meta.floor_height > 0.0) {
            return Err(Error::validation("meta", "floor_height must be positive"));
        }
        for node in nodes.iter_mut() {
            if node.id.is_empty() {
                return Err(Error::validation("node", "empty id"));
            }
            if !node.position.is_finite() {
                return Err(Error::validation(
                    format!("node `{}`", node.id),
                    "position must be finite",
                ));
            }
            node.label = match node.label.take() {
                Some(l) => {
                    let n = normalize_label(&l);
                    if n.is_empty() {
                        None
                    } else {
                        Some(n)
                    }
                }
                None => None,
            };
            match node.kind {
                NodeKind::Place if node.label.is_none() => {
                    return Err(Error::validation(
                        format!("node `{}`", node.id),
                        "place node requires a non-empty label",
                    ))
                }
                NodeKind::Portal if node.portal_kind.is_none() => {
                    return Err(Error::validation(
                        format!("node `{}`", node.id),
                        "portal node requires portal_kind",
                    ))
                }
                _ => {}
            }
        }
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateId(pair[0].id.clone()));
            }
        }

        let lookup = |id: &str| nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok();
        let mut resolved = Vec::with_capacity(edges.len());
        for spec in &edges {
            let ctx = || format!("edge `{}` -> `{}`", spec.from, spec.to);
            let from = lookup(&spec.from)
                .ok_or_else(|| Error::validation(ctx(), format!("unknown node `{}`", spec.from)))?;
            let to = lookup(&spec.to)
                .ok_or_else(|| Error::validation(ctx(), format!("unknown node `{}`", spec.to)))?;
            if from == to {
                return Err(Error::validation(ctx(), "self-loop"));
            }
            let (a, b) = (&nodes[from], &nodes[to]);
            let (geo_dir, geo_len) = edge_geometry(a, b);
            let length = spec.length.unwrap_or(geo_len);
            if !(length.is_finite() && length > 0.0) {
                return Err(Error::validation(ctx(), "length must be positive and finite"));
            }
            let direction = match spec.direction {
                None => geo_dir,
                Some(d) => {
                    let dx = b.position.x - a.position.x;
                    let dy = b.position.y - a.position.y;
                    if a.floor == b.floor && math::hypot(dx, dy) > 1e-9 {
                        let theta = math::atan2(dy, dx);
                        if math::angle_dist(theta, d.relative_heading()) > FRAC_PI_8 + 1e-9 {
                            return Err(Error::validation(
                                ctx(),
                                format!("direction {d} inconsistent with geometry (expected {geo_dir})"),
                            ));
                        }
                    }
                    d
                }
            };
            resolved.push(NavEdge {
                from,
                to,
                direction,
                length,
            });
        }
        resolved.sort_by_key(|e| (e.from, e.to));
        for pair in resolved.windows(2) {
            if (pair[0].from, pair[0].to) == (pair[1].from, pair[1].to) {
                return Err(Error::validation(
                    format!(
                        "edge `{}` -> `{}`",
                        nodes[pair[0].from].id, nodes[pair[0].to].id
                    ),
                    "duplicate edge",
                ));
            }
        }

        let n = nodes.len();
        let mut out_start = alloc::vec![0usize; n + 1];
        for e in &resolved {
            out_start[e.from + 1] += 1;
        }
        for i in 0..n {
            out_start[i + 1] += out_start[i];
        }
        let mut in_start = alloc::vec![0usize; n + 1];
        for e in &resolved {
            in_start[e.to + 1] += 1;
        }
        for i in 0..n {
            in_start[i + 1] += in_start[i];
        }
        let mut fill = in_start.clone();
        let mut in_edges = alloc::vec![0usize; resolved.len()];
        for (ei, e) in resolved.iter().enumerate() {
            in_edges[fill[e.to]] = ei;
            fill[e.to] += 1;
        }
        let labeled = (0..n).filter(|&i| nodes[i].label.is_some()).collect();

        Ok(Self {
            meta,
            nodes,
            edges: resolved,
            out_start,
            in_start,
            in_edges,
            labeled,
        })
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    pub fn nodes(&self) -> &[NavNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[NavEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, idx: usize) -> &NavNode {
        &self.nodes[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::NotFound(format!("node `{id}`")))
    }

    pub fn out_edges(&self, v: usize) -> &[NavEdge] {
        &self.edges[self.out_start[v]..self.out_start[v + 1]]
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = &NavEdge> + '_ {
        self.in_edges[self.in_start[v]..self.in_start[v + 1]]
            .iter()
            .map(move |&ei| &self.edges[ei])
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_start[v + 1] - self.out_start[v]
    }

    pub fn find_edge(&self, from: usize, to: usize) -> Option<&NavEdge> {
        let out = self.out_edges(from);
        out.binary_search_by(|e| e.to.cmp(&to)).ok().map(|i| &out[i])
    }

    /// Indices of nodes that carry a label, in index order.
    pub fn labeled_nodes(&self) -> &[usize] {
        &self.labeled
    }

    pub fn intersection_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].kind == NodeKind::Intersection)
    }

    /// World-frame unit vector of the edge `from -> to`: the normalized
    /// horizontal displacement, or the edge's category vector when the
    /// endpoints coincide horizontally.
    pub fn edge_unit_vector(&self, edge: &NavEdge) -> Point2 {
        let a = self.nodes[edge.from].position;
        let b = self.nodes[edge.to].position;
        let d = Point2::new(b.x - a.x, b.y - a.y);
        let n = d.norm();
        if n > 1e-9 {
            d.scale(1.0 / n)
        } else {
            edge.direction.unit_vector()
        }
    }

    /// Edge specs reproducing this graph's edges, for rebuilding.
    pub fn edge_specs(&self) -> Vec<EdgeSpec> {
        self.edges
            .iter()
            .map(|e| EdgeSpec {
                from: self.nodes[e.from].id.clone(),
                to: self.nodes[e.to].id.clone(),
                direction: Some(e.direction),
                length: Some(e.length),
            })
            .collect()
    }

    pub fn into_parts(self) -> (GraphMeta, Vec<NavNode>, Vec<NavEdge>) {
        (self.meta, self.nodes, self.edges)
    }

    pub fn with_meta(mut self, meta: GraphMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn weak_components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut comp = alloc::vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let cid = out.len();
            let mut members = Vec::new();
            comp[s] = cid;
            stack.push(s);
            while let Some(v) = stack.pop() {
                members.push(v);
                let nbrs = self
                    .out_edges(v)
                    .iter()
                    .map(|e| e.to)
                    .chain(self.in_edges(v).map(|e| e.from));
                for w in nbrs.collect::<Vec<_>>() {
                    if comp[w] == usize::MAX {
                        comp[w] = cid;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Incremental graph assembly used by the extraction and stitching code.
/// Edges are added as undirected pairs with geometry-derived attributes.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    pub nodes: Vec<NavNode>,
    pub edges: Vec<EdgeSpec>,
    pairs: BTreeSet<(usize, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_node(&mut self, node: NavNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Adds both directions between builder nodes `a` and `b`, deriving
    /// direction and length from positions. Pairs already present and
    /// self-loops are ignored.
    pub fn connect(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        if !self.pairs.insert((a.min(b), a.max(b))) {
            return;
        }
        let (ia, ib) = (self.nodes[a].id.clone(), self.nodes[b].id.clone());
        let (d_ab, len) = edge_geometry(&self.nodes[a], &self.nodes[b]);
        let (d_ba, _) = edge_geometry(&self.nodes[b], &self.nodes[a]);
        self.edges.push(EdgeSpec {
            from: ia.clone(),
            to: ib.clone(),
            direction: Some(d_ab),
            length: Some(len),
        });
        self.edges.push(EdgeSpec {
            from: ib,
            to: ia,
            direction: Some(d_ba),
            length: Some(len),
        });
    }

    pub fn build(self, meta: GraphMeta) -> Result<NavGraph> {
        NavGraph::new(meta, self.nodes, self.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn p(x: f64, y: f64) -> Point3 {
        Point3::new(x, y, 0.0)
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_label("  Lvl 2   RADIOLOGY \t"), "lvl 2 radiology");
        assert_eq!(normalize_label("   "), "");
    }

    #[test]
    fn builds_and_indexes() {
        let nodes = vec![
            NavNode::intersection("b", p(1.0, 0.0), 0),
            NavNode::intersection("a", p(0.0, 0.0), 0),
            NavNode::place("c", p(1.0, 1.0), 0, " Pharmacy "),
        ];
        let edges = vec![
            EdgeSpec::new("a", "b"),
            EdgeSpec::new("b", "a"),
            EdgeSpec::new("b", "c"),
        ];
        let g = NavGraph::new(GraphMeta::named("t"), nodes, edges).unwrap();
        assert_eq!(g.node(0).id, "a");
        assert_eq!(g.node(2).label.as_deref(), Some("pharmacy"));
        let ab = g.find_edge(0, 1).unwrap();
        assert_eq!(ab.direction.index(), 0);
        assert_eq!(g.find_edge(1, 0).unwrap().direction.index(), 4);
        assert_eq!(g.find_edge(1, 2).unwrap().direction.index(), 2);
        assert_eq!(g.out_degree(1), 2);
        assert_eq!(g.in_edges(0).count(), 1);
        assert_eq!(g.labeled_nodes(), &[2]);
    }

    #[test]
    fn rejects_dangling_edge_with_context() {
        let nodes = vec![NavNode::intersection("a", p(0.0, 0.0), 0)];
        let err = NavGraph::new(GraphMeta::default(), nodes, vec![EdgeSpec::new("a", "zz")])
            .unwrap_err();
        match err {
            Error::Validation { context, message } => {
                assert!(context.contains("zz"));
                assert!(message.contains("unknown node"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_structural_violations() {
        let two = || {
            vec![
                NavNode::intersection("a", p(0.0, 0.0), 0),
                NavNode::intersection("b", p(1.0, 0.0), 0),
            ]
        };
        let dup = vec![
            NavNode::intersection("a", p(0.0, 0.0), 0),
            NavNode::intersection("a", p(1.0, 0.0), 0),
        ];
        assert!(matches!(
            NavGraph::new(GraphMeta::default(), dup, vec![]),
            Err(Error::DuplicateId(_))
        ));
        assert!(NavGraph::new(GraphMeta::default(), two(), vec![EdgeSpec::new("a", "a")]).is_err());
        assert!(NavGraph::new(
            GraphMeta::default(),
            two(),
            vec![EdgeSpec::new("a", "b"), EdgeSpec::new("a", "b")]
        )
        .is_err());
        assert!(NavGraph::new(
            GraphMeta::default(),
            two(),
            vec![EdgeSpec::new("a", "b").with_length(0.0)]
        )
        .is_err());
        // Edge points east; category 2 (north) is inconsistent.
        assert!(NavGraph::new(
            GraphMeta::default(),
            two(),
            vec![EdgeSpec::new("a", "b").with_direction(DirectionCategory::LEFT)]
        )
        .is_err());
        let unlabeled_place = vec![NavNode {
            label: Some("  ".into()),
            ..NavNode::place("x", p(0.0, 0.0), 0, "y")
        }];
        assert!(NavGraph::new(GraphMeta::default(), unlabeled_place, vec![]).is_err());
        let bad_portal = vec![NavNode {
            kind: NodeKind::Portal,
            ..NavNode::intersection("x", p(0.0, 0.0), 0)
        }];
        assert!(NavGraph::new(GraphMeta::default(), bad_portal, vec![]).is_err());
    }

    #[test]
    fn topological_input_defaults() {
        // Coincident positions: direction must be given, length defaults to 1.
        let nodes = vec![
            NavNode::intersection("a", Point3::default(), 0),
            NavNode::intersection("b", Point3::default(), 0),
        ];
        let g = NavGraph::new(
            GraphMeta::default(),
            nodes,
            vec![EdgeSpec::new("a", "b").with_direction(DirectionCategory::LEFT)],
        )
        .unwrap();
        let e = g.edges()[0];
        assert_eq!(e.length, 1.0);
        let u = g.edge_unit_vector(&e);
        assert!((u.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_components_split() {
        let mut b = GraphBuilder::new();
        let a0 = b.push_node(NavNode::intersection("a0", p(0.0, 0.0), 0));
        let a1 = b.push_node(NavNode::intersection("a1", p(1.0, 0.0), 0));
        b.push_node(NavNode::intersection("c0", p(5.0, 0.0), 0));
        b.connect(a0, a1);
        let g = b.build(GraphMeta::default()).unwrap();
        let comps = g.weak_components();
        assert_eq!(comps, vec![vec![0, 1], vec![2]]);
    }
}
