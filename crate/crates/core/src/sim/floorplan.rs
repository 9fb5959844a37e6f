//! Synthetic floor plans with annotated ground-truth graphs, and the
//! node/edge F1 score used to grade extraction against them.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::extract::{AnnotationSidecar, FloorMask, SidecarLabel, SidecarPortal};
use crate::geometry::{polygon_iou, Polygon2D, SimilarityTransform2D};
use crate::graph::{normalize_label, NavGraph, NodeKind, PortalKind};
use crate::math::{self, Point2};
use crate::raster::{components, trace_boundary, Bitmap, Components, Connectivity};

/// Rasterizes a plan from carved rectangles. Everything starts as wall.
#[derive(Debug, Clone)]
pub struct PlanBuilder {
    free: Bitmap,
    scale: f64,
    floor: i32,
    sidecar: AnnotationSidecar,
}

impl PlanBuilder {
    pub fn new(width: usize, height: usize, scale: f64, floor: i32) -> Self {
        Self {
            free: Bitmap::new(width, height),
            scale,
            floor,
            sidecar: AnnotationSidecar::default(),
        }
    }

    /// Frees pixels `x0..x1 × y0..y1`.
    pub fn carve(mut self, x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        for y in y0..y1.min(self.free.height()) {
            for x in x0..x1.min(self.free.width()) {
                self.free.set(x, y, true);
            }
        }
        self
    }

    pub fn label(mut self, text: &str, x: usize, y: usize) -> Self {
        self.sidecar.labels.push(SidecarLabel {
            text: text.into(),
            px: (x as f64, y as f64),
        });
        self
    }

    pub fn portal(mut self, kind: PortalKind, x: usize, y: usize) -> Self {
        self.sidecar.portals.push(SidecarPortal {
            kind,
            px: (x as f64, y as f64),
        });
        self
    }

    pub fn build(self) -> Result<(FloorMask, AnnotationSidecar)> {
        Ok((FloorMask::new(self.free, self.scale, self.floor)?, self.sidecar))
    }
}

/// Expected node of a ground-truth graph, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthNode {
    pub kind: NodeKind,
    pub label: Option<String>,
    pub portal_kind: Option<PortalKind>,
    pub pos: Point2,
}

impl TruthNode {
    pub fn intersection(x: f64, y: f64) -> Self {
        Self {
            kind: NodeKind::Intersection,
            label: None,
            portal_kind: None,
            pos: Point2::new(x, y),
        }
    }

    pub fn place(label: &str, x: f64, y: f64) -> Self {
        Self {
            kind: NodeKind::Place,
            label: Some(normalize_label(label)),
            ..Self::intersection(x, y)
        }
    }

    pub fn portal(kind: PortalKind, x: f64, y: f64) -> Self {
        Self {
            kind: NodeKind::Portal,
            portal_kind: Some(kind),
            ..Self::intersection(x, y)
        }
    }
}

#[derive(Debug, Clone)]
pub struct FloorFixture {
    pub name: &'static str,
    pub mask: FloorMask,
    pub sidecar: AnnotationSidecar,
    pub truth_nodes: Vec<TruthNode>,
    /// Undirected edges between `truth_nodes` indices.
    pub truth_edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityScore {
    pub node_precision: f64,
    pub node_recall: f64,
    pub edge_precision: f64,
    pub edge_recall: f64,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl FidelityScore {
    pub fn node_f1(&self) -> f64 {
        f1(self.node_precision, self.node_recall)
    }

    pub fn edge_f1(&self) -> f64 {
        f1(self.edge_precision, self.edge_recall)
    }
}

/// Matches truth nodes to graph nodes greedily (truth order, nearest
/// unmatched candidate of the same kind, label and portal kind within
/// `tol` meters) and scores nodes and undirected edges.
pub fn score_extraction(g: &NavGraph, truth: &[TruthNode], truth_edges: &[(usize, usize)], tol: f64) -> FidelityScore {
    let mut taken = vec![false; g.node_count()];
    let mut matched: Vec<Option<usize>> = vec![None; truth.len()];
    for (t, tn) in truth.iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (v, n) in g.nodes().iter().enumerate() {
            if taken[v] || n.kind != tn.kind || n.label != tn.label || n.portal_kind != tn.portal_kind {
                continue;
            }
            let d = n.position.xy().dist(tn.pos);
            if d <= tol && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, v));
            }
        }
        if let Some((_, v)) = best {
            taken[v] = true;
            matched[t] = Some(v);
        }
    }
    let hits = matched.iter().filter(|m| m.is_some()).count() as f64;
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let graph_edges: BTreeSet<(usize, usize)> = g.edges().iter().map(|e| norm(e.from, e.to)).collect();
    let truth_set: BTreeSet<(usize, usize)> = truth_edges.iter().map(|&(a, b)| norm(a, b)).collect();
    let edge_hits = truth_set
        .iter()
        .filter(|&&(a, b)| match (matched[a], matched[b]) {
            (Some(u), Some(v)) => graph_edges.contains(&norm(u, v)),
            _ => false,
        })
        .count() as f64;
    let ratio = |num: f64, den: usize| if den == 0 { 1.0 } else { num / den as f64 };
    FidelityScore {
        node_precision: ratio(hits, g.node_count()),
        node_recall: ratio(hits, truth.len()),
        edge_precision: ratio(edge_hits, graph_edges.len()),
        edge_recall: ratio(edge_hits, truth_set.len()),
    }
}

/// Five hand-annotated floors at 0.1 m/px with 2 m corridors and 0.3 m
/// walls. Truth positions are where an annotator would put them: corridor
/// ends one half-width short of the end wall, a corridor node in front of
/// every door, places at room centres.
pub fn fidelity_fixtures() -> Result<Vec<FloorFixture>> {
    use PortalKind::*;
    let mut out = Vec::new();

    // Straight corridor, two rooms, a street entrance.
    let (mask, sidecar) = PlanBuilder::new(100, 60, 0.1, 0)
        .carve(3, 3, 97, 23)
        .carve(3, 26, 48, 57)
        .carve(51, 26, 97, 57)
        .label("Pharmacy", 25, 40)
        .label("Radiology", 75, 40)
        .portal(Door, 25, 24)
        .portal(Door, 75, 24)
        .portal(Entrance, 1, 13)
        .build()?;
    out.push(FloorFixture {
        name: "corridor_two_rooms",
        mask,
        sidecar,
        truth_nodes: vec![
            TruthNode::intersection(1.3, 4.7),
            TruthNode::intersection(2.55, 4.7),
            TruthNode::intersection(7.55, 4.7),
            TruthNode::intersection(8.7, 4.7),
            TruthNode::place("pharmacy", 2.55, 1.85),
            TruthNode::place("radiology", 7.4, 1.85),
            TruthNode::portal(Door, 2.55, 3.55),
            TruthNode::portal(Door, 7.55, 3.55),
            TruthNode::portal(Entrance, 0.15, 4.65),
        ],
        truth_edges: vec![(0, 1), (1, 2), (2, 3), (1, 6), (6, 4), (2, 7), (7, 5), (8, 0)],
    });

    // T-junction with a room on each side of the stem.
    let (mask, sidecar) = PlanBuilder::new(120, 100, 0.1, 1)
        .carve(3, 3, 117, 23)
        .carve(50, 23, 70, 97)
        .carve(3, 26, 47, 97)
        .carve(73, 26, 117, 97)
        .label("Cafe", 25, 60)
        .label("Library", 95, 60)
        .portal(Door, 48, 60)
        .portal(Door, 71, 60)
        .build()?;
    out.push(FloorFixture {
        name: "t_junction",
        mask,
        sidecar,
        truth_nodes: vec![
            TruthNode::intersection(1.3, 8.7),
            TruthNode::intersection(6.0, 8.7),
            TruthNode::intersection(10.7, 8.7),
            TruthNode::intersection(6.0, 3.95),
            TruthNode::intersection(6.0, 1.3),
            TruthNode::place("cafe", 2.5, 3.85),
            TruthNode::place("library", 9.5, 3.85),
            TruthNode::portal(Door, 4.85, 3.95),
            TruthNode::portal(Door, 7.15, 3.95),
        ],
        truth_edges: vec![(0, 1), (1, 2), (1, 3), (3, 4), (3, 7), (3, 8), (7, 5), (8, 6)],
    });

    // L-shaped corridor with a lift in the bend and an office off each arm.
    let (mask, sidecar) = PlanBuilder::new(120, 120, 0.1, 0)
        .carve(3, 3, 117, 23)
        .carve(97, 23, 117, 117)
        .carve(3, 26, 60, 70)
        .carve(40, 73, 94, 117)
        .label("Office 1", 30, 45)
        .label("Office 2", 70, 95)
        .portal(Door, 30, 24)
        .portal(Door, 95, 95)
        .portal(Lift, 110, 10)
        .build()?;
    out.push(FloorFixture {
        name: "l_corridor",
        mask,
        sidecar,
        truth_nodes: vec![
            TruthNode::intersection(1.3, 10.7),
            TruthNode::intersection(3.05, 10.7),
            TruthNode::intersection(10.7, 10.7),
            TruthNode::intersection(10.7, 2.45),
            TruthNode::intersection(10.7, 1.3),
            TruthNode::place("office 1", 3.15, 7.15),
            TruthNode::place("office 2", 6.7, 2.5),
            TruthNode::portal(Door, 3.05, 9.55),
            TruthNode::portal(Door, 9.55, 2.45),
            TruthNode::portal(Lift, 11.05, 10.95),
        ],
        truth_edges: vec![(0, 1), (1, 2), (2, 3), (3, 4), (1, 7), (7, 5), (3, 8), (8, 6), (9, 2)],
    });

    // A lobby with three doors: traversable, collapses to one centre node.
    let (mask, sidecar) = PlanBuilder::new(110, 90, 0.1, 2)
        .carve(3, 3, 107, 23)
        .carve(35, 26, 75, 66)
        .carve(3, 26, 32, 87)
        .carve(78, 26, 107, 87)
        .label("Lobby", 55, 46)
        .label("Shop", 17, 60)
        .label("Bank", 92, 60)
        .portal(Door, 55, 24)
        .portal(Door, 33, 46)
        .portal(Door, 76, 46)
        .build()?;
    out.push(FloorFixture {
        name: "lobby",
        mask,
        sidecar,
        truth_nodes: vec![
            TruthNode::intersection(1.3, 7.7),
            TruthNode::intersection(5.55, 7.7),
            TruthNode::intersection(9.7, 7.7),
            TruthNode::intersection(5.5, 4.4),
            TruthNode::place("lobby", 5.55, 4.35),
            TruthNode::place("shop", 1.75, 3.35),
            TruthNode::place("bank", 9.25, 3.35),
            TruthNode::portal(Door, 5.55, 6.55),
            TruthNode::portal(Door, 3.35, 4.35),
            TruthNode::portal(Door, 7.65, 4.35),
        ],
        truth_edges: vec![(0, 1), (1, 2), (1, 7), (7, 3), (3, 4), (3, 8), (8, 5), (3, 9), (9, 6)],
    });

    // Plus-shaped crossing, three wards, stairs at the end of one arm.
    let (mask, sidecar) = PlanBuilder::new(130, 130, 0.1, 0)
        .carve(3, 55, 127, 75)
        .carve(55, 3, 75, 127)
        .carve(3, 3, 52, 52)
        .carve(3, 78, 52, 127)
        .carve(78, 78, 127, 127)
        .label("Ward A", 27, 27)
        .label("Ward B", 27, 102)
        .label("Storage", 102, 102)
        .portal(Door, 53, 27)
        .portal(Door, 53, 102)
        .portal(Door, 102, 76)
        .portal(Stairs, 120, 65)
        .build()?;
    out.push(FloorFixture {
        name: "crossing",
        mask,
        sidecar,
        truth_nodes: vec![
            TruthNode::intersection(6.5, 6.5),
            TruthNode::intersection(1.3, 6.5),
            TruthNode::intersection(11.7, 6.5),
            TruthNode::intersection(6.5, 11.7),
            TruthNode::intersection(6.5, 1.3),
            TruthNode::intersection(6.5, 10.25),
            TruthNode::intersection(6.5, 2.75),
            TruthNode::intersection(10.25, 6.5),
            TruthNode::place("ward a", 2.75, 10.25),
            TruthNode::place("ward b", 2.75, 2.75),
            TruthNode::place("storage", 10.25, 2.75),
            TruthNode::portal(Door, 5.35, 10.25),
            TruthNode::portal(Door, 5.35, 2.75),
            TruthNode::portal(Door, 10.25, 5.35),
            TruthNode::portal(Stairs, 12.05, 6.45),
        ],
        truth_edges: vec![
            (0, 1),
            (0, 7),
            (7, 2),
            (0, 5),
            (5, 3),
            (0, 6),
            (6, 4),
            (5, 11),
            (11, 8),
            (6, 12),
            (12, 9),
            (7, 13),
            (13, 10),
            (14, 2),
        ],
    });
    Ok(out)
}

/// Random rectilinear footprint: a hole-free, pinch-free blob of
/// `cell`-sized squares on a `grid × grid` lattice, grown from the centre
/// cell and traced to its outline. The result is centred on its centroid
/// and is never mapped onto itself by a quarter or half turn.
pub fn random_rectilinear_polygon(rng: &mut ChaCha8Rng, grid: usize, cell: f64) -> Polygon2D {
    assert!(grid >= 3, "grid too small for an asymmetric blob");
    loop {
        let target = rng.random_range(grid..=grid * grid / 2);
        let mut occ = Bitmap::new(grid, grid);
        occ.set(grid / 2, grid / 2, true);
        let mut count = 1;
        while count < target {
            let (x, y) = (rng.random_range(0..grid), rng.random_range(0..grid));
            if occ.get(x, y) {
                continue;
            }
            let touches = [(0i64, 1i64), (1, 0), (0, -1), (-1, 0)]
                .iter()
                .any(|&(dx, dy)| occ.get_i(x as i64 + dx, y as i64 + dy));
            if touches {
                occ.set(x, y, true);
                count += 1;
            }
        }
        let free = Bitmap::from_fn(grid, grid, |x, y| !occ.get(x, y));
        let outside = components(&free, Connectivity::Four);
        let has_hole = (0..outside.count).any(|l| !touches_border(&free, &outside, l));
        if has_hole || has_pinch(&occ) {
            continue;
        }
        let start = occ.ones().next().expect("seeded cell");
        let (sx, sy) = occ.coords(start);
        let ring: Vec<Point2> = trace_boundary(|x, y| occ.get_i(x, y), (sx as i64, sy as i64), Connectivity::Four)
            .into_iter()
            .map(|p| Point2::new(math::round(p.x) * cell, -math::round(p.y) * cell))
            .collect();
        let Ok(poly) = Polygon2D::new(ring) else { continue };
        let c = poly.centroid();
        let poly = poly.transformed(&SimilarityTransform2D::new(0.0, 1.0, -c.x, -c.y).expect("finite"));
        let symmetric = [0.5, 1.0, 1.5].iter().any(|&k| {
            let turned = poly.transformed(&SimilarityTransform2D::new(k * core::f64::consts::PI, 1.0, 0.0, 0.0).expect("finite"));
            polygon_iou(&poly, &turned) > 0.9
        });
        if !symmetric {
            return poly;
        }
    }
}

fn touches_border(occ: &Bitmap, comps: &Components, label: usize) -> bool {
    let (w, h) = (occ.width(), occ.height());
    (0..w).any(|x| comps.label(occ.index(x, 0)) == Some(label) || comps.label(occ.index(x, h - 1)) == Some(label))
        || (0..h).any(|y| comps.label(occ.index(0, y)) == Some(label) || comps.label(occ.index(w - 1, y)) == Some(label))
}

/// A 2×2 window holding exactly one diagonal pair.
fn has_pinch(occ: &Bitmap) -> bool {
    (0..occ.width() - 1).any(|x| {
        (0..occ.height() - 1).any(|y| {
            let (a, b, c, d) = (occ.get(x, y), occ.get(x + 1, y), occ.get(x, y + 1), occ.get(x + 1, y + 1));
            (a && d && !b && !c) || (b && c && !a && !d)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, GraphMeta, NavNode};
    use crate::math::Point3;
    use rand::SeedableRng;

    fn truth() -> (Vec<TruthNode>, Vec<(usize, usize)>) {
        let nodes = vec![
            TruthNode::intersection(0.0, 0.0),
            TruthNode::place("Room 1", 5.0, 0.0),
            TruthNode::portal(PortalKind::Door, 5.0, 5.0),
        ];
        (nodes, vec![(0, 1), (1, 2), (2, 0)])
    }

    fn graph(with_closing_edge: bool, extra_node: bool) -> NavGraph {
        let mut b = GraphBuilder::new();
        let a = b.push_node(NavNode::intersection("a", Point3::new(0.2, 0.0, 0.0), 0));
        let p = b.push_node(NavNode::place("b", Point3::new(5.0, 0.3, 0.0), 0, "room 1"));
        let d = b.push_node(NavNode::portal("c", Point3::new(5.0, 5.0, 0.0), 0, PortalKind::Door));
        b.connect(a, p);
        b.connect(p, d);
        if with_closing_edge {
            b.connect(d, a);
        }
        if extra_node {
            let x = b.push_node(NavNode::intersection("x", Point3::new(20.0, 0.0, 0.0), 0));
            b.connect(p, x);
        }
        b.build(GraphMeta::default()).unwrap()
    }

    #[test]
    fn matching_graph_scores_one() {
        let (t, e) = truth();
        let s = score_extraction(&graph(true, false), &t, &e, 1.0);
        assert_eq!(s.node_f1(), 1.0);
        assert_eq!(s.edge_f1(), 1.0);
    }

    #[test]
    fn missing_and_extra_parts_score_by_count() {
        let (t, e) = truth();
        let s = score_extraction(&graph(false, false), &t, &e, 1.0);
        assert_eq!(s.edge_recall, 2.0 / 3.0);
        assert_eq!(s.edge_precision, 1.0);
        let s = score_extraction(&graph(true, true), &t, &e, 1.0);
        assert_eq!(s.node_precision, 3.0 / 4.0);
        assert_eq!(s.node_recall, 1.0);
        assert_eq!(s.edge_precision, 3.0 / 4.0);
        // Outside the tolerance nothing matches.
        let s = score_extraction(&graph(true, false), &t, &e, 0.1);
        assert_eq!(s.node_recall, 1.0 / 3.0);
        assert_eq!(s.edge_recall, 0.0);
    }

    #[test]
    fn random_footprints_are_valid_and_asymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_rectilinear_polygon(&mut rng, 6, 5.0);
            assert!(p.ring().len() >= 6, "{:?}", p.ring());
            assert!(p.centroid().norm() < 1e-9);
            for w in 0..p.ring().len() {
                let (a, b) = (p.ring()[w], p.ring()[(w + 1) % p.ring().len()]);
                assert!(a.x == b.x || a.y == b.y, "not rectilinear");
            }
        }
    }
}
