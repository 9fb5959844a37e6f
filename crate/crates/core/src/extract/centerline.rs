//! Chordal-axis centerlines of traversable regions.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use spade::{ConstrainedDelaunayTriangulation, Point2 as SPoint, Triangulation};

use super::chains::{Chains, PlanarGraph, Sketch};
use crate::error::{Error, Result};
use crate::geometry::Polygon2D;
use crate::math::{self, point_segment_dist, Point2};

/// Inserts vertices so no boundary segment is longer than `step`.
pub(crate) fn densify(ring: &[Point2], step: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let k = math::ceil(a.dist(b) / step).max(1.0) as usize;
        for j in 0..k {
            out.push(a.lerp(b, j as f64 / k as f64));
        }
    }
    out
}

/// Distance from `p` to the nearest boundary segment of `poly`.
pub(crate) fn clearance(poly: &Polygon2D, p: Point2) -> f64 {
    let mut best = f64::INFINITY;
    for r in core::iter::once(poly.ring()).chain(poly.holes().iter().map(|h| h.as_slice())) {
        for i in 0..r.len() {
            best = best.min(point_segment_dist(p, r[i], r[(i + 1) % r.len()]));
        }
    }
    best
}

/// Chordal-axis transform of `poly` (meters): midpoints of internal edges
/// of a constrained Delaunay triangulation, joined through sleeve triangles
/// directly and through junction triangles via their centroid.
///
/// Leaf branches ending at a junction are pruned when shorter than
/// `spur_len + 2 · clearance(junction)`, which removes the fans towards
/// convex corners; a lone leftover segment goes by the same rule, so
/// compact blobs vanish. Returns an empty graph when nothing survives.
pub(crate) fn chordal_axis(poly: &Polygon2D, densify_step: f64, spur_len: f64, dp_tol: f64) -> Result<PlanarGraph> {
    let mut cdt = ConstrainedDelaunayTriangulation::<SPoint<f64>>::new();
    let rings = core::iter::once(poly.ring()).chain(poly.holes().iter().map(|h| h.as_slice()));
    for ring in rings {
        let pts = densify(ring, densify_step);
        let mut handles = Vec::with_capacity(pts.len());
        for p in &pts {
            let h = cdt
                .insert(SPoint::new(p.x, p.y))
                .map_err(|e| Error::InvalidArgument(alloc::format!("triangulation: {e:?}")))?;
            handles.push(h);
        }
        for i in 0..handles.len() {
            let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
            if a != b {
                cdt.try_add_constraint(a, b);
            }
        }
    }

    let kept: BTreeSet<usize> = cdt
        .inner_faces()
        .filter(|f| {
            let c = f.center();
            poly.contains(Point2::new(c.x, c.y))
        })
        .map(|f| f.fix().index())
        .collect();

    let mut sk = Sketch::default();
    let mut midpoint: BTreeMap<usize, usize> = BTreeMap::new();
    let mut mid = |sk: &mut Sketch, key: usize, p: Point2| *midpoint.entry(key).or_insert_with(|| sk.add(p));
    for face in cdt.inner_faces() {
        if !kept.contains(&face.fix().index()) {
            continue;
        }
        let mut internal = Vec::new();
        for e in face.adjacent_edges() {
            let across = e.rev().face().as_inner().map(|f| f.fix().index());
            if !e.is_constraint_edge() && across.is_some_and(|f| kept.contains(&f)) {
                let [p, q] = e.positions();
                let m = Point2::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
                internal.push(mid(&mut sk, e.as_undirected().fix().index(), m));
            }
        }
        match internal.len() {
            2 => sk.link(internal[0], internal[1]),
            3 => {
                let c = face.center();
                let hub = sk.add(Point2::new(c.x, c.y));
                for &m in &internal {
                    sk.link(hub, m);
                }
            }
            _ => {}
        }
    }

    let mut chains = Chains::from_sketch(&sk);
    chains.prune(&|j| spur_len + 2.0 * clearance(poly, j), true, true);
    if chains.live().next().is_none() {
        return Ok(PlanarGraph::default());
    }
    Ok(chains.to_planar(dp_tol))
}
