//! Planar polygons, similarity transforms, polyline simplification and the
//! local lon/lat projection.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, Point2};

/// Mean Earth radius used by [`project_lonlat`].
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Rows used when rasterizing polygons for IoU.
pub const DEFAULT_IOU_RES: usize = 256;

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o = |p: Point2, q: Point2, r: Point2| (q - p).cross(r - p);
    let d1 = o(c, d, a);
    let d2 = o(c, d, b);
    let d3 = o(a, b, c);
    let d4 = o(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// True when no two non-adjacent edges of the ring touch.
pub fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn clean_ring(mut ring: Vec<Point2>) -> Vec<Point2> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring.dedup();
    ring
}

/// A simple polygon with optional holes, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2D {
    ring: Vec<Point2>,
    holes: Vec<Vec<Point2>>,
}

impl Polygon2D {
    /// Validates a ring; a repeated closing vertex is dropped.
    pub fn new(ring: Vec<Point2>) -> Result<Self> {
        Self::with_holes(ring, Vec::new())
    }

    pub fn with_holes(ring: Vec<Point2>, holes: Vec<Vec<Point2>>) -> Result<Self> {
        let ring = clean_ring(ring);
        let holes: Vec<Vec<Point2>> = holes.into_iter().map(clean_ring).collect();
        for r in core::iter::once(&ring).chain(holes.iter()) {
            if r.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
                return Err(Error::validation("polygon", "non-finite vertex"));
            }
            if r.len() < 3 {
                return Err(Error::validation("polygon", "ring needs at least 3 distinct vertices"));
            }
            if !ring_is_simple(r) {
                return Err(Error::validation("polygon", "ring is self-intersecting"));
            }
        }
        let p = Self { ring, holes };
        if !(p.area() > 0.0) {
            return Err(Error::validation("polygon", "zero area"));
        }
        Ok(p)
    }

    /// Axis-aligned rectangle from two corners.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    pub fn ring(&self) -> &[Point2] {
        &self.ring
    }

    pub fn holes(&self) -> &[Vec<Point2>] {
        &self.holes
    }

    fn rings(&self) -> impl Iterator<Item = &[Point2]> {
        core::iter::once(self.ring.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.ring).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    /// Area centroid of the polygon with holes removed.
    pub fn centroid(&self) -> Point2 {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut total = 0.0;
        for (k, r) in self.rings().enumerate() {
            let a = signed_area(r);
            let sign = if (k == 0) == (a >= 0.0) { 1.0 } else { -1.0 };
            let n = r.len();
            let (mut sx, mut sy) = (0.0, 0.0);
            for i in 0..n {
                let p = r[i];
                let q = r[(i + 1) % n];
                let c = p.x * q.y - q.x * p.y;
                sx += (p.x + q.x) * c;
                sy += (p.y + q.y) * c;
            }
            // sx / (6a) is the ring centroid times a; flip so holes subtract.
            cx += sign * sx / 6.0;
            cy += sign * sy / 6.0;
            total += sign * a;
        }
        Point2::new(cx / total, cy / total)
    }

    /// `(min, max)` corners.
    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = self.ring[0];
        let mut hi = self.ring[0];
        for p in &self.ring {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Even-odd containment over the ring and holes.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for r in self.rings() {
            let n = r.len();
            for i in 0..n {
                let a = r[i];
                let b = r[(i + 1) % n];
                if (a.y > p.y) != (b.y > p.y) {
                    let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                    if p.x < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    /// Sorted x coordinates where the horizontal line at `y` crosses the
    /// boundary; consecutive pairs bound interior spans.
    fn crossings(&self, y: f64, out: &mut Vec<f64>) {
        out.clear();
        for r in self.rings() {
            let n = r.len();
            for i in 0..n {
                let a = r[i];
                let b = r[(i + 1) % n];
                if (a.y > y) != (b.y > y) {
                    out.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
                }
            }
        }
        out.sort_by(f64::total_cmp);
    }

    pub fn transformed(&self, m: &SimilarityTransform2D) -> Self {
        let map = |r: &Vec<Point2>| r.iter().map(|p| m.apply(*p)).collect();
        Self {
            ring: map(&self.ring),
            holes: self.holes.iter().map(map).collect(),
        }
    }
}

/// Length of the overlap of two sorted span lists.
fn span_overlap(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i + 1 < a.len() && j + 1 < b.len() {
        let lo = a[i].max(b[j]);
        let hi = a[i + 1].min(b[j + 1]);
        if hi > lo {
            total += hi - lo;
        }
        if a[i + 1] < b[j + 1] {
            i += 2;
        } else {
            j += 2;
        }
    }
    total
}

/// Intersection area estimated on `rows` horizontal scanlines across the
/// overlap of the two bounding boxes. Each scanline's interior spans are
/// exact, so the estimate varies continuously with the vertices.
pub fn intersection_area(a: &Polygon2D, b: &Polygon2D, rows: usize) -> f64 {
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    let y0 = alo.y.max(blo.y);
    let y1 = ahi.y.min(bhi.y);
    if !(y1 > y0) || ahi.x.min(bhi.x) <= alo.x.max(blo.x) || rows == 0 {
        return 0.0;
    }
    let h = (y1 - y0) / rows as f64;
    let mut xa = Vec::new();
    let mut xb = Vec::new();
    let mut total = 0.0;
    for r in 0..rows {
        let y = y0 + (r as f64 + 0.5) * h;
        a.crossings(y, &mut xa);
        b.crossings(y, &mut xb);
        total += span_overlap(&xa, &xb);
    }
    total * h
}

/// Intersection over union; the intersection is rasterized on `rows`
/// scanlines, the union is `area(a) + area(b) - intersection`.
pub fn polygon_iou_with(a: &Polygon2D, b: &Polygon2D, rows: usize) -> f64 {
    let inter = intersection_area(a, b, rows);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn polygon_iou(a: &Polygon2D, b: &Polygon2D) -> f64 {
    polygon_iou_with(a, b, DEFAULT_IOU_RES)
}

/// `p ↦ s·R(θ)·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform2D {
    pub rotation: f64,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for SimilarityTransform2D {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl SimilarityTransform2D {
    pub const IDENTITY: Self = Self {
        rotation: 0.0,
        scale: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn new(rotation: f64, scale: f64, tx: f64, ty: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("scale must be positive, got {scale}")));
        }
        if !(rotation.is_finite() && tx.is_finite() && ty.is_finite()) {
            return Err(Error::InvalidArgument("transform parameters must be finite".into()));
        }
        Ok(Self {
            rotation: math::wrap_angle(rotation),
            scale,
            tx,
            ty,
        })
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = math::sin_cos(self.rotation);
        Point2::new(
            self.scale * (c * p.x - s * p.y) + self.tx,
            self.scale * (s * p.x + c * p.y) + self.ty,
        )
    }

    pub fn inverse(&self) -> Self {
        let inv_s = 1.0 / self.scale;
        let (s, c) = math::sin_cos(-self.rotation);
        Self {
            rotation: math::wrap_angle(-self.rotation),
            scale: inv_s,
            tx: -inv_s * (c * self.tx - s * self.ty),
            ty: -inv_s * (s * self.tx + c * self.ty),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let t = self.apply(Point2::new(other.tx, other.ty));
        Self {
            rotation: math::wrap_angle(self.rotation + other.rotation),
            scale: self.scale * other.scale,
            tx: t.x,
            ty: t.y,
        }
    }
}

/// Local equirectangular projection around `origin`, both as `(lon, lat)`
/// degrees.
pub fn project_lonlat(origin: (f64, f64), point: (f64, f64)) -> Result<Point2> {
    for (lon, lat) in [origin, point] {
        if !(lat.abs() < 85.0 && lon.abs() <= 180.0) {
            return Err(Error::InvalidArgument(alloc::format!("coordinate out of range: ({lon}, {lat})")));
        }
    }
    let k = EARTH_RADIUS_M * core::f64::consts::PI / 180.0;
    let cos_lat0 = math::cos(origin.1.to_radians());
    Ok(Point2::new((point.0 - origin.0) * cos_lat0 * k, (point.1 - origin.1) * k))
}

/// Inverse of [`project_lonlat`]: local meters back to `(lon, lat)`.
pub fn unproject_lonlat(origin: (f64, f64), p: Point2) -> (f64, f64) {
    let k = EARTH_RADIUS_M * core::f64::consts::PI / 180.0;
    let cos_lat0 = math::cos(origin.1.to_radians());
    (origin.0 + p.x / (cos_lat0 * k), origin.1 + p.y / k)
}

/// Douglas–Peucker on an open polyline; returns the indices kept, always
/// including both endpoints.
pub fn simplify_polyline(points: &[Point2], tol: f64) -> Vec<usize> {
    let n = points.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let mut best = (0.0, a);
        for i in a + 1..b {
            let d = math::point_segment_dist(points[i], points[a], points[b]);
            if d > best.0 {
                best = (d, i);
            }
        }
        if best.0 > tol {
            keep[best.1] = true;
            stack.push((a, best.1));
            stack.push((best.1, b));
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// Douglas–Peucker on a closed ring. The two mutually farthest-apart anchor
/// vertices are always kept.
pub fn simplify_ring(ring: &[Point2], tol: f64) -> Vec<Point2> {
    let n = ring.len();
    if n <= 3 {
        return ring.to_vec();
    }
    let far = |from: usize| {
        (0..n)
            .max_by(|&i, &j| ring[from].dist(ring[i]).total_cmp(&ring[from].dist(ring[j])))
            .unwrap_or(0)
    };
    let a = far(0);
    let b = far(a);
    let (a, b) = (a.min(b), a.max(b));
    if a == b {
        return ring.to_vec();
    }
    let first: Vec<Point2> = ring[a..=b].to_vec();
    let mut second: Vec<Point2> = ring[b..].to_vec();
    second.extend_from_slice(&ring[..=a]);
    let mut out: Vec<Point2> = simplify_polyline(&first, tol).into_iter().map(|i| first[i]).collect();
    out.pop();
    let s2: Vec<Point2> = simplify_polyline(&second, tol).into_iter().map(|i| second[i]).collect();
    out.extend_from_slice(&s2[..s2.len() - 1]);
    out
}
