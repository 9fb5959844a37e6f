//! Floor-plan rasters to per-floor navigation graphs.
//!
//! The corridor network comes from the skeleton of the largest-skeleton free
//! component. Every other free component is a region: rooms with few
//! connections become labeled Place nodes, well-connected ones (lobbies,
//! halls) contribute a chordal-axis centerline. Annotated portals tie the
//! pieces together.
//!
//! Pixel `(x, y)` of a mask covers `[x·s, (x+1)·s] × [(H−y−1)·s, (H−y)·s]`
//! in meters, so world `y` points up (north) while image rows go down.

mod centerline;
mod chains;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use chains::PlanarGraph;

use crate::error::{Error, Result};
use crate::geometry::{simplify_ring, Polygon2D};
use crate::graph::{normalize_label, GraphBuilder, GraphMeta, NavGraph, NavNode, PortalKind};
use crate::math::{self, Point2, Point3};
use crate::raster::{components, distance_transform, thin, trace_boundary, Bitmap, Components, Connectivity};

use chains::{Chains, Sketch};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    /// Regions with at least this many connections are traversable.
    pub conn_threshold: usize,
    /// Junctions closer than this (m) collapse into one.
    pub merge_radius: f64,
    /// Base spur length (m); see [`skeleton_to_graph`].
    pub spur_len: f64,
    /// Douglas–Peucker tolerance (m) for chains and outlines.
    pub dp_tol: f64,
    /// Portals connect to corridor edges within this distance (m).
    pub portal_snap: f64,
    /// Adjacency search radius around portals and regions, in pixels.
    pub door_gap: usize,
    /// Traversable regions smaller than this (m²) get no centerline.
    pub min_area: f64,
    /// Boundary sample spacing (m) for the centerline triangulation.
    pub densify: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            conn_threshold: 3,
            merge_radius: 0.5,
            spur_len: 1.0,
            dp_tol: 0.25,
            portal_snap: 3.0,
            door_gap: 3,
            min_area: 1.0,
            densify: 0.5,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("merge_radius", self.merge_radius),
            ("spur_len", self.spur_len),
            ("dp_tol", self.dp_tol),
            ("portal_snap", self.portal_snap),
            ("densify", self.densify),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.min_area.is_finite() && self.min_area >= 0.0) {
            return Err(Error::InvalidArgument("min_area must be non-negative".into()));
        }
        Ok(())
    }
}

/// Binarized floor plan; `free` is true on walkable pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorMask {
    pub free: Bitmap,
    /// Meters per pixel.
    pub scale: f64,
    pub floor: i32,
}

impl FloorMask {
    pub fn new(free: Bitmap, scale: f64, floor: i32) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { free, scale, floor })
    }

    pub fn width(&self) -> usize {
        self.free.width()
    }

    pub fn height(&self) -> usize {
        self.free.height()
    }

    /// Pixel-vertex coordinates to meters.
    pub fn to_world(&self, vx: f64, vy: f64) -> Point2 {
        Point2::new(vx * self.scale, (self.height() as f64 - vy) * self.scale)
    }

    /// Meters to pixel-vertex coordinates.
    pub fn to_pixel(&self, p: Point2) -> (f64, f64) {
        (p.x / self.scale, self.height() as f64 - p.y / self.scale)
    }

    pub fn pixel_center(&self, i: usize) -> Point2 {
        let (x, y) = self.free.coords(i);
        self.to_world(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// Pixel containing the world point, clamped to the raster.
    fn pixel_of(&self, p: Point2) -> (usize, usize) {
        let (x, y) = self.to_pixel(p);
        let cx = (math::floor(x).max(0.0) as usize).min(self.width().saturating_sub(1));
        let cy = (math::floor(y).max(0.0) as usize).min(self.height().saturating_sub(1));
        (cx, cy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidecarLabel {
    pub text: String,
    /// Pixel indices `(x, y)`; fractional values are allowed.
    pub px: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidecarPortal {
    pub kind: PortalKind,
    pub px: (f64, f64),
}

/// Declared annotations for one floor plan: room names, portals, and an
/// optional exterior outline in pixel-vertex coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSidecar {
    pub labels: Vec<SidecarLabel>,
    pub portals: Vec<SidecarPortal>,
    pub exterior_hint: Option<Vec<(f64, f64)>>,
}

impl AnnotationSidecar {
    pub fn validate(&self, mask: &FloorMask) -> Result<()> {
        let (w, h) = (mask.width() as f64, mask.height() as f64);
        let inside = |(x, y): (f64, f64)| x.is_finite() && y.is_finite() && x > -0.5 && y > -0.5 && x < w - 0.5 && y < h - 0.5;
        for (i, l) in self.labels.iter().enumerate() {
            if !inside(l.px) {
                return Err(Error::InvalidArgument(format!("label {i} ({}) lies outside the mask", l.text)));
            }
        }
        for (i, p) in self.portals.iter().enumerate() {
            if !inside(p.px) {
                return Err(Error::InvalidArgument(format!("portal {i} lies outside the mask")));
            }
        }
        if let Some(hint) = &self.exterior_hint {
            if hint.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0 && x <= w && y <= h)) {
                return Err(Error::InvalidArgument("exterior hint lies outside the mask".into()));
            }
        }
        Ok(())
    }
}

/// Pixel an annotation refers to: the one whose centre is nearest.
fn annotation_pixel(px: (f64, f64)) -> (usize, usize) {
    (math::round(px.0).max(0.0) as usize, math::round(px.1).max(0.0) as usize)
}

fn annotation_world(mask: &FloorMask, px: (f64, f64)) -> Point2 {
    mask.to_world(px.0 + 0.5, px.1 + 0.5)
}

/// A free-space component other than the corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPolygon {
    /// Outline in pixel-vertex coordinates, simplified.
    pub ring: Vec<Point2>,
    pub holes: Vec<Vec<Point2>>,
    /// Adjacent portals plus one if the corridor skeleton comes within
    /// `door_gap` pixels.
    pub connectivity_degree: usize,
    /// Index into the 4-connected free components.
    pub component: usize,
    /// Pixel indices, raster order.
    pub pixels: Vec<usize>,
    /// Sidecar portals adjacent to the region.
    pub portals: Vec<usize>,
    pub touches_corridor: bool,
}

impl RegionPolygon {
    pub fn to_world(&self, mask: &FloorMask) -> Result<Polygon2D> {
        let map = |r: &Vec<Point2>| r.iter().map(|p| mask.to_world(p.x, p.y)).collect::<Vec<_>>();
        Polygon2D::with_holes(map(&self.ring), self.holes.iter().map(map).collect())
    }

    pub fn area_px(&self) -> usize {
        self.pixels.len()
    }
}

pub fn classify_traversable(region: &RegionPolygon, cfg: &ExtractConfig) -> bool {
    region.connectivity_degree >= cfg.conn_threshold
}

pub fn thin_mask(mask: &FloorMask) -> Bitmap {
    thin(&mask.free)
}

/// Component labels found within `gap` pixels (Chebyshev) of `(x, y)`.
fn nearby_components(comps: &Components, w: usize, h: usize, x: usize, y: usize, gap: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for yy in y.saturating_sub(gap)..=(y + gap).min(h - 1) {
        for xx in x.saturating_sub(gap)..=(x + gap).min(w - 1) {
            if let Some(c) = comps.label(yy * w + xx) {
                out.insert(c);
            }
        }
    }
    out
}

/// Shared intermediate results of one mask.
struct Analysis {
    comps: Components,
    corridor: Option<usize>,
    corridor_skeleton: Bitmap,
    /// Distance to the nearest wall, in pixels.
    edt: Vec<f64>,
}

impl Analysis {
    fn new(mask: &FloorMask) -> Self {
        let comps = components(&mask.free, Connectivity::Four);
        let skel = thin(&mask.free);
        let mut counts = vec![0usize; comps.count];
        for i in skel.ones() {
            if let Some(c) = comps.label(i) {
                counts[c] += 1;
            }
        }
        // Most skeleton pixels wins; the lower label breaks ties.
        let corridor = (0..comps.count).filter(|&c| counts[c] > 0).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
        let corridor_skeleton = Bitmap::from_fn(mask.width(), mask.height(), |x, y| {
            let i = y * mask.width() + x;
            skel.get(x, y) && corridor.is_some() && comps.label(i) == corridor
        });
        Self {
            edt: distance_transform(&mask.free),
            comps,
            corridor,
            corridor_skeleton,
        }
    }
}

/// Converts a thinned skeleton into straight corridor edges (meters).
///
/// Pixels whose 8-neighbour count is not 2 are nodes; 8-adjacent node
/// pixels form one node at their centroid. Chains between nodes are traced,
/// junctions closer than `merge_radius` merged, and leaf branches pruned.
/// A branch counts as a spur when it is shorter than
/// `spur_len + 2 · clearance(junction)`: thinning leaves forks towards
/// the corners of every corridor end whose length grows with the corridor
/// width, so a fixed length alone cannot tell them from real side arms.
/// Finally chains are simplified with `dp_tol`, keeping bends as nodes.
fn skeleton_planar(mask: &FloorMask, skel: &Bitmap, edt: &[f64], cfg: &ExtractConfig) -> PlanarGraph {
    let (w, h) = (skel.width(), skel.height());
    let node_px = Bitmap::from_fn(w, h, |x, y| skel.get(x, y) && skel.neighbors8(x, y) != 2);
    let clusters = components(&node_px, Connectivity::Eight);
    let mut sk = Sketch::default();
    let mut vid = vec![usize::MAX; w * h];
    for members in clusters.members() {
        let mut c = Point2::default();
        for &i in &members {
            c = c + mask.pixel_center(i);
        }
        let v = sk.add(c.scale(1.0 / members.len() as f64));
        for &i in &members {
            vid[i] = v;
        }
    }
    for i in skel.ones() {
        if vid[i] == usize::MAX {
            vid[i] = sk.add(mask.pixel_center(i));
        }
    }
    for i in skel.ones() {
        let (x, y) = skel.coords(i);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if (dx, dy) != (0, 0) && skel.get_i(nx, ny) {
                    sk.link(vid[i], vid[ny as usize * w + nx as usize]);
                }
            }
        }
    }
    let mut chains = Chains::from_sketch(&sk);
    chains.dissolve_degree_two();
    chains.merge_junctions(cfg.merge_radius);
    let clearance = |p: Point2| {
        let (x, y) = mask.pixel_of(p);
        edt[y * w + x] * mask.scale
    };
    chains.prune(&|j| cfg.spur_len + 2.0 * clearance(j), true, false);
    chains.to_planar(cfg.dp_tol)
}

/// Intersection-only graph of a skeleton; see [`skeleton_planar`] for the
/// tracing rules. `mask` supplies geometry and wall clearance.
pub fn skeleton_to_graph(mask: &FloorMask, skeleton: &Bitmap, cfg: &ExtractConfig) -> Result<NavGraph> {
    cfg.validate()?;
    let edt = distance_transform(&mask.free);
    let planar = skeleton_planar(mask, skeleton, &edt, cfg);
    let mut b = GraphBuilder::new();
    for (i, p) in planar.pts.iter().enumerate() {
        b.push_node(NavNode::intersection(
            format!("f{}/i{:04}", mask.floor, i),
            Point3::new(p.x, p.y, 0.0),
            mask.floor,
        ));
    }
    for &(a, c) in &planar.edges {
        b.connect(a, c);
    }
    b.build(GraphMeta::named(format!("floor {}", mask.floor)))
}

fn trace_ring(inside: impl Fn(i64, i64) -> bool, first: (usize, usize), conn: Connectivity) -> Vec<Point2> {
    trace_boundary(inside, (first.0 as i64, first.1 as i64), conn)
}

/// Simplified outline, or the raw one when simplification breaks validity.
fn simplified_polygon(ring: Vec<Point2>, holes: Vec<Vec<Point2>>, tol_px: f64) -> Option<(Vec<Point2>, Vec<Vec<Point2>>)> {
    let s_ring = simplify_ring(&ring, tol_px);
    let s_holes: Vec<Vec<Point2>> = holes.iter().map(|h| simplify_ring(h, tol_px)).collect();
    if Polygon2D::with_holes(s_ring.clone(), s_holes.clone()).is_ok() {
        return Some((s_ring, s_holes));
    }
    Polygon2D::with_holes(ring.clone(), holes.clone()).ok().map(|_| (ring, holes))
}

fn build_regions(mask: &FloorMask, sidecar: &AnnotationSidecar, an: &Analysis, cfg: &ExtractConfig, warnings: &mut Vec<String>) -> Vec<RegionPolygon> {
    let (w, h) = (mask.width(), mask.height());
    let comps = &an.comps;
    let members = comps.members();

    let walls = Bitmap::from_fn(w, h, |x, y| !mask.free.get(x, y));
    let bg = components(&walls, Connectivity::Eight);
    let mut holes_of: BTreeMap<usize, Vec<Vec<Point2>>> = BTreeMap::new();
    for pix in bg.members() {
        let touches_border = pix.iter().any(|&i| {
            let (x, y) = walls.coords(i);
            x == 0 || y == 0 || x == w - 1 || y == h - 1
        });
        if touches_border {
            continue;
        }
        // The pixel above the first one is free and belongs to the
        // component that encloses this wall island.
        let (x0, y0) = walls.coords(pix[0]);
        let Some(owner) = comps.label((y0 - 1) * w + x0) else { continue };
        let label = bg.labels[pix[0]];
        let ring = trace_ring(
            |x, y| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && bg.labels[y as usize * w + x as usize] == label,
            (x0, y0),
            Connectivity::Eight,
        );
        holes_of.entry(owner).or_default().push(ring);
    }

    let mut portal_adj: Vec<BTreeSet<usize>> = Vec::new();
    for p in &sidecar.portals {
        let (x, y) = annotation_pixel(p.px);
        portal_adj.push(nearby_components(comps, w, h, x, y, cfg.door_gap));
    }
    let mut near_skeleton = BTreeSet::new();
    for i in an.corridor_skeleton.ones() {
        let (x, y) = an.corridor_skeleton.coords(i);
        near_skeleton.extend(nearby_components(comps, w, h, x, y, cfg.door_gap));
    }

    let mut out = Vec::new();
    for (c, pix) in members.into_iter().enumerate() {
        if Some(c) == an.corridor {
            continue;
        }
        let first = comps_coords(w, pix[0]);
        let ring = trace_ring(
            |x, y| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && comps.labels[y as usize * w + x as usize] == c as u32,
            first,
            Connectivity::Four,
        );
        let holes = holes_of.remove(&c).unwrap_or_default();
        let Some((ring, holes)) = simplified_polygon(ring, holes, cfg.dp_tol / mask.scale) else {
            warnings.push(format!("region at pixel {first:?} has no valid outline; skipped"));
            continue;
        };
        let portals: Vec<usize> = (0..portal_adj.len()).filter(|&i| portal_adj[i].contains(&c)).collect();
        let touches_corridor = near_skeleton.contains(&c);
        out.push(RegionPolygon {
            ring,
            holes,
            connectivity_degree: portals.len() + usize::from(touches_corridor),
            component: c,
            pixels: pix,
            portals,
            touches_corridor,
        });
    }
    out
}

fn comps_coords(w: usize, i: usize) -> (usize, usize) {
    (i % w, i / w)
}

/// One polygon per free component other than the corridor, with its
/// connectivity degree.
pub fn extract_regions(mask: &FloorMask, sidecar: &AnnotationSidecar, cfg: &ExtractConfig) -> Result<Vec<RegionPolygon>> {
    cfg.validate()?;
    sidecar.validate(mask)?;
    let an = Analysis::new(mask);
    Ok(build_regions(mask, sidecar, &an, cfg, &mut Vec::new()))
}

/// Chordal-axis centerline of a region, in meters. A region whose
/// centerline prunes away entirely is represented by one node at its pole
/// of inaccessibility.
pub fn centerline(mask: &FloorMask, region: &RegionPolygon, cfg: &ExtractConfig) -> Result<PlanarGraph> {
    cfg.validate()?;
    let poly = region.to_world(mask)?;
    if poly.area() < cfg.min_area {
        return Err(Error::InvalidArgument(format!("region area {:.3} m² is below min_area", poly.area())));
    }
    let mut g = centerline::chordal_axis(&poly, cfg.densify, cfg.spur_len, cfg.dp_tol)?;
    if g.pts.is_empty() {
        let edt = distance_transform(&mask.free);
        g.add(pole(mask, region, &edt));
    }
    Ok(g)
}

/// Pole of inaccessibility on the pixel grid: the centre of the region
/// pixel farthest from any wall. Ties (a plateau along a rectangle's long
/// axis, say) go to the plateau pixel nearest the plateau centroid, then to
/// raster order.
fn pole(mask: &FloorMask, region: &RegionPolygon, edt: &[f64]) -> Point2 {
    let top = region.pixels.iter().map(|&i| edt[i]).fold(f64::NEG_INFINITY, f64::max);
    let plateau: Vec<usize> = region.pixels.iter().copied().filter(|&i| edt[i] >= top - 1e-9).collect();
    let mut c = Point2::default();
    for &i in &plateau {
        c = c + mask.pixel_center(i);
    }
    let c = c.scale(1.0 / plateau.len() as f64);
    let best = plateau
        .iter()
        .copied()
        .min_by(|&a, &b| mask.pixel_center(a).dist(c).total_cmp(&mask.pixel_center(b).dist(c)).then(a.cmp(&b)))
        .expect("regions are non-empty");
    mask.pixel_center(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnmatchedLabel {
    pub index: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorExtraction {
    pub graph: NavGraph,
    pub regions: Vec<RegionPolygon>,
    pub unmatched_labels: Vec<UnmatchedLabel>,
    pub warnings: Vec<String>,
}

enum Hook {
    Corridor(usize),
    Centerline(usize, usize),
    Place(usize),
}

/// Full pipeline for one floor. Node ids are `f{floor}/i####` for
/// intersections, `f{floor}/p###` for places and `f{floor}/d###` for
/// portals (numbered in sidecar order). Positions have `z = 0`.
pub fn assemble_floor_graph(mask: &FloorMask, sidecar: &AnnotationSidecar, cfg: &ExtractConfig, meta: GraphMeta) -> Result<FloorExtraction> {
    cfg.validate()?;
    sidecar.validate(mask)?;
    let (w, h) = (mask.width(), mask.height());
    let mut warnings = Vec::new();
    let an = Analysis::new(mask);
    let mut corridor = skeleton_planar(mask, &an.corridor_skeleton, &an.edt, cfg);
    let regions = build_regions(mask, sidecar, &an, cfg, &mut warnings);
    let region_of: BTreeMap<usize, usize> = regions.iter().enumerate().map(|(r, reg)| (reg.component, r)).collect();

    // Centerlines of traversable regions.
    let mut lines: Vec<Option<PlanarGraph>> = Vec::new();
    for reg in &regions {
        if !classify_traversable(reg, cfg) {
            lines.push(None);
            continue;
        }
        let poly = reg.to_world(mask)?;
        if poly.area() < cfg.min_area {
            warnings.push(format!("traversable region {} is below min_area; no centerline", reg.component));
            lines.push(None);
            continue;
        }
        let mut g = centerline::chordal_axis(&poly, cfg.densify, cfg.spur_len, cfg.dp_tol)?;
        if g.pts.is_empty() {
            g.add(pole(mask, reg, &an.edt));
        }
        lines.push(Some(g));
    }

    // Labels, grouped by region.
    let mut unmatched = Vec::new();
    let mut by_region: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in sidecar.labels.iter().enumerate() {
        let (x, y) = annotation_pixel(l.px);
        let comp = an.comps.label(y * w + x);
        match comp.and_then(|c| region_of.get(&c)) {
            Some(&r) => by_region.entry(r).or_default().push(i),
            None => {
                let reason = if comp.is_some() { "label lies in the corridor" } else { "label lies outside free space" };
                unmatched.push(UnmatchedLabel {
                    index: i,
                    text: l.text.clone(),
                    reason: reason.into(),
                });
            }
        }
    }
    // (region, label index, position)
    let mut places: Vec<(usize, usize, Point2)> = Vec::new();
    for (r, reg) in regions.iter().enumerate() {
        let Some(ids) = by_region.get(&r) else {
            if lines[r].is_none() {
                warnings.push(format!("region {} has no label and becomes no place", reg.component));
            }
            continue;
        };
        let anchor = pole(mask, reg, &an.edt);
        let pick = *ids
            .iter()
            .min_by(|&&a, &&b| {
                let da = annotation_world(mask, sidecar.labels[a].px).dist(anchor);
                let db = annotation_world(mask, sidecar.labels[b].px).dist(anchor);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("non-empty label list");
        for &i in ids {
            if i != pick {
                unmatched.push(UnmatchedLabel {
                    index: i,
                    text: sidecar.labels[i].text.clone(),
                    reason: format!("region already labeled `{}`", sidecar.labels[pick].text),
                });
            }
        }
        // Traversable regions keep their centerline as the walkable part;
        // the place sits at the label itself.
        let pos = if lines[r].is_some() { annotation_world(mask, sidecar.labels[pick].px) } else { anchor };
        places.push((r, pick, pos));
    }
    unmatched.sort_by_key(|u| u.index);
    let place_of_region: BTreeMap<usize, usize> = places.iter().enumerate().map(|(k, p)| (p.0, k)).collect();

    // Portal hooks.
    let mut portal_hooks: Vec<Vec<Hook>> = Vec::new();
    for (i, p) in sidecar.portals.iter().enumerate() {
        let (x, y) = annotation_pixel(p.px);
        let pos = annotation_world(mask, p.px);
        let adj = nearby_components(&an.comps, w, h, x, y, cfg.door_gap);
        let mut hooks = Vec::new();
        for &c in &adj {
            if Some(c) == an.corridor {
                match corridor.attach(pos, cfg.portal_snap, cfg.merge_radius) {
                    Some(v) => hooks.push(Hook::Corridor(v)),
                    None => warnings.push(format!("portal {i} has no corridor edge within {} m", cfg.portal_snap)),
                }
            } else if let Some(&r) = region_of.get(&c) {
                if let Some(line) = &lines[r] {
                    let v = line.nearest_node(pos).expect("centerline has a node");
                    hooks.push(Hook::Centerline(r, v));
                } else if let Some(&k) = place_of_region.get(&r) {
                    hooks.push(Hook::Place(k));
                }
            }
        }
        if hooks.is_empty() {
            warnings.push(format!("portal {i} ({}) connects to nothing", p.kind.as_str()));
        }
        portal_hooks.push(hooks);
    }

    // Places reached through a traversable region's centerline.
    let mut place_hooks: Vec<Option<Hook>> = Vec::new();
    for &(r, _, pos) in &places {
        let hook = lines[r]
            .as_ref()
            .map(|line| Hook::Centerline(r, line.nearest_node(pos).expect("centerline has a node")));
        place_hooks.push(hook);
    }
    // Portal-less rooms touching the corridor hang off its nearest node.
    for (k, &(r, _, pos)) in places.iter().enumerate() {
        let has_portal = portal_hooks.iter().flatten().any(|hk| matches!(hk, Hook::Place(q) if *q == k));
        if place_hooks[k].is_some() || has_portal {
            continue;
        }
        if regions[r].touches_corridor {
            if let Some(v) = corridor.nearest_node(pos) {
                place_hooks[k] = Some(Hook::Corridor(v));
                continue;
            }
        }
        warnings.push(format!("place `{}` is unreachable", sidecar.labels[places[k].1].text));
    }

    // Node list.
    let floor = mask.floor;
    let at = |p: Point2| Point3::new(p.x, p.y, 0.0);
    let mut b = GraphBuilder::new();
    let mut next_i = 0usize;
    let mut intersection = |b: &mut GraphBuilder, p: Point2| {
        let id = format!("f{floor}/i{next_i:04}");
        next_i += 1;
        b.push_node(NavNode::intersection(id, at(p), floor))
    };
    let corridor_idx: Vec<usize> = corridor.pts.iter().map(|&p| intersection(&mut b, p)).collect();
    for &(u, v) in &corridor.edges {
        b.connect(corridor_idx[u], corridor_idx[v]);
    }
    let mut line_idx: Vec<Vec<usize>> = Vec::new();
    for line in &lines {
        let Some(line) = line else {
            line_idx.push(Vec::new());
            continue;
        };
        let idx: Vec<usize> = line.pts.iter().map(|&p| intersection(&mut b, p)).collect();
        for &(u, v) in &line.edges {
            b.connect(idx[u], idx[v]);
        }
        line_idx.push(idx);
    }
    let resolve = |hook: &Hook, place_idx: &[usize]| match *hook {
        Hook::Corridor(v) => corridor_idx[v],
        Hook::Centerline(r, v) => line_idx[r][v],
        Hook::Place(k) => place_idx[k],
    };
    let mut place_idx = Vec::new();
    for (k, &(_, li, pos)) in places.iter().enumerate() {
        let text = normalize_label(&sidecar.labels[li].text);
        place_idx.push(b.push_node(NavNode::place(format!("f{floor}/p{k:03}"), at(pos), floor, &text)));
    }
    for (k, hook) in place_hooks.iter().enumerate() {
        if let Some(hook) = hook {
            let v = resolve(hook, &place_idx);
            b.connect(place_idx[k], v);
        }
    }
    for (i, p) in sidecar.portals.iter().enumerate() {
        let v = b.push_node(NavNode::portal(format!("f{floor}/d{i:03}"), at(annotation_world(mask, p.px)), floor, p.kind));
        for hook in &portal_hooks[i] {
            let u = resolve(hook, &place_idx);
            b.connect(v, u);
        }
    }

    let mut meta = meta;
    meta.exterior = exterior(mask, sidecar, cfg);
    let graph = b.build(meta)?;
    Ok(FloorExtraction {
        graph,
        regions,
        unmatched_labels: unmatched,
        warnings,
    })
}

/// Exterior outline in meters: the sidecar hint when given, otherwise the
/// traced outline of the free space dilated by `door_gap` pixels with holes
/// filled.
pub fn exterior(mask: &FloorMask, sidecar: &AnnotationSidecar, cfg: &ExtractConfig) -> Option<Vec<Point2>> {
    if let Some(hint) = &sidecar.exterior_hint {
        let ring: Vec<Point2> = hint.iter().map(|&(x, y)| mask.to_world(x, y)).collect();
        return Polygon2D::new(ring).ok().map(|p| p.ring().to_vec());
    }
    let (w, h) = (mask.width(), mask.height());
    let g = cfg.door_gap as i64;
    let grown = Bitmap::from_fn(w, h, |x, y| {
        (-g..=g).any(|dy| (-g..=g).any(|dx| mask.free.get_i(x as i64 + dx, y as i64 + dy)))
    });
    let outside = Bitmap::from_fn(w, h, |x, y| !grown.get(x, y));
    let bg = components(&outside, Connectivity::Four);
    let mut border = BTreeSet::new();
    for i in outside.ones() {
        let (x, y) = outside.coords(i);
        if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
            border.insert(bg.labels[i]);
        }
    }
    let filled = Bitmap::from_fn(w, h, |x, y| grown.get(x, y) || !border.contains(&bg.labels[y * w + x]));
    let comps = components(&filled, Connectivity::Four);
    let members = comps.members();
    let largest = (0..comps.count).max_by(|&a, &b| members[a].len().cmp(&members[b].len()).then(b.cmp(&a)))?;
    let first = comps_coords(w, members[largest][0]);
    let ring = trace_ring(
        |x, y| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && comps.labels[y as usize * w + x as usize] == largest as u32,
        first,
        Connectivity::Four,
    );
    let (ring, _) = simplified_polygon(ring, Vec::new(), cfg.dp_tol / mask.scale)?;
    let world: Vec<Point2> = ring.iter().map(|p| mask.to_world(p.x, p.y)).collect();
    Polygon2D::new(world).ok().map(|p| p.ring().to_vec())
}

#[cfg(test)]
mod tests;
