//! Similarity registration of floor outlines onto building footprints, and
//! mapping of floor graphs into the global frame.

use alloc::vec::Vec;

use crate::direction::DirectionCategory;
use crate::error::{Error, Result};
use crate::geometry::{polygon_iou_with, Polygon2D, SimilarityTransform2D, DEFAULT_IOU_RES};
use crate::graph::{EdgeSpec, NavGraph};
use crate::math::{self, Point2};

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationConfig {
    /// Scanlines used for the rasterized IoU.
    pub iou_res: usize,
    pub min_iou: f64,
    /// Step of the coarse rotation sweep, degrees.
    pub coarse_step_deg: f64,
    /// Sweep peaks handed to the local refinement.
    pub seeds: usize,
    /// Iteration cap of one Nelder–Mead run.
    pub max_iter: usize,
    /// A restart that improves the IoU by less than this ends the search.
    pub tol: f64,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            iou_res: DEFAULT_IOU_RES,
            min_iou: 0.5,
            coarse_step_deg: 1.0,
            seeds: 4,
            max_iter: 200,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Registration {
    pub transform: SimilarityTransform2D,
    pub iou: f64,
}

/// Parametrization centred on the two centroids, so rotation and scale do
/// not drag the translation around:
/// `p ↦ e^k R(θ) (p − c_fp) + c_osm + (dx, dy)`.
struct Problem<'a> {
    fp: &'a Polygon2D,
    osm: &'a Polygon2D,
    c_fp: Point2,
    c_osm: Point2,
    rows: usize,
}

impl Problem<'_> {
    fn transform(&self, x: &[f64; 4]) -> SimilarityTransform2D {
        let s = math::exp(x[1]);
        let (sn, cs) = math::sin_cos(x[0]);
        let rc = Point2::new(s * (cs * self.c_fp.x - sn * self.c_fp.y), s * (sn * self.c_fp.x + cs * self.c_fp.y));
        SimilarityTransform2D {
            rotation: math::wrap_angle(x[0]),
            scale: s,
            tx: self.c_osm.x + x[2] - rc.x,
            ty: self.c_osm.y + x[3] - rc.y,
        }
    }

    fn iou(&self, x: &[f64; 4]) -> f64 {
        let m = self.transform(x);
        polygon_iou_with(self.osm, &self.fp.transformed(&m), self.rows)
    }
}

/// Maximizes `IoU(p_osm, M·p_fp)` over similarity transforms `M`.
///
/// Scale starts at `sqrt(area ratio)` with the centroids aligned. A full
/// rotation sweep picks the strongest `seeds` local maxima, each refined by
/// restarted Nelder–Mead over (θ, ln s, tx, ty); the best result wins.
pub fn register_polygon(p_fp: &Polygon2D, p_osm: &Polygon2D, cfg: &RegistrationConfig) -> Result<Registration> {
    if !(p_fp.area() > 0.0 && p_osm.area() > 0.0) {
        return Err(Error::InvalidArgument("registration needs polygons with positive area".into()));
    }
    if !(cfg.coarse_step_deg > 0.0 && cfg.iou_res > 0 && cfg.seeds > 0) {
        return Err(Error::InvalidArgument("registration config out of range".into()));
    }
    let prob = Problem {
        fp: p_fp,
        osm: p_osm,
        c_fp: p_fp.centroid(),
        c_osm: p_osm.centroid(),
        rows: cfg.iou_res,
    };
    let k0 = 0.5 * math::ln(p_osm.area() / p_fp.area());

    let steps = math::ceil(360.0 / cfg.coarse_step_deg) as usize;
    let sweep: Vec<f64> = (0..steps)
        .map(|i| prob.iou(&[(i as f64 * cfg.coarse_step_deg).to_radians(), k0, 0.0, 0.0]))
        .collect();
    let mut peaks: Vec<usize> = (0..steps)
        .filter(|&i| {
            let prev = sweep[(i + steps - 1) % steps];
            let next = sweep[(i + 1) % steps];
            sweep[i] >= prev && sweep[i] >= next
        })
        .collect();
    // Highest first; the stable sort keeps the lower angle on ties.
    peaks.sort_by(|&a, &b| sweep[b].total_cmp(&sweep[a]));
    peaks.truncate(cfg.seeds);
    if peaks.is_empty() {
        peaks.push(0);
    }

    let extent = math::sqrt(p_osm.area());
    let mut best: Option<([f64; 4], f64)> = None;
    for &i in &peaks {
        let x0 = [(i as f64 * cfg.coarse_step_deg).to_radians(), k0, 0.0, 0.0];
        let steps0 = [cfg.coarse_step_deg.to_radians(), 0.02, 0.02 * extent, 0.02 * extent];
        let (x, f) = refine(&prob, x0, steps0, cfg);
        if best.is_none_or(|(_, bf)| f > bf) {
            best = Some((x, f));
        }
    }
    let (x, iou) = best.expect("at least one seed");
    let transform = prob.transform(&x);
    if iou < cfg.min_iou {
        return Err(Error::RegistrationFailed {
            iou,
            min_iou: cfg.min_iou,
            best: transform,
        });
    }
    Ok(Registration { transform, iou })
}

/// Nelder–Mead restarted from its own optimum with a shrinking simplex until
/// a restart gains less than `cfg.tol`.
fn refine(prob: &Problem<'_>, x0: [f64; 4], step0: [f64; 4], cfg: &RegistrationConfig) -> ([f64; 4], f64) {
    let mut x = x0;
    let mut f = prob.iou(&x);
    let mut step = step0;
    for _ in 0..8 {
        let (nx, nf) = nelder_mead(|p| -prob.iou(p), x, step, cfg.max_iter);
        let gain = -nf - f;
        if gain > 0.0 {
            x = nx;
            f = -nf;
        }
        if gain < cfg.tol {
            break;
        }
        for s in &mut step {
            *s *= 0.5;
        }
    }
    (x, f)
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex. Stops after
/// `max_iter` iterations or once the simplex values agree to 1e-9.
fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(f: F, x0: [f64; 4], step: [f64; 4], max_iter: usize) -> ([f64; 4], f64) {
    const N: usize = 4;
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += step[i];
        simplex.push((x, f(&x)));
    }
    let lerp = |a: &[f64; N], b: &[f64; N], t: f64| {
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = a[i] + t * (b[i] - a[i]);
        }
        out
    };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[N].1 - simplex[0].1 < 1e-9 {
            break;
        }
        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for i in 0..N {
                centroid[i] += x[i] / N as f64;
            }
        }
        let worst = simplex[N];
        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = lerp(&centroid, &xr, 0.5);
                (xc, f(&xc))
            } else {
                let xc = lerp(&centroid, &worst.0, 0.5);
                (xc, f(&xc))
            };
            if fc < worst.1.min(fr) {
                simplex[N] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &v.0, 0.5);
                    *v = (x, f(&x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Maps every node through `m` and lifts it by `z_offset`.
///
/// Directions are recomputed from the mapped positions. Edges whose
/// endpoints coincide horizontally (lifts, stairs) have no planar direction,
/// so theirs is rotated by the nearest multiple of 45°. Lengths scale by
/// `m.scale`. The exterior outline, if any, is mapped too.
pub fn apply_transform(g: &NavGraph, m: &SimilarityTransform2D, z_offset: f64) -> NavGraph {
    let turn = math::round(m.rotation / core::f64::consts::FRAC_PI_4) as i32;
    let mut nodes = g.nodes().to_vec();
    for n in &mut nodes {
        let p = m.apply(n.position.xy());
        n.position.x = p.x;
        n.position.y = p.y;
        n.position.z += z_offset;
    }
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (&nodes[e.from], &nodes[e.to]);
            let (dx, dy) = (b.position.x - a.position.x, b.position.y - a.position.y);
            let dir = if math::hypot(dx, dy) > 1e-9 {
                DirectionCategory::discretize(math::atan2(dy, dx)).unwrap_or_default()
            } else {
                e.direction.rotated(turn)
            };
            EdgeSpec::new(a.id.clone(), b.id.clone())
                .with_direction(dir)
                .with_length(e.length * m.scale)
        })
        .collect();
    let mut meta = g.meta().clone();
    if let Some(ext) = meta.exterior.as_mut() {
        for p in ext.iter_mut() {
            *p = m.apply(*p);
        }
    }
    NavGraph::new(meta, nodes, edges).expect("a similarity transform preserves graph validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, GraphMeta, NavNode};
    use crate::math::Point3;
    use alloc::vec;
    use proptest::prelude::*;

    fn l_shape() -> Polygon2D {
        Polygon2D::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(30.0, 0.0),
            Point2::new(30.0, 10.0),
            Point2::new(10.0, 10.0),
            Point2::new(10.0, 25.0),
            Point2::new(0.0, 25.0),
        ])
        .unwrap()
    }

    fn angle_err(a: f64, b: f64) -> f64 {
        math::wrap_angle(a - b).abs()
    }

    #[test]
    fn identical_polygons_register_to_identity() {
        let p = l_shape();
        let r = register_polygon(&p, &p, &RegistrationConfig::default()).unwrap();
        assert!(r.iou >= 0.99, "{r:?}");
        assert!(angle_err(r.transform.rotation, 0.0) < 1f64.to_radians());
        assert!((r.transform.scale - 1.0).abs() < 0.01);
        assert!(math::hypot(r.transform.tx, r.transform.ty) < 0.3, "{r:?}");
    }

    #[test]
    fn recovers_known_transform_on_l_shape() {
        let p = l_shape();
        let truth = SimilarityTransform2D::new(37f64.to_radians(), 1.3, 12.0, -7.0).unwrap();
        let target = p.transformed(&truth);
        let r = register_polygon(&p, &target, &RegistrationConfig::default()).unwrap();
        assert!(angle_err(r.transform.rotation, truth.rotation) < 2f64.to_radians(), "{r:?}");
        assert!((r.transform.scale / truth.scale - 1.0).abs() < 0.02, "{r:?}");
        assert!(math::hypot(r.transform.tx - truth.tx, r.transform.ty - truth.ty) < 0.5, "{r:?}");
        assert!(r.iou >= 0.97);
    }

    #[test]
    fn regular_32gon_reaches_high_iou() {
        let ring: Vec<Point2> = (0..32)
            .map(|i| {
                let a = i as f64 * core::f64::consts::TAU / 32.0;
                Point2::new(10.0 * math::cos(a), 10.0 * math::sin(a))
            })
            .collect();
        let p = Polygon2D::new(ring).unwrap();
        let target = p.transformed(&SimilarityTransform2D::new(0.3, 0.8, 5.0, 5.0).unwrap());
        let r = register_polygon(&p, &target, &RegistrationConfig::default()).unwrap();
        assert!(r.iou >= 0.98, "{r:?}");
    }

    #[test]
    fn disjoint_shapes_fail_with_best_transform() {
        let thin = Polygon2D::rect(0.0, 0.0, 100.0, 1.0).unwrap();
        let sq = Polygon2D::rect(0.0, 0.0, 10.0, 10.0).unwrap();
        let cfg = RegistrationConfig {
            min_iou: 0.9,
            ..RegistrationConfig::default()
        };
        match register_polygon(&thin, &sq, &cfg) {
            Err(Error::RegistrationFailed { iou, best, .. }) => {
                assert!(iou < 0.9);
                assert!(best.scale > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    fn sample_graph() -> NavGraph {
        let mut b = GraphBuilder::new();
        let a = b.push_node(NavNode::intersection("a", Point3::new(0.0, 0.0, 0.0), 0));
        let c = b.push_node(NavNode::intersection("b", Point3::new(4.0, 0.0, 0.0), 0));
        let d = b.push_node(NavNode::intersection("c", Point3::new(4.0, 3.0, 0.0), 0));
        b.connect(a, c);
        b.connect(c, d);
        b.connect(a, d);
        b.build(GraphMeta::named("t")).unwrap()
    }

    #[test]
    fn identity_leaves_graph_unchanged() {
        let g = sample_graph();
        assert_eq!(apply_transform(&g, &SimilarityTransform2D::IDENTITY, 0.0), g);
    }

    #[test]
    fn quarter_turn_shifts_directions_by_two() {
        let g = sample_graph();
        let m = SimilarityTransform2D::new(core::f64::consts::FRAC_PI_2, 1.0, 3.0, -1.0).unwrap();
        let h = apply_transform(&g, &m, 8.0);
        for (e, f) in g.edges().iter().zip(h.edges()) {
            assert_eq!((e.from, e.to), (f.from, f.to));
            assert_eq!(f.direction.index(), (e.direction.index() + 2) % 8);
        }
        assert!(h.nodes().iter().all(|n| (n.position.z - 8.0).abs() < 1e-12));
    }

    #[test]
    fn scale_doubles_lengths() {
        let g = sample_graph();
        let m = SimilarityTransform2D::new(0.0, 2.0, 0.0, 0.0).unwrap();
        let h = apply_transform(&g, &m, 0.0);
        for (e, f) in g.edges().iter().zip(h.edges()) {
            assert!((f.length - 2.0 * e.length).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_random_transforms_on_random_footprints() {
        use crate::sim::floorplan::random_rectilinear_polygon;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for case in 0..20 {
            let p = random_rectilinear_polygon(&mut rng, 6, 5.0);
            let truth = SimilarityTransform2D::new(
                rng.random_range(-core::f64::consts::PI..core::f64::consts::PI),
                rng.random_range(0.5..2.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
            )
            .unwrap();
            let r = register_polygon(&p, &p.transformed(&truth), &RegistrationConfig::default()).unwrap();
            let m = r.transform;
            assert!(angle_err(m.rotation, truth.rotation) < 2f64.to_radians(), "case {case}: {r:?} vs {truth:?}");
            assert!((m.scale / truth.scale - 1.0).abs() < 0.02, "case {case}");
            assert!(math::hypot(m.tx - truth.tx, m.ty - truth.ty) < 0.5, "case {case}");
            assert!(r.iou >= 0.97, "case {case}");
        }
    }

    fn arb_transform() -> impl Strategy<Value = SimilarityTransform2D> {
        (-3.1f64..3.1, 0.5f64..2.0, -50.0f64..50.0, -50.0f64..50.0)
            .prop_map(|(r, s, x, y)| SimilarityTransform2D::new(r, s, x, y).unwrap())
    }

    proptest! {
        #[test]
        fn transform_preserves_topology(m in arb_transform(), z in -10.0f64..10.0) {
            let g = sample_graph();
            let h = apply_transform(&g, &m, z);
            prop_assert_eq!(g.node_count(), h.node_count());
            for (a, b) in g.nodes().iter().zip(h.nodes()) {
                prop_assert_eq!(&a.id, &b.id);
            }
            let ge: Vec<_> = g.edges().iter().map(|e| (e.from, e.to)).collect();
            let he: Vec<_> = h.edges().iter().map(|e| (e.from, e.to)).collect();
            prop_assert_eq!(ge, he);
        }
    }
}
