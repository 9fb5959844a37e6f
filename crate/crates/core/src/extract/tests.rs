use super::*;
use crate::direction::DirectionCategory;
use crate::graph::NodeKind;
use crate::sim::floorplan::{fidelity_fixtures, score_extraction, PlanBuilder};
use proptest::prelude::*;

fn cfg() -> ExtractConfig {
    ExtractConfig::default()
}

fn corridor_graph(b: PlanBuilder) -> NavGraph {
    let (mask, _) = b.build().unwrap();
    let skel = thin_mask(&mask);
    let an = Analysis::new(&mask);
    skeleton_to_graph(&mask, &an.corridor_skeleton.and(&skel), &cfg()).unwrap()
}

fn assemble(b: PlanBuilder) -> FloorExtraction {
    let (mask, sidecar) = b.build().unwrap();
    assemble_floor_graph(&mask, &sidecar, &cfg(), GraphMeta::named("t")).unwrap()
}

fn kinds(g: &NavGraph, k: NodeKind) -> Vec<usize> {
    (0..g.node_count()).filter(|&v| g.node(v).kind == k).collect()
}

fn neighbours(g: &NavGraph, v: usize) -> Vec<usize> {
    g.out_edges(v).iter().map(|e| e.to).collect()
}

/// Every intersection-to-intersection edge, sampled every 0.2 px, stays on
/// free pixels.
fn edges_in_free_space(mask: &FloorMask, g: &NavGraph) -> bool {
    g.edges().iter().all(|e| {
        let (a, b) = (g.node(e.from), g.node(e.to));
        if a.kind != NodeKind::Intersection || b.kind != NodeKind::Intersection {
            return true;
        }
        let steps = (e.length / mask.scale * 5.0) as usize + 1;
        (0..=steps).all(|k| {
            let p = a.position.xy().lerp(b.position.xy(), k as f64 / steps as f64);
            let (x, y) = mask.pixel_of(p);
            mask.free.get(x, y)
        })
    })
}

#[test]
fn thin_mask_keeps_a_row() {
    let (mask, _) = PlanBuilder::new(12, 3, 0.1, 0).carve(1, 1, 11, 2).build().unwrap();
    assert_eq!(thin_mask(&mask), mask.free);
}

#[test]
fn straight_corridor() {
    let g = corridor_graph(PlanBuilder::new(100, 30, 0.1, 0).carve(5, 5, 95, 25));
    assert_eq!(g.node_count(), 2);
    assert_eq!(g.edge_count(), 2);
    let e = &g.edges()[0];
    assert!(e.length > 6.5 && e.length < 9.0, "{}", e.length);
}

#[test]
fn t_junction_corridor() {
    let g = corridor_graph(PlanBuilder::new(100, 80, 0.1, 0).carve(5, 5, 95, 25).carve(40, 25, 60, 75));
    assert_eq!(g.node_count(), 4, "{:?}", g.nodes());
    assert_eq!(g.edge_count(), 6);
    let degrees: Vec<usize> = (0..4).map(|v| g.out_degree(v)).collect();
    assert_eq!(degrees.iter().filter(|&&d| d == 1).count(), 3);
    assert_eq!(degrees.iter().filter(|&&d| d == 3).count(), 1);
}

#[test]
fn l_corridor_has_perpendicular_edges() {
    let g = corridor_graph(PlanBuilder::new(100, 85, 0.1, 0).carve(5, 5, 95, 25).carve(75, 5, 95, 80));
    assert_eq!(g.node_count(), 3, "{:?}", g.nodes());
    let bend = (0..3).find(|&v| g.out_degree(v) == 2).unwrap();
    let dirs: Vec<DirectionCategory> = g.out_edges(bend).iter().map(|e| e.direction).collect();
    let diff = (dirs[0].index() as i32 - dirs[1].index() as i32).rem_euclid(8);
    assert!(diff == 2 || diff == 6, "{dirs:?}");
}

#[test]
fn empty_mask_gives_empty_graph() {
    let (mask, sidecar) = PlanBuilder::new(10, 10, 0.1, 0).build().unwrap();
    let out = assemble_floor_graph(&mask, &sidecar, &cfg(), GraphMeta::named("e")).unwrap();
    assert!(out.graph.is_empty());
    assert!(out.regions.is_empty());
}

fn corridor_and_rooms() -> PlanBuilder {
    PlanBuilder::new(100, 60, 0.1, 0).carve(3, 3, 97, 23).carve(3, 26, 33, 50)
}

#[test]
fn one_room_is_a_rectangle() {
    let (mask, sidecar) = corridor_and_rooms().build().unwrap();
    let regions = extract_regions(&mask, &sidecar, &cfg()).unwrap();
    assert_eq!(regions.len(), 1);
    assert_eq!(regions[0].ring.len(), 4);
    assert_eq!(regions[0].area_px(), 30 * 24);
    let area = regions[0].to_world(&mask).unwrap().area();
    assert!((area - 7.2).abs() < 0.01, "{area}");
}

#[test]
fn two_rooms_two_regions() {
    let (mask, sidecar) = corridor_and_rooms().carve(36, 26, 70, 50).build().unwrap();
    assert_eq!(extract_regions(&mask, &sidecar, &cfg()).unwrap().len(), 2);
}

#[test]
fn door_counts_towards_degree() {
    let (mask, sidecar) = corridor_and_rooms().portal(PortalKind::Door, 15, 24).build().unwrap();
    let regions = extract_regions(&mask, &sidecar, &cfg()).unwrap();
    assert!(regions[0].connectivity_degree >= 1);
    assert_eq!(regions[0].portals, vec![0]);
}

#[test]
fn pillar_becomes_hole() {
    let (mask, sidecar) = corridor_and_rooms().carve(40, 26, 90, 58).build().unwrap();
    let mut free = mask.free.clone();
    for y in 38..44 {
        for x in 60..66 {
            free.set(x, y, false);
        }
    }
    let mask = FloorMask::new(free, 0.1, 0).unwrap();
    let regions = extract_regions(&mask, &sidecar, &cfg()).unwrap();
    let big = regions.iter().find(|r| r.holes.len() == 1).expect("room with pillar");
    let area = big.to_world(&mask).unwrap().area();
    assert!((area - (50.0 * 32.0 - 36.0) * 0.01).abs() < 0.02, "{area}");
}

fn region_with_degree(d: usize) -> RegionPolygon {
    RegionPolygon {
        ring: vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)],
        holes: Vec::new(),
        connectivity_degree: d,
        component: 0,
        pixels: Vec::new(),
        portals: Vec::new(),
        touches_corridor: false,
    }
}

#[test]
fn traversability_threshold() {
    assert!(!classify_traversable(&region_with_degree(1), &cfg()));
    assert!(classify_traversable(&region_with_degree(3), &cfg()));
    assert!(classify_traversable(&region_with_degree(5), &cfg()));
}

#[test]
fn centerline_of_small_region_is_skipped() {
    let (mask, sidecar) = corridor_and_rooms().carve(40, 30, 45, 35).build().unwrap();
    let regions = extract_regions(&mask, &sidecar, &cfg()).unwrap();
    let tiny = regions.iter().find(|r| r.area_px() == 25).unwrap();
    assert!(centerline(&mask, tiny, &cfg()).is_err());
    let room = regions.iter().find(|r| r.area_px() > 25).unwrap();
    let c = centerline(&mask, room, &cfg()).unwrap();
    assert!(!c.pts.is_empty());
}

#[test]
fn golden_two_rooms() {
    let out = assemble(
        corridor_and_rooms()
            .carve(36, 26, 70, 50)
            .label("Pharmacy", 15, 40)
            .label("Radiology", 50, 40)
            .portal(PortalKind::Door, 15, 24)
            .portal(PortalKind::Door, 50, 24),
    );
    let g = &out.graph;
    let places = kinds(g, NodeKind::Place);
    let portals = kinds(g, NodeKind::Portal);
    assert_eq!(places.len(), 2);
    assert_eq!(portals.len(), 2);
    assert!(kinds(g, NodeKind::Intersection).len() >= 2);
    assert_eq!(g.weak_components().len(), 1);
    let labels: Vec<&str> = places.iter().map(|&v| g.node(v).label.as_deref().unwrap()).collect();
    assert_eq!(labels, vec!["pharmacy", "radiology"]);
    // Each place hangs off exactly its door, each door off one corridor node.
    for &p in &places {
        let n = neighbours(g, p);
        assert_eq!(n.len(), 1);
        assert_eq!(g.node(n[0]).kind, NodeKind::Portal);
    }
    for &d in &portals {
        let mut ks: Vec<NodeKind> = neighbours(g, d).iter().map(|&v| g.node(v).kind).collect();
        ks.sort_by_key(|k| k.as_str());
        assert_eq!(ks, vec![NodeKind::Intersection, NodeKind::Place]);
    }
    assert!(out.unmatched_labels.is_empty());
    assert!(out.graph.meta().exterior.is_some());
}

#[test]
fn no_annotations_gives_corridor_only() {
    let out = assemble(corridor_and_rooms());
    assert!(out.graph.nodes().iter().all(|n| n.kind == NodeKind::Intersection));
    assert_eq!(out.graph.node_count(), 2);
    assert!(out.warnings.iter().any(|w| w.contains("no label")));
}

#[test]
fn labels_are_normalized() {
    let out = assemble(corridor_and_rooms().label("  PHARMACY ", 10, 30).portal(PortalKind::Door, 15, 24));
    let p = kinds(&out.graph, NodeKind::Place);
    assert_eq!(out.graph.node(p[0]).label.as_deref(), Some("pharmacy"));
}

#[test]
fn stray_labels_are_reported() {
    let out = assemble(
        corridor_and_rooms()
            .label("Wall", 1, 1)
            .label("Hall", 50, 10)
            .label("A", 10, 30)
            .label("B", 20, 40)
            .portal(PortalKind::Door, 15, 24),
    );
    let texts: Vec<&str> = out.unmatched_labels.iter().map(|u| u.text.as_str()).collect();
    assert_eq!(texts.len(), 3, "{:?}", out.unmatched_labels);
    assert!(texts.contains(&"Wall") && texts.contains(&"Hall"));
    assert_eq!(kinds(&out.graph, NodeKind::Place).len(), 1);
}

#[test]
fn portal_less_room_next_to_corridor_attaches() {
    // A narrow corridor puts the skeleton within door_gap of the room.
    let out = assemble(PlanBuilder::new(60, 20, 0.1, 0).carve(2, 2, 58, 5).carve(2, 6, 20, 18).label("Closet", 10, 12));
    let p = kinds(&out.graph, NodeKind::Place)[0];
    assert_eq!(out.graph.out_degree(p), 1);
}

#[test]
fn lobby_gets_a_centerline_node() {
    let f = fidelity_fixtures().unwrap().into_iter().find(|f| f.name == "lobby").unwrap();
    let out = assemble_floor_graph(&f.mask, &f.sidecar, &cfg(), GraphMeta::named("l")).unwrap();
    let lobby = out.regions.iter().find(|r| r.portals.len() == 3).unwrap();
    assert!(classify_traversable(lobby, &cfg()));
    assert_eq!(out.graph.weak_components().len(), 1);
}

#[test]
fn fixtures_score_well() {
    for f in fidelity_fixtures().unwrap() {
        let out = assemble_floor_graph(&f.mask, &f.sidecar, &cfg(), GraphMeta::named(f.name)).unwrap();
        let s = score_extraction(&out.graph, &f.truth_nodes, &f.truth_edges, 1.0);
        assert!(s.node_f1() >= 0.9 && s.edge_f1() >= 0.9, "{}: {s:?}\n{:#?}", f.name, out.graph.nodes());
        assert!(edges_in_free_space(&f.mask, &out.graph), "{}", f.name);
        assert_eq!(out.graph.weak_components().len(), 1, "{}", f.name);
        assert!(out.unmatched_labels.is_empty(), "{}", f.name);
    }
}

#[test]
fn extraction_is_deterministic() {
    for f in fidelity_fixtures().unwrap() {
        let a = assemble_floor_graph(&f.mask, &f.sidecar, &cfg(), GraphMeta::named("d")).unwrap();
        let b = assemble_floor_graph(&f.mask, &f.sidecar, &cfg(), GraphMeta::named("d")).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn exterior_hint_wins() {
    let (mask, mut sidecar) = corridor_and_rooms().build().unwrap();
    sidecar.exterior_hint = Some(vec![(0.0, 0.0), (100.0, 0.0), (100.0, 60.0), (0.0, 60.0)]);
    let ext = exterior(&mask, &sidecar, &cfg()).unwrap();
    let area = crate::geometry::signed_area(&ext).abs();
    assert!((area - 60.0).abs() < 1e-9);
    sidecar.exterior_hint = None;
    let traced = crate::geometry::signed_area(&exterior(&mask, &sidecar, &cfg()).unwrap()).abs();
    assert!(traced > 30.0 && traced < 45.0, "{traced}");
}

#[test]
fn sidecar_bounds_are_checked() {
    let (mask, mut sidecar) = corridor_and_rooms().build().unwrap();
    sidecar.labels.push(SidecarLabel {
        text: "x".into(),
        px: (200.0, 1.0),
    });
    assert!(assemble_floor_graph(&mask, &sidecar, &cfg(), GraphMeta::default()).is_err());
    assert!(FloorMask::new(Bitmap::new(2, 2), 0.0, 0).is_err());
}

/// Corridor along the top with rooms below it, random doors and labels.
fn arb_plan() -> impl Strategy<Value = PlanBuilder> {
    let room = (8usize..30, 10usize..30, any::<bool>(), any::<bool>());
    (proptest::collection::vec(room, 1..5), 12usize..24).prop_map(|(rooms, cw)| {
        let width = 3 + rooms.iter().map(|r| r.0 + 3).sum::<usize>();
        let height = cw + 6 + 3 + rooms.iter().map(|r| r.1).max().unwrap() + 3;
        let mut b = PlanBuilder::new(width, height, 0.1, 0).carve(3, 3, width - 3, 3 + cw);
        let top = 3 + cw + 3;
        let mut x = 3;
        for (i, &(rw, rh, door, label)) in rooms.iter().enumerate() {
            b = b.carve(x, top, x + rw, top + rh);
            if door {
                b = b.portal(PortalKind::Door, x + rw / 2, top - 2);
            }
            if label {
                b = b.label(&alloc::format!("Room {i}"), x + rw / 2, top + rh / 2);
            }
            x += rw + 3;
        }
        b
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assembled_graphs_are_valid_and_deterministic(plan in arb_plan()) {
        let (mask, sidecar) = plan.build().unwrap();
        let a = assemble_floor_graph(&mask, &sidecar, &cfg(), GraphMeta::named("p")).unwrap();
        let b = assemble_floor_graph(&mask, &sidecar, &cfg(), GraphMeta::named("p")).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(edges_in_free_space(&mask, &a.graph));
        let g = &a.graph;
        for (r, reg) in a.regions.iter().enumerate() {
            if reg.portals.is_empty() {
                continue;
            }
            // A labeled room with a door is reachable.
            let label = alloc::format!("room {r}");
            if let Some(v) = (0..g.node_count()).find(|&v| g.node(v).label.as_deref() == Some(&label)) {
                prop_assert!(g.out_degree(v) > 0);
            }
        }
    }
}
