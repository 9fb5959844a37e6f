//! Union of registered floor graphs and the outdoor graph into one global
//! graph, joined at entrances and at stacked vertical portals.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, GraphMeta, NavGraph, NavNode, NodeKind, PortalKind};

#[derive(Debug, Clone, PartialEq)]
pub struct StitchConfig {
    /// Farthest an entrance may be from the outdoor node it joins, meters.
    pub entrance_snap: f64,
    /// Largest horizontal offset between stacked vertical portals, meters.
    pub portal_stack_radius: f64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        Self {
            entrance_snap: 15.0,
            portal_stack_radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stitched {
    pub graph: NavGraph,
    /// Weak components other than the largest, each as its sorted node ids.
    pub orphans: Vec<Vec<String>>,
    pub warnings: Vec<String>,
}

impl Stitched {
    pub fn is_connected(&self) -> bool {
        self.orphans.is_empty()
    }
}

/// Namespace of an input graph: its name, or `g{index}` when unnamed.
fn namespace(g: &NavGraph, index: usize) -> String {
    if g.meta().name.is_empty() {
        format!("g{index}")
    } else {
        g.meta().name.clone()
    }
}

/// Joins `graphs` (already in the global frame) with the outdoor graph `osm`.
///
/// Every node id becomes `{namespace}:{id}` where the namespace is the name
/// of its input graph. Each entrance gets an edge pair to the nearest
/// outdoor node within `entrance_snap`. Vertical portals of one building
/// (the node's `building`, else its graph's namespace) and the same kind are
/// joined to the nearest such portal on the floor above when closer than
/// `portal_stack_radius` horizontally.
pub fn stitch(graphs: &[NavGraph], osm: &NavGraph, cfg: &StitchConfig) -> Result<Stitched> {
    let mut nodes: Vec<NavNode> = Vec::new();
    let mut edges: Vec<EdgeSpec> = Vec::new();
    let mut seen_ids = BTreeSet::new();
    // Building key of each pushed node; outdoor nodes have none.
    let mut building: Vec<Option<String>> = Vec::new();
    let mut is_outdoor: Vec<bool> = Vec::new();

    let inputs = graphs.iter().map(|g| (g, false)).chain((!osm.is_empty()).then_some((osm, true)));
    for (i, (g, outdoor)) in inputs.enumerate() {
        let ns = namespace(g, i);
        let base = nodes.len();
        for n in g.nodes() {
            let mut n = n.clone();
            n.id = format!("{ns}:{}", n.id);
            if !seen_ids.insert(n.id.clone()) {
                return Err(Error::DuplicateId(n.id));
            }
            building.push((!outdoor).then(|| n.building.clone().unwrap_or_else(|| ns.clone())));
            is_outdoor.push(outdoor);
            nodes.push(n);
        }
        for e in g.edges() {
            edges.push(
                EdgeSpec::new(nodes[base + e.from].id.clone(), nodes[base + e.to].id.clone())
                    .with_direction(e.direction)
                    .with_length(e.length),
            );
        }
    }

    let mut warnings = Vec::new();
    let link = |edges: &mut Vec<EdgeSpec>, a: &NavNode, b: &NavNode| {
        edges.push(EdgeSpec::new(a.id.clone(), b.id.clone()));
        edges.push(EdgeSpec::new(b.id.clone(), a.id.clone()));
    };
    let horizontal = |a: &NavNode, b: &NavNode| a.position.xy().dist(b.position.xy());

    let outdoor: Vec<usize> = (0..nodes.len()).filter(|&i| is_outdoor[i]).collect();
    for i in 0..nodes.len() {
        if is_outdoor[i] || nodes[i].portal_kind != Some(PortalKind::Entrance) {
            continue;
        }
        let nearest = outdoor
            .iter()
            .map(|&j| (horizontal(&nodes[i], &nodes[j]), j))
            .filter(|&(d, _)| d <= cfg.entrance_snap)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match nearest {
            Some((_, j)) => link(&mut edges, &nodes[i], &nodes[j]),
            None if !outdoor.is_empty() => warnings.push(format!(
                "entrance {} has no outdoor node within {} m",
                nodes[i].id, cfg.entrance_snap
            )),
            None => {}
        }
    }

    // Stacked portals, keyed by (building, kind, floor).
    let mut stacks: BTreeMap<(&str, PortalKind, i32), Vec<usize>> = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if let (Some(b), Some(k)) = (&building[i], n.portal_kind) {
            if n.kind == NodeKind::Portal && k.is_vertical() {
                stacks.entry((b.as_str(), k, n.floor)).or_default().push(i);
            }
        }
    }
    let mut stacked = Vec::new();
    for (&(b, k, floor), lower) in &stacks {
        let Some(upper) = stacks.get(&(b, k, floor + 1)) else { continue };
        for &i in lower {
            let nearest = upper
                .iter()
                .map(|&j| (horizontal(&nodes[i], &nodes[j]), j))
                .filter(|&(d, _)| d < cfg.portal_stack_radius)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, j)) = nearest {
                stacked.push((i, j));
            }
        }
    }
    for (i, j) in stacked {
        link(&mut edges, &nodes[i], &nodes[j]);
    }

    let mut meta = GraphMeta::named("stitched");
    meta.crs_origin = osm.meta().crs_origin.or_else(|| graphs.iter().find_map(|g| g.meta().crs_origin));
    if let Some(g) = graphs.first() {
        meta.floor_height = g.meta().floor_height;
    }
    for g in graphs.iter().chain(core::iter::once(osm)) {
        for s in &g.meta().sources {
            if !meta.sources.contains(s) {
                meta.sources.push(s.clone());
            }
        }
    }
    let graph = NavGraph::new(meta, nodes, edges)?;

    let mut comps = graph.weak_components();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a.iter().min().cmp(&b.iter().min())));
    let orphans: Vec<Vec<String>> = comps
        .iter()
        .skip(1)
        .map(|c| {
            let mut ids: Vec<String> = c.iter().map(|&v| graph.node(v).id.clone()).collect();
            ids.sort();
            ids
        })
        .collect();
    for o in &orphans {
        warnings.push(format!("orphan component of {} nodes containing {}", o.len(), o[0]));
    }
    Ok(Stitched { graph, orphans, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::math::Point3;

    /// A corridor a-b with a lift at b and, on floor 0, an entrance at a.
    fn floor(name: &str, floor: i32, x0: f64, entrance: bool) -> NavGraph {
        let z = 4.0 * floor as f64;
        let mut b = GraphBuilder::new();
        let a = if entrance {
            b.push_node(NavNode::portal("a", Point3::new(x0, 0.0, z), floor, PortalKind::Entrance))
        } else {
            b.push_node(NavNode::intersection("a", Point3::new(x0, 0.0, z), floor))
        };
        let m = b.push_node(NavNode::intersection("m", Point3::new(x0 + 10.0, 0.0, z), floor));
        let l = b.push_node(NavNode::portal("l", Point3::new(x0 + 10.0, 2.0, z), floor, PortalKind::Lift).with_building("hq"));
        b.connect(a, m);
        b.connect(m, l);
        b.build(GraphMeta::named(name)).unwrap()
    }

    fn street() -> NavGraph {
        let mut b = GraphBuilder::new();
        let p = b.push_node(NavNode::intersection("osm/n1", Point3::new(-5.0, -5.0, 0.0), 0));
        let q = b.push_node(NavNode::intersection("osm/n2", Point3::new(100.0, -5.0, 0.0), 0));
        b.connect(p, q);
        b.build(GraphMeta::named("osm")).unwrap()
    }

    #[test]
    fn lift_column_joins_floors() {
        let s = stitch(&[floor("hq/f0", 0, 0.0, true), floor("hq/f1", 1, 0.5, false)], &street(), &StitchConfig::default()).unwrap();
        assert!(s.is_connected(), "{:?}", s.warnings);
        let g = &s.graph;
        let lo = g.index_of("hq/f0:l").unwrap();
        let hi = g.index_of("hq/f1:l").unwrap();
        let e = g.find_edge(lo, hi).expect("stacked lift edge");
        assert!((e.length - (0.25f64 + 16.0).sqrt()).abs() < 1e-9);
        assert!(g.find_edge(g.index_of("hq/f0:a").unwrap(), g.index_of("osm:osm/n1").unwrap()).is_some());
    }

    #[test]
    fn building_without_entrance_is_an_orphan() {
        let s = stitch(&[floor("hq/f0", 0, 0.0, false)], &street(), &StitchConfig::default()).unwrap();
        assert!(!s.is_connected());
        assert_eq!(s.orphans.len(), 1);
        assert!(!s.warnings.is_empty());
    }

    #[test]
    fn empty_osm_is_plain_union() {
        let a = floor("a", 0, 0.0, true);
        let b = floor("b", 0, 50.0, true);
        let s = stitch(&[a.clone(), b.clone()], &NavGraph::empty(GraphMeta::default()), &StitchConfig::default()).unwrap();
        assert_eq!(s.graph.node_count(), a.node_count() + b.node_count());
        assert_eq!(s.graph.edge_count(), a.edge_count() + b.edge_count());
    }

    #[test]
    fn entrance_out_of_reach_stays_unlinked() {
        let cfg = StitchConfig {
            entrance_snap: 2.0,
            ..StitchConfig::default()
        };
        let s = stitch(&[floor("hq/f0", 0, 0.0, true)], &street(), &cfg).unwrap();
        assert!(!s.is_connected());
        assert!(s.warnings.iter().any(|w| w.contains("entrance")));
    }

    #[test]
    fn far_or_mismatched_portals_do_not_stack() {
        let s = stitch(&[floor("hq/f0", 0, 0.0, true), floor("hq/f1", 1, 5.0, false)], &street(), &StitchConfig::default()).unwrap();
        assert_eq!(s.orphans.len(), 1);
        // Floors two apart are not adjacent.
        let s = stitch(&[floor("hq/f0", 0, 0.0, true), floor("hq/f2", 2, 0.0, false)], &street(), &StitchConfig::default()).unwrap();
        assert_eq!(s.orphans.len(), 1);
    }

    #[test]
    fn duplicate_namespace_is_rejected() {
        let a = floor("same", 0, 0.0, true);
        let err = stitch(&[a.clone(), a], &street(), &StitchConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "same:a"));
    }

    #[test]
    fn grouping_does_not_change_the_result_shape() {
        let (a, b, c) = (floor("a", 0, 0.0, true), floor("b", 0, 30.0, true), floor("c", 0, 60.0, true));
        let empty = NavGraph::empty(GraphMeta::default());
        let cfg = StitchConfig::default();
        let flat = stitch(&[a.clone(), b.clone(), c.clone()], &street(), &cfg).unwrap().graph;
        let ab = stitch(&[a, b], &empty, &cfg).unwrap().graph.with_meta(GraphMeta::named("ab"));
        let nested = stitch(&[ab, c], &street(), &cfg).unwrap().graph;
        assert_eq!(flat.node_count(), nested.node_count());
        assert_eq!(flat.edge_count(), nested.edge_count());
        let shape = |g: &NavGraph| {
            let mut v: Vec<_> = g
                .edges()
                .iter()
                .map(|e| {
                    let (p, q) = (g.node(e.from).position, g.node(e.to).position);
                    ((p.x * 1e6) as i64, (p.y * 1e6) as i64, (q.x * 1e6) as i64, (q.y * 1e6) as i64, e.direction.index())
                })
                .collect();
            v.sort();
            v
        };
        assert_eq!(shape(&flat), shape(&nested));
    }
}
