//! Graph JSON:
//!
//! ```json
//! { "meta": {"name": "hq/f0", "floor_height": 4.0},
//!   "nodes": [{"id": "a", "kind": "intersection", "pos": [0, 0, 0], "floor": 0}],
//!   "edges": [{"from": "a", "to": "b", "dir": 0, "len": 6.0}] }
//! ```
//!
//! Unknown fields are rejected. `dir` and `len` may be omitted on input and
//! are then derived from node positions; output always carries both.

use std::path::Path;

use serde::{Deserialize, Serialize};
use waysign_core::graph::{EdgeSpec, DEFAULT_FLOOR_HEIGHT};
use waysign_core::math::{Point2, Point3};
use waysign_core::{DirectionCategory, GraphMeta, NavGraph, NavNode, NodeKind, PortalKind};

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    #[serde(default)]
    pub meta: MetaFile,
    #[serde(default)]
    pub nodes: Vec<NodeFile>,
    #[serde(default)]
    pub edges: Vec<EdgeFile>,
}

fn default_floor_height() -> f64 {
    DEFAULT_FLOOR_HEIGHT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaFile {
    #[serde(default)]
    pub name: String,
    /// `[lon, lat]` of the metric frame origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crs_origin: Option<[f64; 2]>,
    #[serde(default = "default_floor_height")]
    pub floor_height: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exterior: Option<Vec<[f64; 2]>>,
}

impl Default for MetaFile {
    fn default() -> Self {
        Self::from(&GraphMeta::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub id: String,
    pub kind: String,
    pub pos: [f64; 3],
    #[serde(default)]
    pub floor: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub building: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portal_kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len: Option<f64>,
}

impl From<&GraphMeta> for MetaFile {
    fn from(m: &GraphMeta) -> Self {
        Self {
            name: m.name.clone(),
            crs_origin: m.crs_origin.map(|(a, b)| [a, b]),
            floor_height: m.floor_height,
            sources: m.sources.clone(),
            exterior: m.exterior.as_ref().map(|r| r.iter().map(|p| [p.x, p.y]).collect()),
        }
    }
}

impl From<&MetaFile> for GraphMeta {
    fn from(m: &MetaFile) -> Self {
        Self {
            name: m.name.clone(),
            crs_origin: m.crs_origin.map(|[a, b]| (a, b)),
            floor_height: m.floor_height,
            sources: m.sources.clone(),
            exterior: m.exterior.as_ref().map(|r| r.iter().map(|&[x, y]| Point2::new(x, y)).collect()),
        }
    }
}

impl From<&NavGraph> for GraphFile {
    fn from(g: &NavGraph) -> Self {
        Self {
            meta: MetaFile::from(g.meta()),
            nodes: g
                .nodes()
                .iter()
                .map(|n| NodeFile {
                    id: n.id.clone(),
                    kind: n.kind.as_str().to_owned(),
                    pos: [n.position.x, n.position.y, n.position.z],
                    floor: n.floor,
                    building: n.building.clone(),
                    label: n.label.clone(),
                    portal_kind: n.portal_kind.map(|k| k.as_str().to_owned()),
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeFile {
                    from: g.node(e.from).id.clone(),
                    to: g.node(e.to).id.clone(),
                    dir: Some(e.direction.index() as u8),
                    len: Some(e.length),
                })
                .collect(),
        }
    }
}

impl GraphFile {
    /// Validates into a graph; errors name the offending node or edge.
    pub fn to_graph(&self) -> Result<NavGraph> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let ctx = || format!("nodes[{i}] ({})", n.id);
            let kind = NodeKind::parse(&n.kind).ok_or_else(|| Error::format(ctx(), format!("unknown kind `{}`", n.kind)))?;
            let portal_kind = match &n.portal_kind {
                Some(k) => Some(PortalKind::parse(k).ok_or_else(|| Error::format(ctx(), format!("unknown portal_kind `{k}`")))?),
                None => None,
            };
            nodes.push(NavNode {
                id: n.id.clone(),
                kind,
                position: Point3::new(n.pos[0], n.pos[1], n.pos[2]),
                floor: n.floor,
                building: n.building.clone(),
                label: n.label.clone(),
                portal_kind,
            });
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let mut spec = EdgeSpec::new(e.from.clone(), e.to.clone());
            if let Some(d) = e.dir {
                let d = DirectionCategory::new(d).map_err(|m| Error::format(format!("edges[{i}] ({} -> {})", e.from, e.to), m))?;
                spec = spec.with_direction(d);
            }
            if let Some(l) = e.len {
                spec = spec.with_length(l);
            }
            edges.push(spec);
        }
        Ok(NavGraph::new(GraphMeta::from(&self.meta), nodes, edges)?)
    }
}

pub fn graph_from_json(text: &str) -> Result<NavGraph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::format("graph json", e))?;
    file.to_graph()
}

/// Pretty-printed with a trailing newline; identical graphs give identical
/// bytes.
pub fn graph_to_json(g: &NavGraph) -> String {
    let mut s = serde_json::to_string_pretty(&GraphFile::from(g)).expect("graph serializes");
    s.push('\n');
    s
}

pub fn read_graph(path: &Path) -> Result<NavGraph> {
    graph_from_json(&error::read_to_string(path)?).map_err(|e| match e {
        Error::Format { context, message } => Error::format(format!("{}: {context}", path.display()), message),
        other => other,
    })
}

pub fn write_graph(path: &Path, g: &NavGraph) -> Result<()> {
    error::write(path, graph_to_json(g))
}
