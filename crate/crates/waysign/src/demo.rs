//! A small two-building site for trying the whole pipeline: floor masks and
//! sidecars for two floors of each building, plus a GeoJSON extract with the
//! building footprints and the footways between the entrances.
//!
//! Both buildings share one L-shaped plan. A lift sits in the corridor bend
//! on every floor and the street entrance is on the ground floor. The
//! footprints are the plan's outline under a known similarity per building,
//! so registration has a ground truth.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use waysign_core::extract::{AnnotationSidecar, FloorMask};
use waysign_core::geometry::{unproject_lonlat, SimilarityTransform2D};
use waysign_core::math::Point2;
use waysign_core::sim::floorplan::PlanBuilder;
use waysign_core::PortalKind;

use crate::error::{self, Result};
use crate::floorplan::{write_mask, write_sidecar, SidecarFile};

pub const ORIGIN: (f64, f64) = (8.5417, 47.3769);
pub const FLOORS: i32 = 2;
const W: usize = 140;
const H: usize = 120;
const SCALE: f64 = 0.1;
/// Outline of the plan in pixel-vertex coordinates.
const OUTLINE_PX: [(f64, f64); 6] = [(0.0, 0.0), (140.0, 0.0), (140.0, 120.0), (37.0, 120.0), (37.0, 70.0), (0.0, 70.0)];
const ENTRANCE_PX: (usize, usize) = (1, 13);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoBuilding {
    pub name: &'static str,
    /// Floor-plan meters to site meters around [`ORIGIN`].
    pub transform: SimilarityTransform2D,
}

pub fn buildings() -> [DemoBuilding; 2] {
    [
        DemoBuilding {
            name: "A",
            transform: SimilarityTransform2D {
                rotation: 20f64.to_radians(),
                scale: 1.05,
                tx: -45.0,
                ty: 8.0,
            },
        },
        DemoBuilding {
            name: "B",
            transform: SimilarityTransform2D {
                rotation: -65f64.to_radians(),
                scale: 0.95,
                tx: 30.0,
                ty: 25.0,
            },
        },
    ]
}

pub fn floor_plan(building: &str, floor: i32) -> Result<(FloorMask, AnnotationSidecar)> {
    let mut b = PlanBuilder::new(W, H, SCALE, floor)
        .carve(3, 3, 137, 23)
        .carve(117, 23, 137, 117)
        .carve(3, 26, 60, 67)
        .carve(40, 73, 114, 117)
        .label(&format!("Office {building}{floor}1"), 30, 45)
        .label(&format!("Lab {building}{floor}2"), 75, 95)
        .portal(PortalKind::Door, 30, 24)
        .portal(PortalKind::Door, 115, 95)
        .portal(PortalKind::Lift, 127, 10);
    if floor == 0 {
        b = b.portal(PortalKind::Entrance, ENTRANCE_PX.0, ENTRANCE_PX.1);
    }
    let (mask, mut sidecar) = b.build()?;
    sidecar.exterior_hint = Some(OUTLINE_PX.to_vec());
    Ok((mask, sidecar))
}

fn plan_point(px: (f64, f64)) -> Point2 {
    Point2::new(px.0 * SCALE, (H as f64 - px.1) * SCALE)
}

fn lonlat(p: Point2) -> Value {
    let (lon, lat) = unproject_lonlat(ORIGIN, p);
    json!([lon, lat])
}

/// The extract as a GeoJSON FeatureCollection.
pub fn geojson() -> Value {
    let [a, b] = buildings();
    let mut features = Vec::new();
    for bd in [a, b] {
        let mut ring: Vec<Value> = OUTLINE_PX.iter().map(|&p| lonlat(bd.transform.apply(plan_point(p)))).collect();
        ring.push(ring[0].clone());
        features.push(json!({
            "type": "Feature",
            "properties": {"building": "yes", "name": bd.name},
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        }));
    }
    // Footway nodes: one 4 m outside each entrance, a junction between them
    // and a side path to a service road.
    let door = |bd: &DemoBuilding| {
        let e = plan_point((ENTRANCE_PX.0 as f64, ENTRANCE_PX.1 as f64));
        bd.transform.apply(Point2::new(e.x - 4.0, e.y))
    };
    let (na, nb) = (door(&a), door(&b));
    let junction = Point2::new((na.x + nb.x) / 2.0, (na.y + nb.y) / 2.0 - 12.0);
    let side = Point2::new(junction.x + 5.0, junction.y - 20.0);
    let road = Point2::new(side.x + 25.0, side.y);
    let way = |id: &str, highway: &str, nodes: &[(i64, Point2)]| {
        json!({
            "type": "Feature",
            "id": id,
            "properties": {"highway": highway, "nodes": nodes.iter().map(|n| n.0).collect::<Vec<_>>()},
            "geometry": {"type": "LineString", "coordinates": nodes.iter().map(|n| lonlat(n.1)).collect::<Vec<_>>()},
        })
    };
    features.push(way("w1", "footway", &[(1, na), (2, junction), (3, nb)]));
    features.push(way("w2", "footway", &[(2, junction), (4, side)]));
    features.push(way("w3", "service", &[(4, side), (5, road)]));
    json!({"type": "FeatureCollection", "features": features})
}

/// Writes `{B}_f{n}.png` / `{B}_f{n}.json` for every floor and `site.geojson`.
pub fn write_demo(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut out = Vec::new();
    for bd in buildings() {
        for floor in 0..FLOORS {
            let (mask, sidecar) = floor_plan(bd.name, floor)?;
            let png = dir.join(format!("{}_f{floor}.png", bd.name));
            write_mask(&png, &mask.free)?;
            let side = dir.join(format!("{}_f{floor}.json", bd.name));
            write_sidecar(&side, &SidecarFile::from_sidecar(&sidecar, SCALE, floor))?;
            out.extend([png, side]);
        }
    }
    let site = dir.join("site.geojson");
    error::write(&site, serde_json::to_string_pretty(&geojson()).expect("json") + "\n")?;
    out.push(site);
    Ok(out)
}
