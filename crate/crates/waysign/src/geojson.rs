//! OSM extracts as GeoJSON, pre-converted from OSM XML by any standard tool.
//!
//! Converter contract:
//! - `LineString` features with a `highway` property are ways. Their id is
//!   the feature `id` or `properties.id`, else `way{index}`. Shared OSM
//!   nodes are recognized by `properties.nodes` (one id per coordinate) when
//!   present, otherwise by bit-identical coordinates.
//! - `Polygon` features with both `building` and `name` properties are
//!   footprints, keyed by name. The closing vertex may be repeated.
//! - Everything else is ignored.
//!
//! Coordinates are `[lon, lat]`. Footprints are projected around an origin,
//! by default the centre of the extract's bounding box.

use std::collections::{BTreeMap, HashMap};

use serde_json::Value;
use waysign_core::geometry::{project_lonlat, Polygon2D};
use waysign_core::math::Point2;
use waysign_core::osm::{OsmExtract, OsmWay};

use crate::error::{Error, Result};

fn coord(v: &Value, ctx: &str) -> Result<(f64, f64)> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([lon, lat, ..]) => match (lon.as_f64(), lat.as_f64()) {
            (Some(lon), Some(lat)) => Ok((lon, lat)),
            _ => Err(Error::format(ctx, "coordinates must be numbers")),
        },
        _ => Err(Error::format(ctx, "expected [lon, lat]")),
    }
}

fn coords(v: &Value, ctx: &str) -> Result<Vec<(f64, f64)>> {
    v.as_array()
        .ok_or_else(|| Error::format(ctx, "expected an array of positions"))?
        .iter()
        .map(|c| coord(c, ctx))
        .collect()
}

fn tag_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Parses the extract; returns it with the origin used for footprints.
pub fn osm_from_geojson(text: &str, origin: Option<(f64, f64)>) -> Result<(OsmExtract, (f64, f64))> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::format("geojson", e))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::format("geojson", "expected a FeatureCollection"));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format("geojson", "missing features"))?;

    struct RawWay {
        id: String,
        pts: Vec<(f64, f64)>,
        ids: Option<Vec<i64>>,
        tags: BTreeMap<String, String>,
    }
    let mut raw_ways = Vec::new();
    let mut raw_footprints: Vec<(String, Vec<Vec<(f64, f64)>>)> = Vec::new();
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    let mut grow = |p: (f64, f64)| {
        lo = (lo.0.min(p.0), lo.1.min(p.1));
        hi = (hi.0.max(p.0), hi.1.max(p.1));
    };

    for (i, f) in features.iter().enumerate() {
        let ctx = format!("features[{i}]");
        let props = f.get("properties").and_then(Value::as_object);
        let prop = |k: &str| props.and_then(|p| p.get(k));
        let Some(geom) = f.get("geometry").filter(|g| !g.is_null()) else { continue };
        let gtype = geom.get("type").and_then(Value::as_str).unwrap_or("");
        let c = geom.get("coordinates").ok_or_else(|| Error::format(&ctx, "geometry without coordinates"))?;
        match gtype {
            "LineString" if prop("highway").is_some() => {
                let pts = coords(c, &ctx)?;
                pts.iter().for_each(|&p| grow(p));
                let ids = match prop("nodes") {
                    Some(Value::Array(a)) => {
                        let ids: Option<Vec<i64>> = a.iter().map(Value::as_i64).collect();
                        match ids {
                            Some(ids) if ids.len() == pts.len() => Some(ids),
                            _ => return Err(Error::format(&ctx, "properties.nodes must hold one integer per coordinate")),
                        }
                    }
                    _ => None,
                };
                let id = f
                    .get("id")
                    .and_then(tag_string)
                    .or_else(|| prop("id").and_then(tag_string))
                    .unwrap_or_else(|| format!("way{i}"));
                let tags = props
                    .map(|p| p.iter().filter(|(k, _)| *k != "nodes").filter_map(|(k, v)| Some((k.clone(), tag_string(v)?))).collect())
                    .unwrap_or_default();
                raw_ways.push(RawWay { id, pts, ids, tags });
            }
            "Polygon" if prop("building").is_some() => {
                let Some(name) = prop("name").and_then(tag_string) else { continue };
                let rings = c
                    .as_array()
                    .ok_or_else(|| Error::format(&ctx, "polygon coordinates must be an array of rings"))?
                    .iter()
                    .map(|r| coords(r, &ctx))
                    .collect::<Result<Vec<_>>>()?;
                rings.iter().flatten().for_each(|&p| grow(p));
                raw_footprints.push((name, rings));
            }
            _ => {}
        }
    }

    let origin = origin.unwrap_or(if lo.0.is_finite() {
        (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1))
    } else {
        (0.0, 0.0)
    });

    let mut extract = OsmExtract::default();
    let mut by_coord: HashMap<(u64, u64), i64> = HashMap::new();
    let mut next_synthetic = -1i64;
    for w in raw_ways {
        let mut refs = Vec::with_capacity(w.pts.len());
        for (k, &p) in w.pts.iter().enumerate() {
            let id = match &w.ids {
                Some(ids) => ids[k],
                None => *by_coord.entry((p.0.to_bits(), p.1.to_bits())).or_insert_with(|| {
                    next_synthetic -= 1;
                    next_synthetic + 1
                }),
            };
            extract.nodes.insert(id, p);
            refs.push(id);
        }
        extract.ways.push(OsmWay {
            id: w.id,
            nodes: refs,
            tags: w.tags,
        });
    }
    for (name, rings) in raw_footprints {
        let ctx = format!("footprint {name}");
        let mut projected = Vec::with_capacity(rings.len());
        for r in rings {
            let mut ring: Vec<Point2> = r.iter().map(|&p| project_lonlat(origin, p)).collect::<std::result::Result<_, _>>()?;
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            projected.push(ring);
        }
        if projected.is_empty() {
            return Err(Error::format(ctx, "polygon without rings"));
        }
        let outer = projected.remove(0);
        let poly = Polygon2D::with_holes(outer, projected).map_err(|e| Error::format(&ctx, e))?;
        extract.footprints.insert(name, poly);
    }
    Ok((extract, origin))
}
