//! Readers for footprints (GeoJSON, WKT), facade sidecars and temporal CSV data.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::encoding::TemporalSeries;
use crate::error::{LensError, Result};
use crate::geometry::{FootprintPolygon, LengthUnit, Point};

/// Mean Earth radius used by the local projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// How footprint coordinates are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Longitude/latitude when every coordinate fits the WGS-84 range and
    /// the extent is below one degree; meters otherwise.
    #[default]
    Auto,
    Wgs84,
    Projected,
}

impl FromStr for Projection {
    type Err = LensError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Projection::Auto),
            "wgs84" => Ok(Projection::Wgs84),
            "projected" => Ok(Projection::Projected),
            _ => Err(LensError::InvalidInput(format!(
                "projection '{s}' is not auto, wgs84 or projected"
            ))),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| LensError::io(path.display().to_string(), e))
}

fn parse_err(source_name: &str, line: usize, message: impl Into<String>) -> LensError {
    LensError::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn json_err(source_name: &str, e: serde_json::Error) -> LensError {
    parse_err(source_name, e.line(), e.to_string())
}

fn ring_from_json(source_name: &str, coords: &Value) -> Result<Vec<Point>> {
    let rings = coords.as_array().ok_or_else(|| {
        parse_err(
            source_name,
            0,
            "polygon coordinates must be an array of rings",
        )
    })?;
    let exterior = rings
        .first()
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(source_name, 0, "polygon has no exterior ring"))?;
    if rings.len() > 1 {
        return Err(parse_err(
            source_name,
            0,
            "polygons with holes are not supported",
        ));
    }
    exterior
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let xy = p.as_array().filter(|a| a.len() >= 2);
            match xy.map(|a| (a[0].as_f64(), a[1].as_f64())) {
                Some((Some(x), Some(y))) => Ok(Point::new(x, y)),
                _ => Err(parse_err(
                    source_name,
                    0,
                    format!("position {i} is not a coordinate pair"),
                )),
            }
        })
        .collect()
}

fn geometry_ring(source_name: &str, g: &Value) -> Result<Vec<Point>> {
    match g.get("type").and_then(Value::as_str) {
        Some("Polygon") => ring_from_json(source_name, &g["coordinates"]),
        Some("MultiPolygon") => {
            let polys = g["coordinates"].as_array().ok_or_else(|| {
                parse_err(source_name, 0, "MultiPolygon coordinates must be an array")
            })?;
            if polys.len() != 1 {
                return Err(parse_err(
                    source_name,
                    0,
                    format!(
                        "MultiPolygon with {} parts; exactly one is supported",
                        polys.len()
                    ),
                ));
            }
            ring_from_json(source_name, &polys[0])
        }
        Some("Feature") => geometry_ring(source_name, &g["geometry"]),
        Some("FeatureCollection") => {
            let features = g["features"]
                .as_array()
                .ok_or_else(|| parse_err(source_name, 0, "FeatureCollection without features"))?;
            let polys: Vec<&Value> = features
                .iter()
                .filter(|f| {
                    matches!(
                        f["geometry"]["type"].as_str(),
                        Some("Polygon" | "MultiPolygon")
                    )
                })
                .collect();
            match polys[..] {
                [f] => geometry_ring(source_name, f),
                [] => Err(parse_err(source_name, 0, "no Polygon feature found")),
                _ => Err(parse_err(
                    source_name,
                    0,
                    format!(
                        "{} polygon features; exactly one footprint is expected",
                        polys.len()
                    ),
                )),
            }
        }
        Some(t) => Err(parse_err(
            source_name,
            0,
            format!("unsupported GeoJSON type '{t}'"),
        )),
        None => Err(parse_err(source_name, 0, "missing GeoJSON type")),
    }
}

/// Exterior ring of a GeoJSON Polygon, Feature or single-polygon FeatureCollection.
pub fn parse_geojson(text: &str, source_name: &str) -> Result<Vec<Point>> {
    let v: Value = serde_json::from_str(text).map_err(|e| json_err(source_name, e))?;
    geometry_ring(source_name, &v)
}

/// Exterior ring of a WKT `POLYGON ((x y, ...))`.
pub fn parse_wkt(text: &str, source_name: &str) -> Result<Vec<Point>> {
    let body = text.trim();
    let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;
    let upper = body.to_ascii_uppercase();
    let rest = upper
        .strip_prefix("POLYGON")
        .ok_or_else(|| parse_err(source_name, 1, "expected POLYGON"))?;
    let start = body.len() - rest.len();
    let inner = body[start..].trim();
    if inner.eq_ignore_ascii_case("EMPTY") {
        return Err(parse_err(source_name, 1, "empty polygon"));
    }
    let inner = inner
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| parse_err(source_name, line_of(text.len()), "unbalanced parentheses"))?
        .trim();
    let rings: Vec<&str> = inner
        .split(')')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if rings.len() != 1 {
        return Err(parse_err(
            source_name,
            1,
            "polygons with holes are not supported",
        ));
    }
    let ring = rings[0]
        .strip_prefix('(')
        .ok_or_else(|| parse_err(source_name, 1, "ring must start with '('"))?;
    let mut out = Vec::new();
    for pair in ring.split(',') {
        let nums: Vec<&str> = pair.split_whitespace().collect();
        let line = line_of(pair.trim_start().as_ptr() as usize - text.as_ptr() as usize);
        if nums.len() < 2 {
            return Err(parse_err(
                source_name,
                line,
                format!("'{}' is not a coordinate pair", pair.trim()),
            ));
        }
        let x = nums[0].parse::<f64>();
        let y = nums[1].parse::<f64>();
        match (x, y) {
            (Ok(x), Ok(y)) => out.push(Point::new(x, y)),
            _ => {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("bad number in '{}'", pair.trim()),
                ))
            }
        }
    }
    Ok(out)
}

/// Whether coordinates look like longitude/latitude degrees.
fn looks_geographic(ring: &[Point]) -> bool {
    let in_range = ring.iter().all(|p| p.x.abs() <= 180.0 && p.y.abs() <= 90.0);
    let (mut w, mut h) = (0.0f64, 0.0f64);
    for a in ring {
        for b in ring {
            w = w.max((a.x - b.x).abs());
            h = h.max((a.y - b.y).abs());
        }
    }
    in_range && w < 1.0 && h < 1.0
}

/// Local equirectangular projection around the mean vertex, in meters.
pub fn project_wgs84(ring: &[Point]) -> Vec<Point> {
    let n = ring.len().max(1) as f64;
    let lon0 = ring.iter().map(|p| p.x).sum::<f64>() / n;
    let lat0 = ring.iter().map(|p| p.y).sum::<f64>() / n;
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let c = lat0.to_radians().cos();
    ring.iter()
        .map(|p| Point::new((p.x - lon0) * k * c, (p.y - lat0) * k))
        .collect()
}

/// Facade ids per input edge from a sidecar: either an object
/// `{edge_index: facade_id}` or an array with one id per edge.
/// Edges not named keep the default `f{i}`.
pub fn parse_facades(text: &str, source_name: &str, edges: usize) -> Result<Vec<String>> {
    let v: Value = serde_json::from_str(text).map_err(|e| json_err(source_name, e))?;
    let mut ids: Vec<String> = (0..edges).map(|i| format!("f{i}")).collect();
    match &v {
        Value::Object(m) => {
            for (k, id) in m {
                let e: usize = k.trim().parse().map_err(|_| {
                    parse_err(source_name, 0, format!("key '{k}' is not an edge index"))
                })?;
                if e >= edges {
                    return Err(parse_err(
                        source_name,
                        0,
                        format!("edge {e} does not exist ({edges} edges)"),
                    ));
                }
                ids[e] = id
                    .as_str()
                    .ok_or_else(|| {
                        parse_err(
                            source_name,
                            0,
                            format!("facade id for edge {e} is not a string"),
                        )
                    })?
                    .to_string();
            }
        }
        Value::Array(a) => {
            if a.len() != edges {
                return Err(parse_err(
                    source_name,
                    0,
                    format!("{} facade ids for {edges} edges", a.len()),
                ));
            }
            for (e, id) in a.iter().enumerate() {
                ids[e] = id
                    .as_str()
                    .ok_or_else(|| {
                        parse_err(
                            source_name,
                            0,
                            format!("facade id for edge {e} is not a string"),
                        )
                    })?
                    .to_string();
            }
        }
        _ => {
            return Err(parse_err(
                source_name,
                0,
                "expected an object or array of facade ids",
            ))
        }
    }
    Ok(ids)
}

/// Reads a footprint file (GeoJSON or WKT, by content) with optional facade sidecar.
pub fn read_footprint(
    path: &Path,
    projection: Projection,
    facades: Option<&Path>,
) -> Result<FootprintPolygon> {
    let name = path.display().to_string();
    let text = read_text(path)?;
    let mut ring = if text.trim_start().starts_with('{') {
        parse_geojson(&text, &name)?
    } else {
        parse_wkt(&text, &name)?
    };
    if ring.len() >= 2 && ring.first() == ring.last() {
        ring.pop();
    }
    let geographic = match projection {
        Projection::Wgs84 => true,
        Projection::Projected => false,
        Projection::Auto => looks_geographic(&ring),
    };
    if geographic {
        ring = project_wgs84(&ring);
    }
    let ids = match facades {
        Some(p) => parse_facades(&read_text(p)?, &p.display().to_string(), ring.len())?,
        None => (0..ring.len()).map(|i| format!("f{i}")).collect(),
    };
    Ok(FootprintPolygon::with_facades(ring, ids)?.with_units(LengthUnit::Meters))
}

#[derive(Debug, Deserialize)]
struct Row {
    facade_id: String,
    time_index: usize,
    value: f64,
    #[serde(default)]
    time_label: Option<String>,
}

/// Temporal data from CSV with header `facade_id,time_index,value`
/// (an optional `time_label` column names the time steps).
///
/// Every facade must cover the same time indices 0..T without gaps.
pub fn parse_series_csv(
    text: &str,
    source_name: &str,
    cyclic: bool,
) -> Result<Vec<TemporalSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(source_name, 1, e.to_string()))?
        .clone();
    for required in ["facade_id", "time_index", "value"] {
        if !headers.iter().any(|h| h == required) {
            return Err(parse_err(
                source_name,
                1,
                format!("missing column '{required}'"),
            ));
        }
    }
    let mut table: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut labels: BTreeMap<usize, String> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(source_name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: Row = rec
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(source_name, line, e.to_string()))?;
        if !row.value.is_finite() {
            return Err(parse_err(source_name, line, "value is not finite"));
        }
        if row.facade_id.is_empty() {
            return Err(parse_err(source_name, line, "empty facade_id"));
        }
        if let Some(l) = row.time_label {
            if let Some(prev) = labels.get(&row.time_index) {
                if *prev != l {
                    return Err(parse_err(
                        source_name,
                        line,
                        format!("time {} labeled both '{prev}' and '{l}'", row.time_index),
                    ));
                }
            }
            labels.insert(row.time_index, l);
        }
        if !table.contains_key(&row.facade_id) {
            order.push(row.facade_id.clone());
        }
        let slot = table.entry(row.facade_id.clone()).or_default();
        if let Some((_, first)) = slot.get(&row.time_index) {
            return Err(parse_err(
                source_name,
                line,
                format!(
                    "duplicate entry for facade {} at time {} (first on line {first})",
                    row.facade_id, row.time_index
                ),
            ));
        }
        slot.insert(row.time_index, (row.value, line));
    }
    if table.is_empty() {
        return Err(parse_err(source_name, 1, "no data rows"));
    }
    let steps = table
        .values()
        .map(|m| m.keys().max().map_or(0, |k| k + 1))
        .max()
        .unwrap_or(0);
    let time_labels: Vec<String> = (0..steps)
        .map(|t| labels.get(&t).cloned().unwrap_or_else(|| format!("t{t}")))
        .collect();
    order
        .into_iter()
        .map(|f| {
            let m = &table[&f];
            if let Some(t) = (0..steps).find(|t| !m.contains_key(t)) {
                return Err(LensError::Binding(format!(
                    "facade {f} has no value at time {t}"
                )));
            }
            TemporalSeries::new(
                f.clone(),
                m.values().map(|v| v.0).collect(),
                time_labels.clone(),
                cyclic,
            )
        })
        .collect()
}

pub fn read_series_csv(path: &Path, cyclic: bool) -> Result<Vec<TemporalSeries>> {
    parse_series_csv(&read_text(path)?, &path.display().to_string(), cyclic)
}
