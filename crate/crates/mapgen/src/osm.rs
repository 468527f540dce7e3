//! OpenStreetMap XML ingestion.

use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use crate::error::{MapgenError, Result};

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkableWay {
    pub points: Vec<LatLon>,
    /// Stamp width in cells.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoFeatures {
    pub bbox: BBox,
    pub walkable: Vec<WalkableWay>,
    /// Closed rings, first point repeated last.
    pub obstacle_rings: Vec<Vec<LatLon>>,
    /// Open obstacle lines (barriers, unclosed obstacle ways).
    pub obstacle_lines: Vec<Vec<LatLon>>,
}

/// Tag rule table. Loadable from TOML so the tag lists can be edited without
/// recompiling.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagRules {
    /// `highway` value → stamp width in cells.
    pub highway_widths: BTreeMap<String, u32>,
    /// Keys whose presence (any value) marks an obstacle, e.g. `building`.
    pub obstacle_keys: Vec<String>,
    /// `key=value` pairs that mark an obstacle.
    pub obstacle_tags: Vec<(String, String)>,
    /// Keys whose ways are always stamped as lines, e.g. `barrier`.
    pub line_keys: Vec<String>,
}

impl Default for TagRules {
    fn default() -> Self {
        let narrow = ["footway", "path", "steps", "cycleway", "track", "service"];
        let wide = ["pedestrian", "living_street", "residential", "unclassified", "tertiary", "secondary", "primary"];
        let highway_widths = narrow
            .iter()
            .map(|k| (k.to_string(), 3))
            .chain(wide.iter().map(|k| (k.to_string(), 5)))
            .collect();
        let pair = |k: &str, v: &str| (k.to_string(), v.to_string());
        Self {
            highway_widths,
            obstacle_keys: vec!["building".into(), "barrier".into()],
            obstacle_tags: vec![
                pair("natural", "water"),
                pair("natural", "wood"),
                pair("landuse", "industrial"),
                pair("landuse", "construction"),
            ],
            line_keys: vec!["barrier".into()],
        }
    }
}

impl TagRules {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| MapgenError::InvalidConfig(e.to_string()))
    }

    fn is_obstacle(&self, tags: &HashMap<&str, &str>) -> bool {
        self.obstacle_keys.iter().any(|k| tags.contains_key(k.as_str()))
            || self.obstacle_tags.iter().any(|(k, v)| tags.get(k.as_str()) == Some(&v.as_str()))
    }
}

fn attr_f64(node: roxmltree::Node, name: &str) -> Result<f64> {
    node.attribute(name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| MapgenError::MalformedXml(format!("<{}> lacks numeric '{name}'", node.tag_name().name())))
}

fn attr_i64(node: roxmltree::Node, name: &str) -> Result<i64> {
    node.attribute(name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| MapgenError::MalformedXml(format!("<{}> lacks integer '{name}'", node.tag_name().name())))
}

/// Parses an OSM XML export. The bounding box comes from `<bounds>` when
/// present, otherwise from the extent of all nodes. Relations are ignored.
pub fn parse_osm(document: &str, rules: &TagRules) -> Result<GeoFeatures> {
    let doc = roxmltree::Document::parse(document).map_err(|e| MapgenError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "osm" {
        return Err(MapgenError::MalformedXml(format!("root element <{}>", root.tag_name().name())));
    }

    let mut nodes = HashMap::new();
    let mut bounds = None;
    for el in root.children().filter(|n| n.is_element()) {
        match el.tag_name().name() {
            "node" => {
                nodes.insert(attr_i64(el, "id")?, LatLon { lat: attr_f64(el, "lat")?, lon: attr_f64(el, "lon")? });
            }
            "bounds" => {
                bounds = Some(BBox {
                    min_lat: attr_f64(el, "minlat")?,
                    min_lon: attr_f64(el, "minlon")?,
                    max_lat: attr_f64(el, "maxlat")?,
                    max_lon: attr_f64(el, "maxlon")?,
                })
            }
            _ => {}
        }
    }

    let mut features = GeoFeatures {
        bbox: bounds.unwrap_or_else(|| extent(nodes.values())),
        walkable: Vec::new(),
        obstacle_rings: Vec::new(),
        obstacle_lines: Vec::new(),
    };
    for way in root.children().filter(|n| n.has_tag_name("way")) {
        let id = attr_i64(way, "id")?;
        let tags: HashMap<&str, &str> = way
            .children()
            .filter(|n| n.has_tag_name("tag"))
            .filter_map(|t| Some((t.attribute("k")?, t.attribute("v")?)))
            .collect();
        let width = tags.get("highway").and_then(|h| rules.highway_widths.get(*h)).copied();
        let obstacle = rules.is_obstacle(&tags);
        if width.is_none() && !obstacle {
            continue;
        }
        let points = way
            .children()
            .filter(|n| n.has_tag_name("nd"))
            .map(|nd| {
                let r = attr_i64(nd, "ref")?;
                nodes.get(&r).copied().ok_or(MapgenError::MissingNodeRef { way: id, node: r })
            })
            .collect::<Result<Vec<_>>>()?;
        if points.len() < 2 {
            continue;
        }
        if obstacle {
            let closed = points.len() >= 4 && points.first() == points.last();
            let line = rules.line_keys.iter().any(|k| tags.contains_key(k.as_str()));
            if closed && !line {
                features.obstacle_rings.push(points);
            } else {
                features.obstacle_lines.push(points);
            }
        } else if let Some(width) = width {
            features.walkable.push(WalkableWay { points, width });
        }
    }
    Ok(features)
}

fn extent<'a>(points: impl Iterator<Item = &'a LatLon>) -> BBox {
    let mut b = BBox { min_lat: f64::INFINITY, min_lon: f64::INFINITY, max_lat: f64::NEG_INFINITY, max_lon: f64::NEG_INFINITY };
    for p in points {
        b.min_lat = b.min_lat.min(p.lat);
        b.max_lat = b.max_lat.max(p.lat);
        b.min_lon = b.min_lon.min(p.lon);
        b.max_lon = b.max_lon.max(p.lon);
    }
    if !b.min_lat.is_finite() {
        b = BBox { min_lat: 0.0, min_lon: 0.0, max_lat: 0.0, max_lon: 0.0 };
    }
    b
}
