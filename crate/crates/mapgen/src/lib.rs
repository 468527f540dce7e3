//! Map generation: OpenStreetMap exports rasterized to grids, plus random,
//! maze and warehouse families.
//!
//! The OSM pipeline is [`parse_osm`] → [`rasterize`] → [`morph_clean`] →
//! [`tile`]; every stage is deterministic.

pub mod error;
pub mod morph;
pub mod osm;
pub mod raster;
pub mod synth;
pub mod tile;

pub use error::{MapgenError, Result};
pub use morph::morph_clean;
pub use osm::{parse_osm, BBox, GeoFeatures, LatLon, TagRules, WalkableWay};
pub use raster::{rasterize, RasterConfig};
pub use synth::{gen_maze, gen_random, gen_warehouse, WarehouseParams};
pub use tile::{manifest_csv, tile, tile_with_origin, MapTile};

use mapf_core::GridMap;

/// Runs the full OSM pipeline and names the tiles after `name`.
pub fn osm_to_tiles(document: &str, rules: &TagRules, config: &RasterConfig, name: &str) -> Result<Vec<MapTile>> {
    let features = parse_osm(document, rules)?;
    let proj = raster::Projection::new(&features, config.resolution)?;
    let mut map: GridMap = morph_clean(&rasterize(&features, config)?, config);
    map.name = name.to_string();
    let ts = config.tile_size;
    Ok(tile_with_origin(&map, config)?
        .into_iter()
        .map(|((r, c), map)| MapTile { map, bbox: Some(proj.bbox_of(r, c, r + ts, c + ts)) })
        .collect())
}

/// Environment variable naming a base URL that serves OSM XML for
/// `?bbox=min_lon,min_lat,max_lon,max_lat` queries.
pub const OSM_URL_VAR: &str = "MAPGEN_OSM_URL";

/// Builds the export URL for a bounding box from [`OSM_URL_VAR`].
pub fn export_url(bbox: &BBox) -> Option<String> {
    let base = std::env::var(OSM_URL_VAR).ok()?;
    Some(format!("{base}?bbox={},{},{},{}", bbox.min_lon, bbox.min_lat, bbox.max_lon, bbox.max_lat))
}
