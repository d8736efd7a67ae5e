use serde::{Deserialize, Serialize};

use super::geometry::{self, Aabb, Point};
use crate::error::{Error, Result};

pub const MAX_WALL_LOSS_DB: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    footprint: Vec<Point>,
    pub height_m: Option<f64>,
    pub wall_loss_override_db: Option<f64>,
    bbox: Aabb,
}

impl Building {
    pub fn new(
        footprint: Vec<Point>,
        height_m: Option<f64>,
        wall_loss_override_db: Option<f64>,
    ) -> Result<Self> {
        Self::validated(footprint, height_m, wall_loss_override_db, "building")
    }

    fn validated(
        footprint: Vec<Point>,
        height_m: Option<f64>,
        wall_loss_override_db: Option<f64>,
        location: &str,
    ) -> Result<Self> {
        if footprint.len() < 3 {
            return Err(Error::map(
                location,
                format!("polygon needs at least 3 vertices, got {}", footprint.len()),
            ));
        }
        if let Some(p) = footprint.iter().find(|p| !p.is_finite()) {
            return Err(Error::map(location, format!("non-finite vertex {p:?}")));
        }
        if geometry::signed_area(&footprint).abs() <= geometry::EPS {
            return Err(Error::map(location, "polygon has zero area"));
        }
        if geometry::is_self_intersecting(&footprint) {
            return Err(Error::map(location, "polygon is self-intersecting"));
        }
        if let Some(loss) = wall_loss_override_db {
            check_wall_loss(loss, location)?;
        }
        let bbox = Aabb::from_points(&footprint);
        Ok(Building {
            footprint,
            height_m,
            wall_loss_override_db,
            bbox,
        })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            None,
            None,
        )
    }

    pub fn footprint(&self) -> &[Point] {
        &self.footprint
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.footprint).abs()
    }

    pub fn centroid(&self) -> Point {
        geometry::centroid(&self.footprint)
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        self.bbox.contains(p) && geometry::inside_closed(p, &self.footprint)
    }

    pub fn contains_strict(&self, p: Point) -> bool {
        self.bbox.contains(p) && geometry::strictly_inside(p, &self.footprint)
    }

    /// Number of outer-wall transitions made by the segment `a -> b`.
    ///
    /// The segment is cut at every parameter where it meets an edge and each
    /// piece is classified by its midpoint, so grazing contacts (touching a
    /// vertex, running along a wall) never count.
    pub fn crossings(&self, a: Point, b: Point) -> usize {
        if !self.bbox.overlaps_segment(a, b) {
            return 0;
        }
        let mut params = Vec::with_capacity(8);
        geometry::segment_ring_params(a, b, &self.footprint, &mut params);
        if params.is_empty() {
            return 0;
        }
        params.push(0.0);
        params.push(1.0);
        params.sort_by(f64::total_cmp);
        params.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);

        let mut count = 0;
        let mut prev: Option<bool> = None;
        for w in params.windows(2) {
            if w[1] - w[0] <= 1e-12 {
                continue;
            }
            let mid = a.lerp(b, 0.5 * (w[0] + w[1]));
            let inside = geometry::strictly_inside(mid, &self.footprint);
            if let Some(p) = prev {
                if p != inside {
                    count += 1;
                }
            }
            prev = Some(inside);
        }
        count
    }
}

fn check_wall_loss(loss: f64, location: &str) -> Result<()> {
    if !(0.0..=MAX_WALL_LOSS_DB).contains(&loss) {
        return Err(Error::map(
            location,
            format!("wall loss {loss} dB outside [0, {MAX_WALL_LOSS_DB}]"),
        ));
    }
    Ok(())
}

/// Result of a wall-crossing query: one loss entry per crossed wall.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WallCrossings {
    pub losses_db: Vec<f64>,
}

impl WallCrossings {
    pub fn count(&self) -> usize {
        self.losses_db.len()
    }

    pub fn total_db(&self) -> f64 {
        self.losses_db.iter().sum()
    }
}

/// Immutable urban layout in plan view. The origin is the lower-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct UrbanMap {
    width_m: f64,
    height_m: f64,
    default_wall_loss_db: f64,
    buildings: Vec<Building>,
}

impl UrbanMap {
    pub fn new(
        width_m: f64,
        height_m: f64,
        default_wall_loss_db: f64,
        buildings: Vec<Building>,
    ) -> Result<Self> {
        if !(width_m > 0.0 && height_m > 0.0 && width_m.is_finite() && height_m.is_finite()) {
            return Err(Error::map(
                "bounds",
                format!("bounds must be positive, got {width_m} x {height_m}"),
            ));
        }
        check_wall_loss(default_wall_loss_db, "default_wall_loss_db")?;
        let bounds = Aabb {
            min: Point::new(0.0, 0.0),
            max: Point::new(width_m, height_m),
        };
        for (i, b) in buildings.iter().enumerate() {
            if let Some(v) = b.footprint.iter().find(|v| !bounds.contains(**v)) {
                return Err(Error::map(
                    format!("buildings[{i}]"),
                    format!("vertex ({}, {}) outside map bounds", v.x, v.y),
                ));
            }
        }
        Ok(UrbanMap {
            width_m,
            height_m,
            default_wall_loss_db,
            buildings,
        })
    }

    pub fn empty(width_m: f64, height_m: f64) -> Result<Self> {
        Self::new(width_m, height_m, 0.0, Vec::new())
    }

    pub fn width_m(&self) -> f64 {
        self.width_m
    }

    pub fn height_m(&self) -> f64 {
        self.height_m
    }

    pub fn area_m2(&self) -> f64 {
        self.width_m * self.height_m
    }

    pub fn center(&self) -> Point {
        Point::new(self.width_m / 2.0, self.height_m / 2.0)
    }

    pub fn default_wall_loss_db(&self) -> f64 {
        self.default_wall_loss_db
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }

    /// Copy of this map with a different default wall loss.
    pub fn with_wall_loss(&self, default_wall_loss_db: f64) -> Result<Self> {
        check_wall_loss(default_wall_loss_db, "default_wall_loss_db")?;
        let mut m = self.clone();
        m.default_wall_loss_db = default_wall_loss_db;
        Ok(m)
    }

    pub fn wall_loss_of(&self, building: &Building) -> f64 {
        building
            .wall_loss_override_db
            .unwrap_or(self.default_wall_loss_db)
    }

    /// Walls crossed by the open segment between `a` and `b`.
    ///
    /// Points outside the bounds are accepted; the area outside the map is
    /// open ground.
    pub fn wall_crossings(&self, a: Point, b: Point) -> WallCrossings {
        let mut losses_db = Vec::new();
        for building in &self.buildings {
            let n = building.crossings(a, b);
            let loss = self.wall_loss_of(building);
            losses_db.extend(std::iter::repeat_n(loss, n));
        }
        WallCrossings { losses_db }
    }

    /// Crossing count and summed loss without allocating the per-wall list.
    pub fn wall_crossing_total(&self, a: Point, b: Point) -> (usize, f64) {
        let mut count = 0;
        let mut loss = 0.0;
        for building in &self.buildings {
            let n = building.crossings(a, b);
            if n > 0 {
                count += n;
                loss += n as f64 * self.wall_loss_of(building);
            }
        }
        (count, loss)
    }

    /// True iff `p` lies in no building's closed footprint.
    pub fn is_outdoor(&self, p: Point) -> bool {
        !self.buildings.iter().any(|b| b.contains_closed(p))
    }

    pub fn built_area_m2(&self) -> f64 {
        self.buildings.iter().map(Building::area).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MapFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text).map_err(|e| {
            Error::map(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?;
        file.into_map()
    }
}

/// Parses and validates a map file.
pub fn load_map(text: &str) -> Result<UrbanMap> {
    UrbanMap::from_json(text)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    bounds: BoundsFile,
    default_wall_loss_db: f64,
    #[serde(default)]
    buildings: Vec<BuildingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsFile {
    width_m: f64,
    height_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingFile {
    vertices: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wall_loss_db: Option<f64>,
}

impl From<&UrbanMap> for MapFile {
    fn from(m: &UrbanMap) -> Self {
        MapFile {
            bounds: BoundsFile {
                width_m: m.width_m,
                height_m: m.height_m,
            },
            default_wall_loss_db: m.default_wall_loss_db,
            buildings: m
                .buildings
                .iter()
                .map(|b| BuildingFile {
                    vertices: b.footprint.iter().map(|p| [p.x, p.y]).collect(),
                    height_m: b.height_m,
                    wall_loss_db: b.wall_loss_override_db,
                })
                .collect(),
        }
    }
}

impl MapFile {
    fn into_map(self) -> Result<UrbanMap> {
        let buildings = self
            .buildings
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                Building::validated(
                    b.vertices.iter().map(|v| Point::new(v[0], v[1])).collect(),
                    b.height_m,
                    b.wall_loss_db,
                    &format!("buildings[{i}]"),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        UrbanMap::new(
            self.bounds.width_m,
            self.bounds.height_m,
            self.default_wall_loss_db,
            buildings,
        )
    }
}
