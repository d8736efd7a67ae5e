//! Urban environment: maps, outdoor placement and plan-view blockage queries.

mod geometry;
mod manhattan;
mod map;
mod sampling;

pub use geometry::{Aabb, Point};
pub use manhattan::{generate_manhattan_map, ManhattanSpec};
pub use map::{load_map, Building, UrbanMap, WallCrossings, MAX_WALL_LOSS_DB};
pub use sampling::{sample_outdoor_points, sample_outdoor_points_with};

/// Free-function form of [`UrbanMap::wall_crossings`].
pub fn wall_crossings(a: Point, b: Point, map: &UrbanMap) -> WallCrossings {
    map.wall_crossings(a, b)
}

/// Free-function form of [`UrbanMap::is_outdoor`].
pub fn is_outdoor(p: Point, map: &UrbanMap) -> bool {
    map.is_outdoor(p)
}
