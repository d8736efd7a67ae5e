//! Synthetic Manhattan-grid city generator.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::map::{Building, UrbanMap};
use crate::error::{Error, Result};

/// Rectangular blocks on a regular grid separated by orthogonal streets.
///
/// Every outer edge of the map is lined by a street, so the street network
/// is always connected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManhattanSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub block_m: f64,
    pub street_m: f64,
    /// Fraction of blocks that carry a building.
    pub fill_ratio: f64,
    /// Maximum inward offset of each building side from its block edge.
    pub jitter_m: f64,
    pub wall_loss_db: f64,
    /// Keep at least one building whenever `fill_ratio > 0`.
    pub min_one_building: bool,
}

impl Default for ManhattanSpec {
    fn default() -> Self {
        ManhattanSpec {
            width_m: 920.0,
            height_m: 550.0,
            block_m: 80.0,
            street_m: 20.0,
            fill_ratio: 1.0,
            jitter_m: 4.0,
            wall_loss_db: 10.0,
            min_one_building: true,
        }
    }
}

impl ManhattanSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("map: {msg}")));
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return bad(format!("bounds must be positive, got {} x {}", self.width_m, self.height_m));
        }
        if !(self.block_m > 0.0 && self.street_m > 0.0) {
            return bad("block and street sizes must be positive".into());
        }
        if self.street_m >= self.block_m {
            return bad(format!(
                "street width {} m must be smaller than block size {} m",
                self.street_m, self.block_m
            ));
        }
        if !(self.fill_ratio > 0.0 && self.fill_ratio <= 1.0) {
            return bad(format!("fill_ratio {} outside (0, 1]", self.fill_ratio));
        }
        if !(self.jitter_m >= 0.0 && 2.0 * self.jitter_m < self.block_m) {
            return bad(format!("jitter {} m must be in [0, block/2)", self.jitter_m));
        }
        Ok(())
    }

    fn pitch(&self) -> f64 {
        self.block_m + self.street_m
    }

    /// Number of whole blocks along x and y.
    pub fn grid_dims(&self) -> (usize, usize) {
        let fit = |extent: f64| ((extent - self.street_m) / self.pitch()).floor().max(0.0) as usize;
        (fit(self.width_m), fit(self.height_m))
    }

    /// Lower-left corner of block `(i, j)`; leftover space is split evenly
    /// between the two margins.
    fn block_origin(&self, i: usize, j: usize) -> (f64, f64) {
        let (nx, ny) = self.grid_dims();
        let used_x = nx as f64 * self.pitch() + self.street_m;
        let used_y = ny as f64 * self.pitch() + self.street_m;
        let mx = (self.width_m - used_x) / 2.0;
        let my = (self.height_m - used_y) / 2.0;
        (
            mx + self.street_m + i as f64 * self.pitch(),
            my + self.street_m + j as f64 * self.pitch(),
        )
    }
}

pub fn generate_manhattan_map(spec: &ManhattanSpec, seed: u64) -> Result<UrbanMap> {
    spec.validate()?;
    let (nx, ny) = spec.grid_dims();
    let blocks = nx * ny;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut count = (spec.fill_ratio * blocks as f64).round() as usize;
    if count == 0 && spec.min_one_building && blocks > 0 {
        count = 1;
    }
    let mut chosen = index::sample(&mut rng, blocks, count.min(blocks)).into_vec();
    chosen.sort_unstable();

    let mut buildings = Vec::with_capacity(chosen.len());
    for k in chosen {
        let (i, j) = (k % nx, k / nx);
        let (x0, y0) = spec.block_origin(i, j);
        let mut inset = || {
            if spec.jitter_m > 0.0 {
                rng.random_range(0.0..spec.jitter_m)
            } else {
                0.0
            }
        };
        let (l, r, b, t) = (inset(), inset(), inset(), inset());
        buildings.push(Building::rectangle(
            x0 + l,
            y0 + b,
            x0 + spec.block_m - r,
            y0 + spec.block_m - t,
        )?);
    }
    UrbanMap::new(spec.width_m, spec.height_m, spec.wall_loss_db, buildings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Point;

    #[test]
    fn ottawa_sized_grid_tiles_nine_by_five() {
        let spec = ManhattanSpec::default();
        // (920 - 20) / 100 = 9 columns, (550 - 20) / 100 = 5 rows.
        assert_eq!(spec.grid_dims(), (9, 5));
        let m = generate_manhattan_map(&spec, 1).unwrap();
        assert!((45..=55).contains(&m.buildings().len()));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = ManhattanSpec::default();
        let a = generate_manhattan_map(&spec, 9).unwrap();
        let b = generate_manhattan_map(&spec, 9).unwrap();
        assert_eq!(a, b);
        let c = generate_manhattan_map(&spec, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn vanishing_fill_without_minimum_is_empty() {
        let spec = ManhattanSpec {
            fill_ratio: 1e-6,
            min_one_building: false,
            ..Default::default()
        };
        let m = generate_manhattan_map(&spec, 3).unwrap();
        assert!(m.buildings().is_empty());
        assert!(m.is_outdoor(m.center()));
        let keep_one = ManhattanSpec { min_one_building: true, ..spec };
        assert_eq!(generate_manhattan_map(&keep_one, 3).unwrap().buildings().len(), 1);
    }

    #[test]
    fn street_wider_than_block_is_rejected() {
        let spec = ManhattanSpec {
            street_m: 90.0,
            ..Default::default()
        };
        assert!(matches!(generate_manhattan_map(&spec, 0), Err(Error::Config(_))));
    }

    #[test]
    fn street_grid_lines_stay_outdoor() {
        let spec = ManhattanSpec::default();
        let m = generate_manhattan_map(&spec, 5).unwrap();
        // Street centre lines: x = 10 + 100 i, y = 25 + 100 j.
        for i in 0..=9 {
            let x = 10.0 + 100.0 * i as f64;
            for s in 0..=110 {
                assert!(m.is_outdoor(Point::new(x, s as f64 * 5.0)));
            }
        }
        for j in 0..=5 {
            let y = 25.0 + 100.0 * j as f64;
            for s in 0..=184 {
                assert!(m.is_outdoor(Point::new(s as f64 * 5.0, y)));
            }
        }
    }
}
