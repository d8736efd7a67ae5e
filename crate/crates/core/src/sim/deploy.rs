use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::scenario::{BsLayout, Scenario};
use crate::env::{sample_outdoor_points_with, Point, UrbanMap};
use crate::error::{Error, Result};
use crate::routing::CellGeometry;
use crate::seeds::Seed;

/// Rejection attempts for placing the source-destination pair.
pub const PAIR_ATTEMPTS: usize = 200_000;
const CELL_ATTEMPTS: usize = 100_000;

/// One trial's network: BS sites, the active CC UE of each cell and the D2D
/// UEs. `d2d[0]` is the source, `d2d[1]` the destination, the rest relays.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub trial_index: u64,
    pub seed: Seed,
    pub cells: CellGeometry,
    pub cc_ues: Vec<Point>,
    pub d2d: Vec<Point>,
}

impl Deployment {
    pub fn bs(&self) -> &[Point] {
        &self.cells.bs_positions
    }

    pub fn src(&self) -> Point {
        self.d2d[0]
    }

    pub fn dst(&self) -> Point {
        self.d2d[1]
    }

    pub fn relays(&self) -> &[Point] {
        &self.d2d[2..]
    }

    pub fn pair_separation_m(&self) -> f64 {
        self.src().distance(self.dst())
    }
}

/// Builds the network for trial `trial_index`.
///
/// Every random quantity is drawn from a stream keyed by the trial seed and
/// a fixed label, so a trial's deployment is independent of the axis value
/// of a sweep except where that value enters directly (density, distance).
pub fn deploy(scenario: &Scenario, trial_index: u64) -> Result<Deployment> {
    let seed = Seed::trial(scenario.master_seed, trial_index);
    let map = &scenario.map;
    let sites = scenario.bs.sites(map.center());
    let cells = CellGeometry::new(sites, scenario.boundary_tolerance_m())?;

    let (src, dst) = place_pair(map, &cells, scenario.pair_distance_m(), &mut seed.label("pair").rng())?;

    let mean = scenario.d2d.density_per_km2 * map.area_m2() / 1e6;
    let count = if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::Deployment(format!("relay count: {e}")))?;
        poisson.sample(&mut seed.label("count").rng()) as usize
    } else {
        0
    };
    let mut d2d = vec![src, dst];
    d2d.extend(sample_outdoor_points_with(map, count, &mut seed.label("nodes").rng())?);

    let mut rng = seed.label("cc-ues").rng();
    let cc_ues = (0..cells.bs_positions.len())
        .map(|c| sample_in_cell(&scenario.bs, &cells, c, map, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    Ok(Deployment { trial_index, seed, cells, cc_ues, d2d })
}

/// Source uniform over the outdoor part of the centre cell, destination at
/// exactly `separation` in a uniform direction, both outdoor and both served
/// by the centre site.
fn place_pair<R: Rng>(map: &UrbanMap, cells: &CellGeometry, separation: f64, rng: &mut R) -> Result<(Point, Point)> {
    for _ in 0..PAIR_ATTEMPTS {
        let src = Point::new(rng.random::<f64>() * map.width_m(), rng.random::<f64>() * map.height_m());
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let dst = Point::new(src.x + separation * theta.cos(), src.y + separation * theta.sin());
        if cells.serving_cell(src) == 0
            && map.contains(dst)
            && cells.serving_cell(dst) == 0
            && map.is_outdoor(src)
            && map.is_outdoor(dst)
        {
            return Ok((src, dst));
        }
    }
    Err(Error::Deployment(format!(
        "no outdoor pair {separation:.1} m apart in the centre cell after {PAIR_ATTEMPTS} attempts"
    )))
}

/// Uniform point in the hexagon of cell `cell`. Points on the map must be
/// outdoor; points off the map are open ground.
pub fn sample_in_cell<R: Rng + ?Sized>(
    layout: &BsLayout,
    cells: &CellGeometry,
    cell: usize,
    map: &UrbanMap,
    rng: &mut R,
) -> Result<Point> {
    let site = cells.bs_positions[cell];
    let neighbors = layout.lattice_neighbors(site);
    let radius = layout.isd_m / 3f64.sqrt();
    for _ in 0..CELL_ATTEMPTS {
        let p = Point::new(
            site.x + (2.0 * rng.random::<f64>() - 1.0) * radius,
            site.y + (2.0 * rng.random::<f64>() - 1.0) * radius,
        );
        let d = p.distance_sq(site);
        if neighbors.iter().any(|n| n.distance_sq(p) < d) {
            continue;
        }
        if !map.contains(p) || map.is_outdoor(p) {
            return Ok(p);
        }
    }
    Err(Error::Deployment(format!("cell {cell} has no outdoor area")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_manhattan_map, ManhattanSpec};

    fn scenario() -> Scenario {
        Scenario::new(generate_manhattan_map(&ManhattanSpec::default(), 7).unwrap())
    }

    #[test]
    fn deployment_is_valid_and_reproducible() {
        let s = scenario();
        for t in 0..20 {
            let d = deploy(&s, t).unwrap();
            assert_eq!(d, deploy(&s, t).unwrap());
            assert_eq!(d.bs().len(), 7);
            assert_eq!(d.cc_ues.len(), 7);
            assert!(d.d2d.iter().all(|p| s.map.is_outdoor(*p)));
            for (c, ue) in d.cc_ues.iter().enumerate() {
                assert_eq!(d.cells.serving_cell(*ue), c);
            }
            let target = s.pair_distance_m();
            assert!((d.pair_separation_m() - target).abs() <= 0.02 * target);
            assert_eq!(d.cells.serving_cell(d.src()), 0);
            assert_eq!(d.cells.serving_cell(d.dst()), 0);
        }
    }

    #[test]
    fn zero_density_leaves_only_the_pair() {
        let mut s = scenario();
        s.d2d.density_per_km2 = 0.0;
        let d = deploy(&s, 3).unwrap();
        assert_eq!(d.d2d.len(), 2);
    }

    #[test]
    fn relay_count_is_poisson_in_map_area() {
        let mut s = Scenario::new(UrbanMap::empty(920.0, 550.0).unwrap());
        s.d2d.density_per_km2 = 400.0;
        let trials = 400;
        let counts: Vec<f64> = (0..trials).map(|t| deploy(&s, t).unwrap().relays().len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let expected = 400.0 * 0.506;
        // Mean of 400 Poisson draws: standard error sqrt(λ / 400).
        assert!((mean - expected).abs() < 3.0 * (expected / trials as f64).sqrt(), "{mean}");
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((var / expected - 1.0).abs() < 0.25, "{var}");
    }

    #[test]
    fn impossible_separation_is_a_deployment_error() {
        let mut s = scenario();
        s.bs.isd_m = 30.0;
        s.d2d.pair_distance = 1.0;
        // A 30 m cell centred inside a building block has no outdoor pair.
        assert!(matches!(deploy(&s, 0), Err(Error::Deployment(_))));
    }
}
