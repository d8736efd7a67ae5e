use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::Point;
use super::map::UrbanMap;
use crate::error::{Error, Result};

/// Rejection attempts allowed per requested point (plus a fixed floor).
const ATTEMPTS_PER_POINT: usize = 10_000;

/// Uniform outdoor points drawn from an explicit generator.
pub fn sample_outdoor_points_with<R: Rng + ?Sized>(
    map: &UrbanMap,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity(count);
    let budget = ATTEMPTS_PER_POINT * (count + 1);
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= budget {
            return Err(Error::Sampling(format!(
                "only {} of {count} outdoor points after {attempts} attempts",
                out.len()
            )));
        }
        attempts += 1;
        let p = Point::new(
            rng.random::<f64>() * map.width_m(),
            rng.random::<f64>() * map.height_m(),
        );
        if map.is_outdoor(p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// `count` i.i.d. uniform points over the outdoor region of `map`.
pub fn sample_outdoor_points(map: &UrbanMap, count: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_outdoor_points_with(map, count, &mut rng)
}
