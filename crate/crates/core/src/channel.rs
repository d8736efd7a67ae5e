//! Link-level radio model: log-distance LOS/NLOS pathloss with wall
//! penetration, Rayleigh fading, log-normal shadowing and the SINR of a
//! receiver facing a set of co-channel interferers.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{Point, UrbanMap};
use crate::error::{Error, Result};
use crate::seeds::Seed;

/// `loss = slope * log10(d_m) + intercept + freq_slope * log10(f_GHz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogDistanceLaw {
    pub slope: f64,
    pub intercept: f64,
    pub freq_slope: f64,
}

impl LogDistanceLaw {
    pub const fn new(slope: f64, intercept: f64, freq_slope: f64) -> Self {
        LogDistanceLaw {
            slope,
            intercept,
            freq_slope,
        }
    }

    pub fn loss_db(&self, distance_m: f64, carrier_ghz: f64) -> f64 {
        self.slope * distance_m.log10() + self.intercept + self.freq_slope * carrier_ghz.log10()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Thermal noise over a band from a spectral density in dBm/Hz.
pub fn noise_power_w(density_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(density_dbm_per_hz + linear_to_db(bandwidth_hz))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub carrier_ghz: f64,
    pub los: LogDistanceLaw,
    pub nlos: LogDistanceLaw,
    /// Pathloss exponent used by the closed-form analysis only.
    pub alpha_analytic: f64,
    pub shadow_sigma_db: f64,
    pub noise_power_w: f64,
    /// Distances below this are evaluated at this distance.
    pub min_distance_m: f64,
}

impl Default for ChannelModel {
    /// 3GPP UMi street-canyon constants at 2.1 GHz, 6 dB shadowing and
    /// -162 dBm/Hz over 20 MHz.
    fn default() -> Self {
        ChannelModel {
            carrier_ghz: 2.1,
            los: LogDistanceLaw::new(22.0, 28.0, 20.0),
            nlos: LogDistanceLaw::new(36.7, 22.7, 26.0),
            alpha_analytic: 4.0,
            shadow_sigma_db: 6.0,
            noise_power_w: noise_power_w(-162.0, 20e6),
            min_distance_m: 1.0,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("channel: {m}")));
        if !(self.carrier_ghz > 0.0) {
            return bad(format!("carrier frequency must be positive, got {}", self.carrier_ghz));
        }
        if !(self.los.slope > 0.0 && self.nlos.slope > 0.0) {
            return bad("pathloss slopes must be positive".into());
        }
        if !(self.alpha_analytic > 2.0) {
            return bad(format!("alpha must exceed 2, got {}", self.alpha_analytic));
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return bad(format!("shadow sigma must be non-negative, got {}", self.shadow_sigma_db));
        }
        if !(self.noise_power_w >= 0.0) {
            return bad(format!("noise power must be non-negative, got {}", self.noise_power_w));
        }
        if !(self.min_distance_m > 0.0) {
            return bad("min distance must be positive".into());
        }
        Ok(())
    }

    /// Pure power law `d^alpha` with no shadowing and no noise, on which the
    /// closed-form outage expressions hold exactly.
    pub fn power_law(alpha: f64) -> Self {
        let law = LogDistanceLaw::new(10.0 * alpha, 0.0, 0.0);
        ChannelModel {
            carrier_ghz: 1.0,
            los: law,
            nlos: law,
            alpha_analytic: alpha,
            shadow_sigma_db: 0.0,
            noise_power_w: 0.0,
            min_distance_m: 1e-9,
        }
    }

    /// Distance-law loss for a given LOS state, without walls or shadowing.
    pub fn distance_loss_db(&self, distance_m: f64, los: bool) -> f64 {
        let d = distance_m.max(self.min_distance_m);
        let law = if los { &self.los } else { &self.nlos };
        law.loss_db(d, self.carrier_ghz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pathloss {
    /// Distance law plus wall penetration, dB.
    pub loss_db: f64,
    pub los: bool,
    pub wall_loss_db: f64,
}

/// Deterministic pathloss between two ground-level points.
///
/// LOS holds iff the plan-view segment crosses no wall; NLOS links also pay
/// every crossed wall's penetration loss.
pub fn pathloss_db(tx: Point, rx: Point, map: &UrbanMap, model: &ChannelModel) -> Result<Pathloss> {
    pathloss_with_walls(tx, rx, map, model, true)
}

/// As [`pathloss_db`], optionally ignoring penetration (rooftop sites whose
/// signal reaches the street over the buildings).
pub fn pathloss_with_walls(
    tx: Point,
    rx: Point,
    map: &UrbanMap,
    model: &ChannelModel,
    penetrate: bool,
) -> Result<Pathloss> {
    let d = tx.distance(rx);
    if d == 0.0 {
        return Err(Error::Domain(format!("zero-length link at ({}, {})", tx.x, tx.y)));
    }
    let (count, walls) = map.wall_crossing_total(tx, rx);
    let los = count == 0;
    let wall_loss_db = if penetrate { walls } else { 0.0 };
    Ok(Pathloss {
        loss_db: model.distance_loss_db(d, los) + wall_loss_db,
        los,
        wall_loss_db,
    })
}

/// Rayleigh amplitude fading expressed as a unit-mean exponential power gain.
pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Zero-mean log-normal shadowing offset in dB.
pub fn draw_shadowing<R: Rng + ?Sized>(rng: &mut R, sigma_db: f64) -> f64 {
    if sigma_db == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    sigma_db * z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub tx: Point,
    pub rx: Point,
    pub tx_power_w: f64,
    pub fading_gain: f64,
    pub shadow_db: f64,
    pub wall_loss_db: f64,
    pub los: bool,
    /// Distance-law loss in dB, excluding walls and shadowing.
    pub distance_loss_db: f64,
}

impl LinkSample {
    pub fn total_loss_db(&self) -> f64 {
        self.distance_loss_db + self.wall_loss_db + self.shadow_db
    }

    pub fn received_power_w(&self) -> f64 {
        self.fading_gain * self.tx_power_w * db_to_linear(-self.total_loss_db())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrQuery {
    signal: LinkSample,
    interferers: Vec<LinkSample>,
    noise_power_w: f64,
}

impl SinrQuery {
    pub fn new(signal: LinkSample, interferers: Vec<LinkSample>, noise_power_w: f64) -> Result<Self> {
        if !(signal.tx_power_w > 0.0) || signal.fading_gain < 0.0 {
            return Err(Error::Domain("signal needs positive power and non-negative fading".into()));
        }
        if let Some(i) = interferers.iter().position(|l| l.rx != signal.rx) {
            return Err(Error::Domain(format!("interferer {i} targets a different receiver")));
        }
        if interferers.iter().any(|l| l.fading_gain < 0.0 || l.tx_power_w < 0.0) {
            return Err(Error::Domain("interferer with negative power or fading".into()));
        }
        if !(noise_power_w >= 0.0) {
            return Err(Error::Domain("noise power must be non-negative".into()));
        }
        Ok(SinrQuery {
            signal,
            interferers,
            noise_power_w,
        })
    }

    pub fn signal(&self) -> &LinkSample {
        &self.signal
    }

    pub fn interferers(&self) -> &[LinkSample] {
        &self.interferers
    }

    pub fn noise_power_w(&self) -> f64 {
        self.noise_power_w
    }
}

/// Linear SINR of the query; `f64::INFINITY` when neither noise nor
/// interference is present.
pub fn sinr(query: &SinrQuery) -> f64 {
    sinr_from_powers(
        query.signal.received_power_w(),
        query.interferers.iter().map(LinkSample::received_power_w).sum(),
        query.noise_power_w,
    )
}

/// `signal / (noise + interference)` with the infinite sentinel on a zero
/// denominator.
pub fn sinr_from_powers(signal_w: f64, interference_w: f64, noise_w: f64) -> f64 {
    let denom = noise_w + interference_w;
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        signal_w / denom
    }
}

/// Pairwise losses between a fixed set of ground-level points, with one
/// shadowing draw per unordered pair.
#[derive(Debug, Clone)]
pub struct LinkTable {
    n: usize,
    distance_m: Vec<f64>,
    loss_db: Vec<f64>,
    los: Vec<bool>,
}

impl LinkTable {
    /// Shadowing for pair `(i, j)`, `i < j`, comes from `shadow_seed.pair(i, j)`,
    /// so a pair keeps its draw when other points are added or removed.
    pub fn compute(points: &[Point], map: &UrbanMap, model: &ChannelModel, shadow_seed: Seed) -> Self {
        let n = points.len();
        let mut distance_m = vec![0.0; n * n];
        let mut loss_db = vec![f64::INFINITY; n * n];
        let mut los = vec![false; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = points[i].distance(points[j]);
                let (count, walls) = map.wall_crossing_total(points[i], points[j]);
                let is_los = count == 0;
                let mut rng = shadow_seed.pair(i as u64, j as u64).fast_rng();
                let shadow = draw_shadowing(&mut rng, model.shadow_sigma_db);
                let loss = model.distance_loss_db(d, is_los) + walls + shadow;
                for (a, b) in [(i, j), (j, i)] {
                    distance_m[a * n + b] = d;
                    loss_db[a * n + b] = loss;
                    los[a * n + b] = is_los;
                }
            }
        }
        LinkTable { n, distance_m, loss_db, los }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance_m(&self, i: usize, j: usize) -> f64 {
        self.distance_m[i * self.n + j]
    }

    /// Total loss (distance law, walls and shadowing) in dB.
    pub fn loss_db(&self, i: usize, j: usize) -> f64 {
        self.loss_db[i * self.n + j]
    }

    pub fn los(&self, i: usize, j: usize) -> bool {
        self.los[i * self.n + j]
    }

    /// Mean received power (before fading) for transmit power `power_w`.
    pub fn mean_rx_w(&self, i: usize, j: usize, power_w: f64) -> f64 {
        power_w * db_to_linear(-self.loss_db(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Building;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn link(tx: Point, rx: Point, power: f64, loss_db: f64) -> LinkSample {
        LinkSample {
            tx,
            rx,
            tx_power_w: power,
            fading_gain: 1.0,
            shadow_db: 0.0,
            wall_loss_db: 0.0,
            los: true,
            distance_loss_db: loss_db,
        }
    }

    #[test]
    fn umi_los_and_nlos_reference_values() {
        let m = ChannelModel::default();
        // 22 log10(100) + 28 + 20 log10(2.1)
        assert!((m.distance_loss_db(100.0, true) - 78.444_385_894_678_39).abs() < 1e-9);
        // 36.7 log10(100) + 22.7 + 26 log10(2.1)
        assert!((m.distance_loss_db(100.0, false) - 104.477_701_663_081_9).abs() < 1e-9);
    }

    #[test]
    fn intervening_building_adds_two_walls() {
        let model = ChannelModel::default();
        let open = UrbanMap::empty(200.0, 100.0).unwrap();
        let built = UrbanMap::new(
            200.0,
            100.0,
            10.0,
            vec![Building::rectangle(90.0, 40.0, 110.0, 60.0).unwrap()],
        )
        .unwrap();
        let (a, b) = (Point::new(50.0, 50.0), Point::new(150.0, 50.0));
        let clear = pathloss_db(a, b, &open, &model).unwrap();
        let blocked = pathloss_db(a, b, &built, &model).unwrap();
        assert!(clear.los && !blocked.los);
        assert_eq!(blocked.wall_loss_db, 20.0);
        assert!(blocked.loss_db - clear.loss_db >= 20.0);
        let rooftop = pathloss_with_walls(a, b, &built, &model, false).unwrap();
        assert!(!rooftop.los && rooftop.wall_loss_db == 0.0);
    }

    #[test]
    fn zero_distance_is_domain_error() {
        let m = UrbanMap::empty(10.0, 10.0).unwrap();
        let p = Point::new(1.0, 1.0);
        assert!(matches!(pathloss_db(p, p, &m, &ChannelModel::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn noise_density_conversion() {
        let n = noise_power_w(-162.0, 20e6);
        assert!((linear_to_db(n) + 30.0 - (-88.989_700_043_360_19)).abs() < 1e-9);
    }

    #[test]
    fn sinr_noise_only() {
        let rx = Point::new(0.0, 0.0);
        let q = SinrQuery::new(link(Point::new(1.0, 0.0), rx, 1.0, 0.0), vec![], 0.1).unwrap();
        assert!((sinr(&q) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_equal_interferer_is_unity() {
        let rx = Point::new(0.0, 0.0);
        let s = link(Point::new(1.0, 0.0), rx, 1.0, 30.0);
        let i = link(Point::new(-1.0, 0.0), rx, 1.0, 30.0);
        let q = SinrQuery::new(s, vec![i], 0.0).unwrap();
        assert!((sinr(&q) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_power_law_example() {
        // Signal at r = 1, two interferers at r = 2, alpha = 4: 1 / (2 * 2^-4) = 8.
        let model = ChannelModel::power_law(4.0);
        let rx = Point::new(0.0, 0.0);
        let mk = |tx: Point| link(tx, rx, 1.0, model.distance_loss_db(tx.distance(rx), true));
        let q = SinrQuery::new(
            mk(Point::new(1.0, 0.0)),
            vec![mk(Point::new(0.0, 2.0)), mk(Point::new(-2.0, 0.0))],
            0.0,
        )
        .unwrap();
        assert!((sinr(&q) - 8.0).abs() < 1e-9);
    }

    #[test]
    fn sinr_without_noise_or_interference_is_infinite() {
        let rx = Point::new(0.0, 0.0);
        let q = SinrQuery::new(link(Point::new(1.0, 0.0), rx, 1.0, 0.0), vec![], 0.0).unwrap();
        assert!(sinr(&q).is_infinite());
    }

    #[test]
    fn mismatched_receiver_rejected() {
        let s = link(Point::new(1.0, 0.0), Point::new(0.0, 0.0), 1.0, 0.0);
        let i = link(Point::new(1.0, 0.0), Point::new(5.0, 0.0), 1.0, 0.0);
        assert!(SinrQuery::new(s, vec![i], 0.0).is_err());
    }

    #[test]
    fn fading_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| draw_fading(&mut rng)).collect();
        assert!(draws.iter().all(|h| *h >= 0.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        // Exponential median is ln 2.
        let above = draws.iter().filter(|h| **h > std::f64::consts::LN_2).count() as f64 / n as f64;
        assert!((above - 0.5).abs() < 0.01, "{above}");
    }

    #[test]
    fn shadowing_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((0..100).all(|_| draw_shadowing(&mut rng, 0.0) == 0.0));
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| draw_shadowing(&mut rng, 6.0)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var.sqrt() - 6.0).abs() < 0.05, "{}", var.sqrt());
    }
}
