use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::env::{Point, UrbanMap};
use crate::error::{Error, Result};
use crate::routing::Strategy;

/// Spectrum the D2D links are overlaid on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Dl,
    Ul,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Dl => "DL",
            Band::Ul => "UL",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Band {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dl" => Ok(Band::Dl),
            "ul" => Ok(Band::Ul),
            _ => Err(Error::Config(format!("unknown band {s:?} (expected dl or ul)"))),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spr" => Ok(Strategy::Spr),
            "iar" => Ok(Strategy::Iar),
            "br" => Ok(Strategy::Br),
            _ => Err(Error::Config(format!("unknown strategy {s:?} (expected spr, iar or br)"))),
        }
    }
}

/// Hexagonal macro layout centred on the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsLayout {
    pub rings: u32,
    pub isd_m: f64,
    pub bs_power_w: f64,
    pub cc_ue_power_w: f64,
    /// Rooftop sites: BS links follow the NLOS law with no wall penetration.
    pub rooftop: bool,
    /// Voronoi-band half-width as a fraction of the inter-site distance.
    pub boundary_tolerance_frac: f64,
}

impl Default for BsLayout {
    fn default() -> Self {
        BsLayout {
            rings: 1,
            isd_m: 500.0,
            bs_power_w: 40.0,
            cc_ue_power_w: 0.2,
            rooftop: true,
            boundary_tolerance_frac: 0.3,
        }
    }
}

impl BsLayout {
    /// Cell diameter used to scale source-destination distances.
    pub fn cell_diameter_m(&self) -> f64 {
        self.isd_m
    }

    /// Site positions, centre first, then ring by ring counter-clockwise
    /// from the +x axis.
    pub fn sites(&self, center: Point) -> Vec<Point> {
        let mut out = vec![center];
        for ring in 1..=self.rings as i64 {
            out.extend(hex_ring(ring).into_iter().map(|(q, r)| axial_to_point(center, self.isd_m, q, r)));
        }
        out
    }

    /// The six lattice neighbours of a site (deployed or not).
    pub fn lattice_neighbors(&self, site: Point) -> [Point; 6] {
        hex_ring(1)
            .into_iter()
            .map(|(q, r)| axial_to_point(site, self.isd_m, q, r))
            .collect::<Vec<_>>()
            .try_into()
            .expect("ring 1 has six sites")
    }
}

const AXIAL_DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

fn hex_ring(ring: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity(6 * ring as usize);
    let (mut q, mut r) = (ring, 0);
    for k in 0..6 {
        let (dq, dr) = AXIAL_DIRS[(k + 2) % 6];
        for _ in 0..ring {
            out.push((q, r));
            q += dq;
            r += dr;
        }
    }
    out
}

fn axial_to_point(center: Point, isd: f64, q: i64, r: i64) -> Point {
    Point::new(
        center.x + isd * (q as f64 + r as f64 / 2.0),
        center.y + isd * (r as f64 * 3f64.sqrt() / 2.0),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct D2dParams {
    pub power_w: f64,
    pub density_per_km2: f64,
    /// Source-destination separation as a fraction of the cell diameter.
    pub pair_distance: f64,
    pub threshold_db: f64,
    pub admit_probability: f64,
    pub fading_samples: usize,
    /// Probe positions per trial for the cellular victim link.
    pub cc_probes: usize,
    /// Fading draws per probe position.
    pub cc_fading_draws: usize,
}

impl Default for D2dParams {
    fn default() -> Self {
        D2dParams {
            power_w: 0.1,
            density_per_km2: 400.0,
            pair_distance: 0.7,
            threshold_db: -6.0,
            admit_probability: 0.7,
            fading_samples: 32,
            cc_probes: 4,
            cc_fading_draws: 4,
        }
    }
}

impl D2dParams {
    pub fn threshold_linear(&self) -> f64 {
        10f64.powf(self.threshold_db / 10.0)
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: UrbanMap,
    pub bs: BsLayout,
    pub channel: ChannelModel,
    pub d2d: D2dParams,
    pub band: Band,
    pub strategy: Strategy,
    pub trials: usize,
    pub master_seed: u64,
}

impl Scenario {
    pub fn new(map: UrbanMap) -> Self {
        Scenario {
            map,
            bs: BsLayout::default(),
            channel: ChannelModel::default(),
            d2d: D2dParams::default(),
            band: Band::Dl,
            strategy: Strategy::Spr,
            trials: 1000,
            master_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        let bad = |section: &str, m: String| Err(Error::Config(format!("{section}: {m}")));
        let b = &self.bs;
        if !(b.isd_m > 0.0) {
            return bad("bs", format!("isd_m must be positive, got {}", b.isd_m));
        }
        if !(b.bs_power_w > 0.0 && b.cc_ue_power_w > 0.0) {
            return bad("bs", "powers must be positive".into());
        }
        if !(b.boundary_tolerance_frac > 0.0) {
            return bad("bs", "boundary_tolerance_frac must be positive".into());
        }
        let d = &self.d2d;
        if !(d.power_w > 0.0) {
            return bad("d2d", format!("power_w must be positive, got {}", d.power_w));
        }
        if !(d.density_per_km2 >= 0.0) {
            return bad("d2d", format!("density_per_km2 must be >= 0, got {}", d.density_per_km2));
        }
        if !(d.pair_distance > 0.0 && d.pair_distance <= 1.0) {
            return bad("d2d", format!("pair_distance {} outside (0, 1]", d.pair_distance));
        }
        if !(0.0..=1.0).contains(&d.admit_probability) {
            return bad("d2d", format!("admit_probability {} outside [0, 1]", d.admit_probability));
        }
        if d.fading_samples == 0 || d.cc_probes == 0 || d.cc_fading_draws == 0 {
            return bad("d2d", "fading_samples, cc_probes and cc_fading_draws must be >= 1".into());
        }
        if self.trials == 0 {
            return bad("sweep", "trials must be >= 1".into());
        }
        Ok(())
    }

    pub fn pair_distance_m(&self) -> f64 {
        self.d2d.pair_distance * self.bs.cell_diameter_m()
    }

    pub fn boundary_tolerance_m(&self) -> f64 {
        self.bs.boundary_tolerance_frac * self.bs.isd_m
    }

    /// BS density matched to one site per hexagonal cell area.
    pub fn bs_density_per_m2(&self) -> f64 {
        2.0 / (3f64.sqrt() * self.bs.isd_m * self.bs.isd_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_ring_has_seven_sites_at_isd() {
        let layout = BsLayout::default();
        let c = Point::new(460.0, 275.0);
        let sites = layout.sites(c);
        assert_eq!(sites.len(), 7);
        assert_eq!(sites[0], c);
        for s in &sites[1..] {
            assert!((s.distance(c) - 500.0).abs() < 1e-9);
        }
        // Neighbouring ring sites are also one ISD apart.
        assert!((sites[1].distance(sites[2]) - 500.0).abs() < 1e-9);
        let two = BsLayout { rings: 2, ..layout };
        assert_eq!(two.sites(c).len(), 19);
    }

    #[test]
    fn parse_band_and_strategy() {
        assert_eq!("DL".parse::<Band>().unwrap(), Band::Dl);
        assert_eq!("iar".parse::<Strategy>().unwrap(), Strategy::Iar);
        assert!("xx".parse::<Band>().is_err());
    }
}
