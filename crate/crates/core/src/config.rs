//! Scenario configuration: a TOML document with sections `[map]`, `[bs]`,
//! `[channel]`, `[d2d]`, `[sweep]` and `[seed]`, every field optional.
//!
//! Environment variables named `D2D_RELAY__<SECTION>__<KEY>` (nested keys
//! joined by `__`) override file values; their text is read as a TOML value,
//! or as a string when it does not parse as one.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{noise_power_w, ChannelModel, LogDistanceLaw};
use crate::env::{generate_manhattan_map, load_map, ManhattanSpec, UrbanMap};
use crate::error::{Error, Result};
use crate::routing::Strategy;
use crate::sim::{Band, BsLayout, D2dParams, Scenario, SweepAxis, SweepSpec};

pub const ENV_PREFIX: &str = "D2D_RELAY__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    /// Map file to load instead of generating a Manhattan grid.
    pub file: Option<PathBuf>,
    /// Generator seed (ignored for map files).
    pub seed: u64,
    /// Overrides the map's default wall loss when set.
    pub wall_loss_db: Option<f64>,
    pub manhattan: ManhattanSpec,
}

impl Default for MapSection {
    fn default() -> Self {
        MapSection {
            file: None,
            seed: 1,
            wall_loss_db: None,
            manhattan: default_manhattan(),
        }
    }
}

/// Street grid used by the default scenario: 80 m blocks, 20 m streets,
/// 40% of blocks built up, building sides set back by up to 20 m.
pub fn default_manhattan() -> ManhattanSpec {
    ManhattanSpec {
        fill_ratio: 0.4,
        jitter_m: 20.0,
        ..ManhattanSpec::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub carrier_ghz: f64,
    pub los: LogDistanceLaw,
    pub nlos: LogDistanceLaw,
    pub shadow_sigma_db: f64,
    pub noise_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    pub min_distance_m: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let model = ChannelModel::default();
        ChannelSection {
            carrier_ghz: 2.1,
            los: model.los,
            nlos: model.nlos,
            shadow_sigma_db: 6.0,
            noise_dbm_per_hz: -162.0,
            bandwidth_hz: 20e6,
            min_distance_m: 1.0,
        }
    }
}

impl ChannelSection {
    pub fn model(&self) -> ChannelModel {
        ChannelModel {
            carrier_ghz: self.carrier_ghz,
            los: self.los,
            nlos: self.nlos,
            shadow_sigma_db: self.shadow_sigma_db,
            noise_power_w: noise_power_w(self.noise_dbm_per_hz, self.bandwidth_hz),
            min_distance_m: self.min_distance_m,
            ..ChannelModel::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct D2dSection {
    pub band: Band,
    pub strategy: Strategy,
    pub power_w: f64,
    pub density_per_km2: f64,
    pub pair_distance: f64,
    pub threshold_db: f64,
    pub admit_probability: f64,
    pub fading_samples: usize,
    pub cc_probes: usize,
    pub cc_fading_draws: usize,
}

impl Default for D2dSection {
    fn default() -> Self {
        let p = D2dParams::default();
        D2dSection {
            band: Band::Dl,
            strategy: Strategy::Spr,
            power_w: p.power_w,
            density_per_km2: p.density_per_km2,
            pair_distance: p.pair_distance,
            threshold_db: p.threshold_db,
            admit_probability: p.admit_probability,
            fading_samples: p.fading_samples,
            cc_probes: p.cc_probes,
            cc_fading_draws: p.cc_fading_draws,
        }
    }
}

impl D2dSection {
    fn params(&self) -> D2dParams {
        D2dParams {
            power_w: self.power_w,
            density_per_km2: self.density_per_km2,
            pair_distance: self.pair_distance,
            threshold_db: self.threshold_db,
            admit_probability: self.admit_probability,
            fading_samples: self.fading_samples,
            cc_probes: self.cc_probes,
            cc_fading_draws: self.cc_fading_draws,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub bands: Vec<Band>,
    pub trials: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axis: SweepAxis::PairDistance,
            grid: vec![0.45, 0.55, 0.65, 0.75, 0.85, 0.9],
            strategies: Strategy::ALL.to_vec(),
            bands: vec![Band::Dl],
            trials: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub master: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        SeedSection { master: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub map: MapSection,
    pub bs: BsLayout,
    pub channel: ChannelSection,
    pub d2d: D2dSection,
    pub sweep: SweepSection,
    pub seed: SeedSection,
}

impl Config {
    /// Parses `text` and applies the overrides in `env` (name, value).
    pub fn parse<I>(text: &str, env: I) -> Result<Config>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut overrides: Vec<(String, String)> =
            env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        for (name, value) in overrides {
            apply_override(&mut table, &name, &value)?;
        }
        let config: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file, applying overrides from the process environment.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Config::parse(&text, std::env::vars())?;
        if let Some(file) = &config.map.file {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    config.map.file = Some(dir.join(file));
                }
            }
        }
        Ok(config)
    }

    /// Default configuration with environment overrides applied.
    pub fn from_env() -> Result<Config> {
        Config::parse("", std::env::vars())
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.model().validate()?;
        if self.map.file.is_none() {
            self.map.manhattan.validate()?;
        }
        self.sweep_spec().validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            axis: self.sweep.axis,
            grid: self.sweep.grid.clone(),
            strategies: self.sweep.strategies.clone(),
            bands: self.sweep.bands.clone(),
            trials: self.sweep.trials,
        }
    }

    pub fn build_map(&self) -> Result<UrbanMap> {
        let map = match &self.map.file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("map: cannot read {}: {e}", path.display())))?;
                load_map(&text)?
            }
            None => generate_manhattan_map(&self.map.manhattan, self.map.seed)?,
        };
        match self.map.wall_loss_db {
            Some(w) => map.with_wall_loss(w),
            None => Ok(map),
        }
    }

    /// The resolved scenario (map built or loaded).
    pub fn scenario(&self) -> Result<Scenario> {
        let scenario = Scenario {
            map: self.build_map()?,
            bs: self.bs.clone(),
            channel: self.channel.model(),
            d2d: self.d2d.params(),
            band: self.d2d.band,
            strategy: self.d2d.strategy,
            trials: self.sweep.trials,
            master_seed: self.seed.master,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// The default scenario on its default map.
pub fn default_scenario() -> Result<Scenario> {
    Config::default().scenario()
}

fn apply_override(table: &mut toml::Table, name: &str, value: &str) -> Result<()> {
    let path: Vec<String> = name[ENV_PREFIX.len()..].split("__").map(str::to_ascii_lowercase).collect();
    if path.iter().any(String::is_empty) {
        return Err(Error::Config(format!("malformed override variable {name}")));
    }
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let (last, parents) = path.split_last().expect("path is non-empty");
    let mut cur = table;
    for key in parents {
        let entry = cur
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{name}: {key} is not a section")))?;
    }
    cur.insert(last.clone(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(Config::parse("", no_env()).unwrap(), Config::default());
    }

    #[test]
    fn sections_are_read() {
        let c = Config::parse(
            "[d2d]\nband = \"ul\"\nstrategy = \"iar\"\ndensity_per_km2 = 200.0\n\
             [sweep]\naxis = \"ue_density\"\ngrid = [0.0, 100.0]\n[seed]\nmaster = 42\n",
            no_env(),
        )
        .unwrap();
        assert_eq!(c.d2d.band, Band::Ul);
        assert_eq!(c.d2d.strategy, Strategy::Iar);
        assert_eq!(c.d2d.density_per_km2, 200.0);
        assert_eq!(c.sweep.axis, SweepAxis::UeDensity);
        assert_eq!(c.seed.master, 42);
    }

    #[test]
    fn environment_overrides_file() {
        let env = vec![
            ("D2D_RELAY__D2D__POWER_W".to_string(), "0.2".to_string()),
            ("D2D_RELAY__MAP__MANHATTAN__FILL_RATIO".to_string(), "0.5".to_string()),
            ("D2D_RELAY__D2D__BAND".to_string(), "ul".to_string()),
            ("UNRELATED".to_string(), "x".to_string()),
        ];
        let c = Config::parse("[d2d]\npower_w = 0.1\n", env).unwrap();
        assert_eq!(c.d2d.power_w, 0.2);
        assert_eq!(c.map.manhattan.fill_ratio, 0.5);
        assert_eq!(c.d2d.band, Band::Ul);
    }

    #[test]
    fn pathloss_coefficients_are_configurable() {
        let c = Config::parse(
            "[channel]\nlos = { slope = 20.0, intercept = 30.0, freq_slope = 20.0 }\n",
            no_env(),
        )
        .unwrap();
        let m = c.channel.model();
        assert_eq!(m.los.intercept, 30.0);
        assert_eq!(m.nlos, ChannelModel::default().nlos);
        let err = Config::parse("[channel]\nnlos = { slope = -1.0, intercept = 0.0, freq_slope = 0.0 }\n", no_env())
            .unwrap_err()
            .to_string();
        assert!(err.contains("channel"), "{err}");
    }

    #[test]
    fn unknown_field_is_named() {
        let err = Config::parse("[d2d]\npowr_w = 1.0\n", no_env()).unwrap_err().to_string();
        assert!(err.contains("powr_w"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected_with_section() {
        let err = Config::parse("[sweep]\ngrid = []\n", no_env()).unwrap_err().to_string();
        assert!(err.contains("sweep"), "{err}");
        let c = Config::parse("[d2d]\npower_w = -1.0\n", no_env()).unwrap();
        let err = c.scenario().unwrap_err().to_string();
        assert!(err.contains("d2d") && err.contains("power_w"), "{err}");
        let err = Config::parse("[map.manhattan]\nstreet_m = 90.0\n", no_env()).unwrap_err().to_string();
        assert!(err.contains("street"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml().unwrap(), no_env()).unwrap(), c);
    }
}
