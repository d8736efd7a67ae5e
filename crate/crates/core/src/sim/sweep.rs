use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::deploy::deploy;
use super::scenario::{Band, Scenario};
use super::select::{select_strategy, OperatingPoint};
use super::stats::{wilson_interval, Z95};
use super::trial::{TrialEngine, TrialResult};
use crate::env::MAX_WALL_LOSS_DB;
use crate::error::{Error, Result};
use crate::routing::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    UeDensity,
    WallLoss,
    PairDistance,
    CcConstraint,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::UeDensity => "ue_density",
            SweepAxis::WallLoss => "wall_loss",
            SweepAxis::PairDistance => "pair_distance",
            SweepAxis::CcConstraint => "cc_constraint",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ue_density" => Ok(SweepAxis::UeDensity),
            "wall_loss" => Ok(SweepAxis::WallLoss),
            "pair_distance" => Ok(SweepAxis::PairDistance),
            "cc_constraint" => Ok(SweepAxis::CcConstraint),
            _ => Err(Error::Config(format!(
                "unknown sweep axis {s:?} (expected ue_density, wall_loss, pair_distance or cc_constraint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub bands: Vec<Band>,
    pub trials: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("sweep: {m}")));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        if self.strategies.is_empty() || self.bands.is_empty() {
            return bad("strategies and bands must be non-empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        for &v in &self.grid {
            let ok = v.is_finite()
                && match self.axis {
                    SweepAxis::UeDensity => v >= 0.0,
                    SweepAxis::WallLoss => (0.0..=MAX_WALL_LOSS_DB).contains(&v),
                    SweepAxis::PairDistance => v > 0.0 && v <= 1.0,
                    SweepAxis::CcConstraint => (0.0..=1.0).contains(&v),
                };
            if !ok {
                return bad(format!("grid value {v} is out of range for axis {}", self.axis));
            }
        }
        Ok(())
    }
}

/// Scenario with the axis parameter set to `value`.
pub fn apply_axis(template: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut s = template.clone();
    match axis {
        SweepAxis::UeDensity => s.d2d.density_per_km2 = value,
        SweepAxis::WallLoss => s.map = s.map.with_wall_loss(value)?,
        SweepAxis::PairDistance => s.d2d.pair_distance = value,
        SweepAxis::CcConstraint => {}
    }
    s.validate()?;
    Ok(s)
}

/// One CSV row. Empty cells mean "not defined" (no route found, or no D2D
/// permitted under a CC constraint).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub strategy: String,
    pub band: String,
    pub trials: usize,
    pub d2d_success: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub mean_hops: Option<f64>,
    pub mean_route_len_m: Option<f64>,
    pub cc_outage: Option<f64>,
    pub cc_baseline: Option<f64>,
}

/// Summary of many trials of one (strategy, band).
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub strategy: Strategy,
    pub band: Band,
    pub trials: usize,
    pub successes: usize,
    pub ci: (f64, f64),
    pub mean_hops: Option<f64>,
    pub mean_route_len_m: Option<f64>,
    pub cc_outage: f64,
    pub cc_baseline: f64,
}

impl Aggregate {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            strategy: self.strategy,
            band: self.band,
            d2d_outage: 1.0 - self.success_rate(),
            cc_outage: self.cc_outage,
        }
    }

    fn row(&self, axis_value: f64) -> SweepRow {
        SweepRow {
            axis_value,
            strategy: self.strategy.as_str().into(),
            band: self.band.as_str().into(),
            trials: self.trials,
            d2d_success: Some(self.success_rate()),
            ci_low: Some(self.ci.0),
            ci_high: Some(self.ci.1),
            mean_hops: self.mean_hops,
            mean_route_len_m: self.mean_route_len_m,
            cc_outage: Some(self.cc_outage),
            cc_baseline: Some(self.cc_baseline),
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Summarizes results of a single (strategy, band), in trial order.
pub fn aggregate(strategy: Strategy, band: Band, results: &[&TrialResult]) -> Aggregate {
    let trials = results.len();
    let successes = results.iter().filter(|r| r.succeeded()).count();
    Aggregate {
        strategy,
        band,
        trials,
        successes,
        ci: wilson_interval(successes, trials, Z95),
        mean_hops: mean(results.iter().filter_map(|r| r.hops.map(|h| h as f64))),
        mean_route_len_m: mean(results.iter().filter_map(|r| r.route_length_m)),
        cc_outage: mean(results.iter().map(|r| r.cc_outage)).unwrap_or(0.0),
        cc_baseline: mean(results.iter().map(|r| r.cc_baseline)).unwrap_or(0.0),
    }
}

/// Runs `trials` trials of `scenario`, every strategy on every band, in
/// parallel on the current rayon pool. Results come back in trial order,
/// each trial's block ordered by band then strategy.
pub fn run_trials(
    scenario: &Scenario,
    trials: usize,
    bands: &[Band],
    strategies: &[Strategy],
) -> Result<Vec<Vec<TrialResult>>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let dep = deploy(scenario, t)?;
            TrialEngine::new(scenario, &dep).run_all(bands, strategies)
        })
        .collect()
}

/// Aggregates for every (band, strategy) of `scenario`.
pub fn evaluate(scenario: &Scenario, trials: usize, bands: &[Band], strategies: &[Strategy]) -> Result<Vec<Aggregate>> {
    let blocks = run_trials(scenario, trials, bands, strategies)?;
    let mut out = Vec::new();
    for (bi, &band) in bands.iter().enumerate() {
        for (si, &strategy) in strategies.iter().enumerate() {
            let k = bi * strategies.len() + si;
            let column: Vec<&TrialResult> = blocks.iter().map(|b| &b[k]).collect();
            out.push(aggregate(strategy, band, &column));
        }
    }
    Ok(out)
}

/// Runs a sweep. Rows are sorted by (axis value, strategy, band); for the
/// `cc_constraint` axis each grid value gives one row holding the selected
/// combination, or strategy `NONE` when no D2D is permitted.
///
/// `workers` sets the thread count (`None`: rayon's default). Output does
/// not depend on it.
pub fn sweep(spec: &SweepSpec, template: &Scenario, workers: Option<usize>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    template.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| sweep_inner(spec, template))
}

fn sweep_inner(spec: &SweepSpec, template: &Scenario) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    if spec.axis == SweepAxis::CcConstraint {
        let aggregates = evaluate(template, spec.trials, &spec.bands, &spec.strategies)?;
        let points: Vec<OperatingPoint> = aggregates.iter().map(Aggregate::operating_point).collect();
        for &c in &spec.grid {
            let choice = select_strategy(c, &points)?;
            rows.push(match choice.chosen {
                Some(p) => {
                    let agg = aggregates
                        .iter()
                        .find(|a| a.strategy == p.strategy && a.band == p.band)
                        .expect("chosen point comes from the aggregates");
                    agg.row(c)
                }
                None => SweepRow {
                    axis_value: c,
                    strategy: "NONE".into(),
                    band: String::new(),
                    trials: spec.trials,
                    d2d_success: None,
                    ci_low: None,
                    ci_high: None,
                    mean_hops: None,
                    mean_route_len_m: None,
                    cc_outage: None,
                    cc_baseline: None,
                },
            });
        }
    } else {
        for &v in &spec.grid {
            let scenario = apply_axis(template, spec.axis, v)?;
            for agg in evaluate(&scenario, spec.trials, &spec.bands, &spec.strategies)? {
                rows.push(agg.row(v));
            }
        }
    }
    rows.sort_by(|a, b| {
        a.axis_value
            .total_cmp(&b.axis_value)
            .then_with(|| a.strategy.cmp(&b.strategy))
            .then_with(|| a.band.cmp(&b.band))
    });
    Ok(rows)
}

pub fn write_rows<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
