use rand::Rng;
use serde::Serialize;

use super::deploy::{sample_in_cell, Deployment};
use super::scenario::{Band, Scenario};
use crate::channel::{db_to_linear, draw_fading, draw_shadowing, LinkTable};
use crate::env::Point;
use crate::error::Result;
use crate::routing::{
    build_reachability_from_links, rayleigh_success, route_iar, route_spr, ReachParams, ReachabilityGraph,
    RelayNode, Strategy, NEGLIGIBLE_SUCCESS,
};
use crate::seeds::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum D2dOutcome {
    Success,
    RouteFailure,
    LinkOutage,
}

impl D2dOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            D2dOutcome::Success => "success",
            D2dOutcome::RouteFailure => "route-failure",
            D2dOutcome::LinkOutage => "link-outage",
        }
    }
}

/// One trial's outcome for one (strategy, band).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub band: Band,
    pub strategy: Strategy,
    pub outcome: D2dOutcome,
    /// Hop count of the route (BR: ripple depth at which `dst` was reached).
    pub hops: Option<usize>,
    pub route_length_m: Option<f64>,
    /// Realized per-hop decoding results, in route order.
    pub hop_success: Vec<bool>,
    /// D2D transmissions that actually took place.
    pub transmissions: usize,
    pub cc_outage: f64,
    pub cc_baseline: f64,
}

impl TrialResult {
    pub fn succeeded(&self) -> bool {
        self.outcome == D2dOutcome::Success
    }
}

/// Loss in dB between two points. Links with a rooftop BS end use the NLOS
/// law and no wall penetration: the signal diffracts over the roofs rather
/// than through the walls the plan-view ray happens to cross.
fn link_loss_db(scenario: &Scenario, a: Point, b: Point, bs_link: bool, shadow_db: f64) -> f64 {
    let d = a.distance(b);
    if bs_link && scenario.bs.rooftop {
        return scenario.channel.distance_loss_db(d, false) + shadow_db;
    }
    let (count, walls) = scenario.map.wall_crossing_total(a, b);
    scenario.channel.distance_loss_db(d, count == 0) + walls + shadow_db
}

/// Band-independent state of a trial: the D2D pairwise losses.
pub struct TrialEngine<'a> {
    scenario: &'a Scenario,
    deployment: &'a Deployment,
    links: LinkTable,
}

impl<'a> TrialEngine<'a> {
    pub fn new(scenario: &'a Scenario, deployment: &'a Deployment) -> Self {
        let links = LinkTable::compute(
            &deployment.d2d,
            &scenario.map,
            &scenario.channel,
            deployment.seed.label("shadow"),
        );
        TrialEngine { scenario, deployment, links }
    }

    pub fn links(&self) -> &LinkTable {
        &self.links
    }

    /// Interference field, relay graph and CC probes for `band`.
    pub fn band(&self, band: Band) -> Result<BandTrial<'_>> {
        let s = self.scenario;
        let dep = self.deployment;
        let seed = dep.seed.label(band.as_str());
        let (sources, power, bs_link) = cc_transmitters(s, dep, band);

        let shadow = seed.label("shadow-cc");
        let field: Vec<Vec<f64>> = dep
            .d2d
            .iter()
            .enumerate()
            .map(|(v, &p)| {
                sources
                    .iter()
                    .enumerate()
                    .map(|(k, &q)| {
                        let sh = draw_shadowing(&mut shadow.pair(k as u64, v as u64).fast_rng(), s.channel.shadow_sigma_db);
                        power * db_to_linear(-link_loss_db(s, q, p, bs_link, sh))
                    })
                    .collect()
            })
            .collect();
        let total: Vec<f64> = field.iter().map(|f| f.iter().sum()).collect();

        let params = ReachParams {
            tx_power_w: s.d2d.power_w,
            threshold: s.d2d.threshold_linear(),
            noise_power_w: s.channel.noise_power_w,
            fading_samples: s.d2d.fading_samples,
            admit_probability: s.d2d.admit_probability,
        };
        let graph = build_reachability_from_links(
            RelayNode::from_points(&dep.d2d),
            &self.links,
            &params,
            &total,
            seed.label("graph"),
        )?;
        let probes = ProbeSet::draw(s, dep, band, seed.label("cc-probe"))?;
        Ok(BandTrial {
            engine: self,
            band,
            seed,
            field,
            graph,
            probes,
            probe_gain: std::cell::RefCell::new(vec![None; dep.d2d.len()]),
        })
    }

    /// Results for each strategy on each band, sharing all draws.
    pub fn run_all(&self, bands: &[Band], strategies: &[Strategy]) -> Result<Vec<TrialResult>> {
        let mut out = Vec::with_capacity(bands.len() * strategies.len());
        for &band in bands {
            let bt = self.band(band)?;
            for &strategy in strategies {
                out.push(bt.run(strategy));
            }
        }
        Ok(out)
    }
}

/// Active co-channel CC transmitters in `band`, their power, and whether
/// they are BS sites.
fn cc_transmitters(s: &Scenario, dep: &Deployment, band: Band) -> (Vec<Point>, f64, bool) {
    match band {
        Band::Dl => (dep.bs().to_vec(), s.bs.bs_power_w, true),
        Band::Ul => (dep.cc_ues.clone(), s.bs.cc_ue_power_w, false),
    }
}

/// Victim cellular links in the centre cell, each with quasi-static fading
/// over one D2D session.
#[derive(Debug, Clone)]
struct Probe {
    /// Where the victim signal is decoded.
    rx: Point,
    rx_is_bs: bool,
    /// Per fading draw: allowed extra interference before outage
    /// (negative when the link is already in outage).
    margins_w: Vec<f64>,
    shadow_seed: Seed,
    fading_seed: Seed,
}

#[derive(Debug, Clone)]
struct ProbeSet {
    probes: Vec<Probe>,
    baseline: f64,
}

impl ProbeSet {
    fn draw(s: &Scenario, dep: &Deployment, band: Band, seed: Seed) -> Result<ProbeSet> {
        let mut rng = seed.label("position").rng();
        let mut probes = Vec::with_capacity(s.d2d.cc_probes);
        for k in 0..s.d2d.cc_probes {
            let ue = sample_in_cell(&s.bs, &dep.cells, 0, &s.map, &mut rng)?;
            probes.push(probe_at(s, dep, band, ue, s.d2d.cc_fading_draws, seed.child(k as u64)));
        }
        let baseline = outage_fraction(probes.iter().flat_map(|p| p.margins_w.iter()).map(|&m| m < 0.0));
        Ok(ProbeSet { probes, baseline })
    }
}

fn outage_fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut hits, mut n) = (0usize, 0usize);
    for f in flags {
        hits += f as usize;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

/// Victim link for a CC UE at `ue` in the centre cell. DL: centre BS to
/// `ue` against the other sites. UL: `ue` to the centre BS against the
/// other cells' active uplink UEs.
fn probe_at(s: &Scenario, dep: &Deployment, band: Band, ue: Point, draws: usize, seed: Seed) -> Probe {
    let bs = dep.bs()[0];
    let sigma = s.channel.shadow_sigma_db;
    let mut rng = seed.label("draws").fast_rng();
    let signal_sh = draw_shadowing(&mut rng, sigma);
    let (signal_power, interferers, interferer_power, rx, rx_is_bs) = match band {
        Band::Dl => (s.bs.bs_power_w, &dep.bs()[1..], s.bs.bs_power_w, ue, false),
        Band::Ul => (s.bs.cc_ue_power_w, &dep.cc_ues[1..], s.bs.cc_ue_power_w, bs, true),
    };
    let tx = if band == Band::Dl { bs } else { ue };
    let mean_signal = signal_power * db_to_linear(-link_loss_db(s, tx, rx, true, signal_sh));
    let mean_interf: Vec<f64> = interferers
        .iter()
        .map(|&q| {
            let sh = draw_shadowing(&mut rng, sigma);
            interferer_power * db_to_linear(-link_loss_db(s, q, rx, true, sh))
        })
        .collect();
    let threshold = s.d2d.threshold_linear();
    let margins_w = (0..draws)
        .map(|_| {
            let signal = mean_signal * draw_fading(&mut rng);
            let interference: f64 = mean_interf.iter().map(|m| m * draw_fading(&mut rng)).sum();
            signal / threshold - s.channel.noise_power_w - interference
        })
        .collect();
    Probe {
        rx,
        rx_is_bs,
        margins_w,
        shadow_seed: seed.label("d2d-shadow"),
        fading_seed: seed.label("d2d-fading"),
    }
}

/// Per-band state of a trial.
pub struct BandTrial<'a> {
    engine: &'a TrialEngine<'a>,
    band: Band,
    seed: Seed,
    /// `field[v][k]`: mean power of CC interferer `k` at D2D node `v`.
    field: Vec<Vec<f64>>,
    graph: ReachabilityGraph,
    probes: ProbeSet,
    /// Per D2D node: per probe and draw, its faded power at the victim receiver.
    probe_gain: std::cell::RefCell<Vec<Option<Vec<Vec<f64>>>>>,
}

impl BandTrial<'_> {
    pub fn graph(&self) -> &ReachabilityGraph {
        &self.graph
    }

    pub fn cc_baseline(&self) -> f64 {
        self.probes.baseline
    }

    /// Realized decoding of `u`'s transmission at `v`: Rayleigh signal
    /// against faded CC interferers and noise. The draw depends only on the
    /// trial, band and ordered pair, so strategies see the same channel.
    pub fn hop_succeeds(&self, u: usize, v: usize) -> bool {
        let s = self.engine.scenario;
        let threshold = s.d2d.threshold_linear();
        let mean = self.engine.links.mean_rx_w(u, v, s.d2d.power_w);
        if rayleigh_success(mean, s.channel.noise_power_w, threshold) < NEGLIGIBLE_SUCCESS {
            return false;
        }
        let mut rng = self.seed.label("hop").pair(u as u64, v as u64).fast_rng();
        let signal = mean * draw_fading(&mut rng);
        let interference: f64 = self.field[v].iter().map(|m| m * draw_fading(&mut rng)).sum();
        signal >= threshold * (s.channel.noise_power_w + interference)
    }

    /// Fraction of victim draws in outage when `transmitters` each transmit
    /// in their own slot: a draw is in outage if any slot drives it there.
    pub fn cc_outage(&self, transmitters: &[usize]) -> f64 {
        let mut cache = self.probe_gain.borrow_mut();
        for &t in transmitters {
            if cache[t].is_none() {
                cache[t] = Some(self.victim_powers(t));
            }
        }
        let mut flags = Vec::new();
        for (k, probe) in self.probes.probes.iter().enumerate() {
            for (d, &margin) in probe.margins_w.iter().enumerate() {
                let hit = margin < 0.0
                    || transmitters
                        .iter()
                        .any(|&t| cache[t].as_ref().expect("filled above")[k][d] > margin);
                flags.push(hit);
            }
        }
        outage_fraction(flags.into_iter())
    }

    fn victim_powers(&self, t: usize) -> Vec<Vec<f64>> {
        let s = self.engine.scenario;
        let from = self.engine.deployment.d2d[t];
        self.probes
            .probes
            .iter()
            .map(|probe| {
                let sh = draw_shadowing(&mut probe.shadow_seed.child(t as u64).fast_rng(), s.channel.shadow_sigma_db);
                let mean = if from == probe.rx {
                    f64::INFINITY
                } else {
                    s.d2d.power_w * db_to_linear(-link_loss_db(s, from, probe.rx, probe.rx_is_bs, sh))
                };
                let mut rng = probe.fading_seed.child(t as u64).fast_rng();
                probe.margins_w.iter().map(|_| mean * draw_fading(&mut rng)).collect()
            })
            .collect()
    }

    pub fn run(&self, strategy: Strategy) -> TrialResult {
        let dep = self.engine.deployment;
        let (src, dst) = (0, 1);
        let mut result = TrialResult {
            trial_index: dep.trial_index,
            band: self.band,
            strategy,
            outcome: D2dOutcome::RouteFailure,
            hops: None,
            route_length_m: None,
            hop_success: Vec::new(),
            transmissions: 0,
            cc_outage: self.cc_baseline(),
            cc_baseline: self.cc_baseline(),
        };
        let route = match strategy {
            Strategy::Spr => route_spr(&self.graph, src, dst),
            Strategy::Iar => route_iar(&self.graph, src, dst, &dep.cells),
            Strategy::Br => {
                self.flood(&mut result);
                return result;
            }
        };
        let Ok(route) = route else {
            return result;
        };
        result.hops = Some(route.hop_count());
        result.route_length_m = Some(route.total_length_m);
        let mut active = Vec::new();
        for (u, v) in route.links() {
            let ok = self.hop_succeeds(u, v);
            active.push(u);
            result.hop_success.push(ok);
            if !ok {
                break;
            }
        }
        result.transmissions = active.len();
        result.outcome = if result.hop_success.iter().all(|&b| b) && result.hop_success.len() == route.hop_count() {
            D2dOutcome::Success
        } else {
            D2dOutcome::LinkOutage
        };
        result.cc_outage = self.cc_outage(&active);
        result
    }

    /// Flooding over the realized channel: every node that decodes the data
    /// rebroadcasts once, until no new node decodes.
    fn flood(&self, result: &mut TrialResult) {
        let n = self.graph.len();
        let links = &self.engine.links;
        let mut parent = vec![usize::MAX; n];
        let mut depth = vec![0usize; n];
        parent[0] = 0;
        let mut wave = vec![0usize];
        let mut broadcasters = Vec::new();
        while !wave.is_empty() {
            let mut next = Vec::new();
            for &u in &wave {
                broadcasters.push(u);
                for v in 0..n {
                    if parent[v] == usize::MAX && self.hop_succeeds(u, v) {
                        parent[v] = u;
                        depth[v] = depth[u] + 1;
                        next.push(v);
                    }
                }
            }
            wave = next;
        }
        result.transmissions = broadcasters.len();
        result.cc_outage = self.cc_outage(&broadcasters);
        if parent[1] == usize::MAX {
            result.outcome = D2dOutcome::RouteFailure;
            return;
        }
        let mut length = 0.0;
        let mut v = 1;
        while v != 0 {
            length += links.distance_m(parent[v], v);
            v = parent[v];
        }
        result.outcome = D2dOutcome::Success;
        result.hops = Some(depth[1]);
        result.route_length_m = Some(length);
        result.hop_success = vec![true; depth[1]];
    }
}

/// Trial `trial_index` of `scenario` for its configured band and strategy.
pub fn run_trial(deployment: &Deployment, scenario: &Scenario) -> Result<TrialResult> {
    let engine = TrialEngine::new(scenario, deployment);
    Ok(engine.band(scenario.band)?.run(scenario.strategy))
}

/// Victim outage with no D2D active, over `trials` probe draws (positions
/// uniform in the centre cell, one fading draw each).
pub fn cc_baseline(deployment: &Deployment, scenario: &Scenario, trials: usize) -> Result<f64> {
    let seed = deployment.seed.label("cc-baseline");
    let mut rng = seed.label("position").rng();
    let mut flags = Vec::with_capacity(trials);
    for k in 0..trials {
        let ue = sample_in_cell(&scenario.bs, &deployment.cells, 0, &scenario.map, &mut rng)?;
        let probe = probe_at(scenario, deployment, scenario.band, ue, 1, seed.child(k as u64));
        flags.push(probe.margins_w[0] < 0.0);
    }
    Ok(outage_fraction(flags.into_iter()))
}

/// Victim outage with no D2D active for a CC UE fixed at `ue`, over `draws`
/// independent shadowing and fading draws.
pub fn cc_baseline_at<R: Rng>(
    deployment: &Deployment,
    scenario: &Scenario,
    ue: Point,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let flags = (0..draws).map(|_| {
        let probe = probe_at(scenario, deployment, scenario.band, ue, 1, Seed(rng.random()));
        probe.margins_w[0] < 0.0
    });
    outage_fraction(flags)
}
