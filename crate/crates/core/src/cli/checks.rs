//! Oracle suites run by the `validate` subcommand.

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;

use crate::analytics::{
    a_function_alpha4, a_function_quadrature, d2d_route_outage, validate_cc_closed_form, HopOutageProfile, SgParams,
};
use crate::env::Point;
use crate::error::Result;
use crate::routing::{route_br, ReachabilityGraph, RelayNode};
use crate::seeds::Seed;

pub const A_FUNCTION_TOL: f64 = 1e-9;
pub const PPP_TOL: f64 = 0.01;
pub const ROUTE_OUTAGE_TOL: f64 = 1e-12;

/// Threshold grid (dB) for the interference-integral check.
pub const A_GRID_DB: [f64; 7] = [-10.0, -6.0, -3.0, 0.0, 3.0, 6.0, 10.0];
pub const PPP_DENSITIES_KM2: [f64; 3] = [1.0, 3.0, 5.0];
pub const PPP_DISTANCES_M: [f64; 3] = [100.0, 200.0, 300.0];
pub const PPP_THRESHOLD_DB: f64 = -6.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub worst_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckReport {
    fn new(name: &str, gaps: &[f64], tolerance: f64) -> Self {
        let worst_gap = gaps.iter().copied().fold(0.0, f64::max);
        CheckReport {
            name: name.into(),
            cases: gaps.len(),
            worst_gap,
            tolerance,
            passed: gaps.iter().all(|g| *g < tolerance),
        }
    }
}

/// Quadrature of the interference integral against `√ζ·arctan√ζ`.
pub fn check_a_function() -> Result<CheckReport> {
    let gaps = A_GRID_DB
        .iter()
        .map(|db| {
            let z = 10f64.powf(db / 10.0);
            Ok((a_function_quadrature(z, 4.0)? - a_function_alpha4(z)).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckReport::new("a_function", &gaps, A_FUNCTION_TOL))
}

/// Downlink coverage law against the Poisson-field simulation.
pub fn check_ppp(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut gaps = Vec::new();
    for (i, &lambda) in PPP_DENSITIES_KM2.iter().enumerate() {
        let params = SgParams::from_km2_db(lambda, 4.0, PPP_THRESHOLD_DB)?;
        for (j, &r) in PPP_DISTANCES_M.iter().enumerate() {
            let s = Seed(seed).pair(i as u64, j as u64).0;
            gaps.push(validate_cc_closed_form(&params, r, trials, s)?.abs_gap);
        }
    }
    Ok(CheckReport::new("cc_coverage_ppp", &gaps, PPP_TOL))
}

/// Route outage by enumerating every success/failure pattern of the hops.
pub fn route_outage_brute_force(per_hop_outage: &[f64]) -> f64 {
    let j = per_hop_outage.len();
    let mut outage = 0.0;
    for mask in 0..(1u32 << j) {
        if mask == (1 << j) - 1 {
            continue;
        }
        let p: f64 = per_hop_outage
            .iter()
            .enumerate()
            .map(|(k, q)| if mask & (1 << k) != 0 { 1.0 - q } else { *q })
            .product();
        outage += p;
    }
    outage
}

pub fn check_route_outage(profiles: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = Seed(seed).label("route-outage").rng();
    let mut gaps = Vec::with_capacity(profiles);
    for _ in 0..profiles {
        let j = rng.random_range(1..=10);
        let p: Vec<f64> = (0..j).map(|_| rng.random::<f64>()).collect();
        let closed = d2d_route_outage(&HopOutageProfile::new(p.clone())?);
        gaps.push((closed - route_outage_brute_force(&p)).abs());
    }
    Ok(CheckReport::new("route_outage", &gaps, ROUTE_OUTAGE_TOL))
}

/// Random directed graph with `n` nodes and edge probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Result<ReachabilityGraph> {
    let points: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
    let mut g = ReachabilityGraph::new(RelayNode::from_points(&points))?;
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random::<f64>() < p {
                g.add_edge(u, v, rng.random::<f64>())?;
            }
        }
    }
    Ok(g)
}

pub fn bfs_reaches(g: &ReachabilityGraph, src: usize, dst: usize) -> bool {
    let mut seen = vec![false; g.len()];
    let mut queue = VecDeque::from([src]);
    seen[src] = true;
    while let Some(u) = queue.pop_front() {
        if u == dst {
            return true;
        }
        for e in g.neighbors(u) {
            if !seen[e.to] {
                seen[e.to] = true;
                queue.push_back(e.to);
            }
        }
    }
    false
}

/// Flooding reachability against breadth-first search. The gap of a case
/// is 1 on disagreement.
pub fn check_broadcast(graphs: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = Seed(seed).label("broadcast").rng();
    let mut gaps = Vec::with_capacity(graphs);
    for _ in 0..graphs {
        let n = rng.random_range(2..=40);
        let p = rng.random_range(0.01..0.3);
        let g = random_graph(&mut rng, n, p)?;
        let agree = route_br(&g, 0, 1).reached == bfs_reaches(&g, 0, 1);
        gaps.push(if agree { 0.0 } else { 1.0 });
    }
    Ok(CheckReport::new("broadcast_bfs", &gaps, 0.5))
}

pub fn run_all(ppp_trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    Ok(vec![
        check_a_function()?,
        check_ppp(ppp_trials, seed)?,
        check_route_outage(50, seed)?,
        check_broadcast(200, seed)?,
    ])
}
