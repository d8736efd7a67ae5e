use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, LinkTable};
use crate::env::{Point, UrbanMap};
use crate::error::{Error, Result};
use crate::seeds::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Source,
    Relay,
    Destination,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayNode {
    pub id: usize,
    pub position: Point,
    pub role: NodeRole,
}

impl RelayNode {
    /// Nodes for `[src, dst, relays...]`; ids follow list order.
    pub fn from_points(points: &[Point]) -> Vec<RelayNode> {
        points
            .iter()
            .enumerate()
            .map(|(id, &position)| RelayNode {
                id,
                position,
                role: match id {
                    0 => NodeRole::Source,
                    1 => NodeRole::Destination,
                    _ => NodeRole::Relay,
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub to: usize,
    pub success: f64,
}

/// Link-admission parameters for building the relay graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachParams {
    pub tx_power_w: f64,
    /// Linear SINR threshold.
    pub threshold: f64,
    pub noise_power_w: f64,
    pub fading_samples: usize,
    /// Minimum estimated success probability for a link to become an edge.
    pub admit_probability: f64,
}

/// Pairs whose exact success probability is below this are not sampled;
/// their fading estimate is zero with overwhelming probability.
pub const NEGLIGIBLE_SUCCESS: f64 = 1e-6;

/// Directed relay graph; edge `u -> v` carries the estimated probability
/// that `u` is decoded at `v`.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    nodes: Vec<RelayNode>,
    adjacency: Vec<Vec<Edge>>,
}

impl ReachabilityGraph {
    pub fn new(nodes: Vec<RelayNode>) -> Result<Self> {
        if let Some((i, n)) = nodes.iter().enumerate().find(|(i, n)| n.id != *i) {
            return Err(Error::Domain(format!("node at index {i} has id {}", n.id)));
        }
        let adjacency = vec![Vec::new(); nodes.len()];
        Ok(ReachabilityGraph { nodes, adjacency })
    }

    pub fn add_edge(&mut self, from: usize, to: usize, success: f64) -> Result<()> {
        if from >= self.nodes.len() || to >= self.nodes.len() || from == to {
            return Err(Error::Domain(format!("invalid edge {from} -> {to}")));
        }
        if !(0.0..=1.0).contains(&success) {
            return Err(Error::Domain(format!("edge success {success} is not a probability")));
        }
        self.adjacency[from].push(Edge { to, success });
        Ok(())
    }

    pub fn nodes(&self) -> &[RelayNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, id: usize) -> Point {
        self.nodes[id].position
    }

    pub fn neighbors(&self, id: usize) -> &[Edge] {
        &self.adjacency[id]
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.adjacency[from].iter().find(|e| e.to == to)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }
}

/// Estimated `P(γ_uv > ζ)` for a Rayleigh-faded link of mean received power
/// `mean_signal_w` against constant noise plus interference, from `samples`
/// fading draws.
///
/// A unit-mean exponential gain exceeds `t` iff a uniform `U` falls below
/// `exp(-t)`, which is what is counted.
pub fn estimate_link_success<R: Rng>(
    mean_signal_w: f64,
    noise_plus_interference_w: f64,
    threshold: f64,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let p = rayleigh_success(mean_signal_w, noise_plus_interference_w, threshold);
    if p < NEGLIGIBLE_SUCCESS || samples == 0 {
        return 0.0;
    }
    let hits = (0..samples).filter(|_| rng.random::<f64>() < p).count();
    hits as f64 / samples as f64
}

/// Exact Rayleigh success `exp(-ζ (N + I) / S)`.
pub fn rayleigh_success(mean_signal_w: f64, noise_plus_interference_w: f64, threshold: f64) -> f64 {
    if noise_plus_interference_w <= 0.0 {
        return 1.0;
    }
    if mean_signal_w <= 0.0 {
        return 0.0;
    }
    (-threshold * noise_plus_interference_w / mean_signal_w).exp()
}

/// Builds the relay graph from precomputed pairwise losses.
///
/// `interference_w[v]` is the expected ambient interference at node `v`.
/// Fading draws for the ordered pair `(u, v)` come from `seed.pair(u, v)`.
pub fn build_reachability_from_links(
    nodes: Vec<RelayNode>,
    links: &LinkTable,
    params: &ReachParams,
    interference_w: &[f64],
    seed: Seed,
) -> Result<ReachabilityGraph> {
    let n = nodes.len();
    if links.len() != n || interference_w.len() != n {
        return Err(Error::Domain(format!(
            "{n} nodes but {} link rows and {} interference samples",
            links.len(),
            interference_w.len()
        )));
    }
    if params.fading_samples == 0 {
        return Err(Error::Domain("need at least one fading sample".into()));
    }
    let mut graph = ReachabilityGraph::new(nodes)?;
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let signal = links.mean_rx_w(u, v, params.tx_power_w);
            let mut rng = seed.pair(u as u64, v as u64).fast_rng();
            let success = estimate_link_success(
                signal,
                params.noise_power_w + interference_w[v],
                params.threshold,
                params.fading_samples,
                &mut rng,
            );
            if success > 0.0 && success >= params.admit_probability {
                graph.adjacency[u].push(Edge { to: v, success });
            }
        }
    }
    Ok(graph)
}

/// Builds the relay graph straight from node positions on a map.
#[allow(clippy::too_many_arguments)]
pub fn build_reachability(
    nodes: Vec<RelayNode>,
    map: &UrbanMap,
    channel: &ChannelModel,
    params: &ReachParams,
    interference_w: &[f64],
    seed: Seed,
) -> Result<ReachabilityGraph> {
    if let Some(n) = nodes.iter().find(|n| !map.is_outdoor(n.position)) {
        return Err(Error::Domain(format!("node {} is indoors", n.id)));
    }
    let points: Vec<Point> = nodes.iter().map(|n| n.position).collect();
    let links = LinkTable::compute(&points, map, channel, seed.label("shadow"));
    build_reachability_from_links(nodes, &links, params, interference_w, seed.label("fading"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(threshold: f64) -> ReachParams {
        ReachParams {
            tx_power_w: 0.1,
            threshold,
            noise_power_w: ChannelModel::default().noise_power_w,
            fading_samples: 64,
            admit_probability: 0.5,
        }
    }

    #[test]
    fn adjacent_nodes_connect() {
        let map = UrbanMap::empty(100.0, 100.0).unwrap();
        let nodes = RelayNode::from_points(&[Point::new(10.0, 10.0), Point::new(11.0, 10.0)]);
        let g = build_reachability(nodes, &map, &ChannelModel::default(), &params(0.25), &[0.0, 0.0], Seed(1))
            .unwrap();
        let e = g.edge(0, 1).unwrap();
        assert!(e.success > 0.99);
        assert!(g.edge(1, 0).is_some());
    }

    #[test]
    fn overwhelming_interference_removes_edges() {
        let map = UrbanMap::empty(100.0, 100.0).unwrap();
        let nodes = RelayNode::from_points(&[Point::new(10.0, 10.0), Point::new(60.0, 10.0)]);
        let g = build_reachability(nodes, &map, &ChannelModel::default(), &params(0.25), &[1.0, 1.0], Seed(1))
            .unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn indoor_node_rejected() {
        let map = UrbanMap::new(
            100.0,
            100.0,
            10.0,
            vec![crate::env::Building::rectangle(0.0, 0.0, 20.0, 20.0).unwrap()],
        )
        .unwrap();
        let nodes = RelayNode::from_points(&[Point::new(10.0, 10.0), Point::new(60.0, 10.0)]);
        assert!(build_reachability(nodes, &map, &ChannelModel::default(), &params(0.25), &[0.0, 0.0], Seed(1)).is_err());
    }

    #[test]
    fn success_estimator_tracks_closed_form() {
        // Constant interference I: P(h S > ζ (N + I)) = exp(-ζ (N + I) / S).
        let (signal, ni, zeta) = (1e-9, 2e-9, 0.251_188_643_150_958);
        let exact = rayleigh_success(signal, ni, zeta);
        let samples = 20_000;
        let mut rng = Seed(99).fast_rng();
        let est = estimate_link_success(signal, ni, zeta, samples, &mut rng);
        let sigma = (exact * (1.0 - exact) / samples as f64).sqrt();
        assert!((est - exact).abs() < 3.0 * sigma, "{est} vs {exact}");
    }
}
