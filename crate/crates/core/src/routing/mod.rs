//! Relay graph construction and the three forwarding strategies: greedy
//! shortest-path, interference-aware (via the cell-boundary band) and
//! broadcast flooding.

mod cells;
mod flood;
mod graph;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use cells::{boundary_nodes, BoundaryBand, CellGeometry};
pub use flood::{route_br, BroadcastOutcome};
pub use graph::{
    build_reachability, build_reachability_from_links, estimate_link_success, rayleigh_success, Edge,
    NodeRole, ReachParams, ReachabilityGraph, RelayNode, NEGLIGIBLE_SUCCESS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Spr,
    Iar,
    Br,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Spr, Strategy::Iar, Strategy::Br];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Spr => "SPR",
            Strategy::Iar => "IAR",
            Strategy::Br => "BR",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered hop sequence from source to destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub hops: Vec<usize>,
    pub per_hop_success: Vec<f64>,
    pub total_length_m: f64,
    /// IAR only: boundary-stage hops that had to leave the band.
    pub band_violations: usize,
}

impl Route {
    fn start(node: usize) -> Self {
        Route {
            hops: vec![node],
            per_hop_success: Vec::new(),
            total_length_m: 0.0,
            band_violations: 0,
        }
    }

    /// Number of transmissions `J`.
    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    /// Transmitting nodes, in order.
    pub fn transmitters(&self) -> &[usize] {
        &self.hops[..self.hop_count()]
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.hops.windows(2).map(|w| (w[0], w[1]))
    }

    fn push(&mut self, graph: &ReachabilityGraph, next: usize, success: f64) {
        let last = *self.hops.last().expect("route has a start node");
        self.total_length_m += graph.position(last).distance(graph.position(next));
        self.hops.push(next);
        self.per_hop_success.push(success);
    }

    /// Checks the route invariants against `graph`.
    pub fn is_valid_in(&self, graph: &ReachabilityGraph) -> bool {
        let mut seen = std::collections::HashSet::new();
        if !self.hops.iter().all(|h| seen.insert(*h)) {
            return false;
        }
        if self.per_hop_success.len() != self.hop_count() {
            return false;
        }
        let mut length = 0.0;
        for (k, (u, v)) in self.links().enumerate() {
            match graph.edge(u, v) {
                Some(e) if e.success == self.per_hop_success[k] => {}
                _ => return false,
            }
            length += graph.position(u).distance(graph.position(v));
        }
        (length - self.total_length_m).abs() <= 1e-6 * length.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoRoute {
    /// The start node has no admitted outgoing link.
    Isolated { node: usize },
    /// No unvisited neighbor is closer to the target.
    LocalMinimum { node: usize },
    /// No boundary-band node exists.
    NoBoundary,
    /// An IAR stage (1, 2 or 3) failed.
    Stage { stage: u8, cause: StageFailure },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageFailure {
    Isolated { node: usize },
    LocalMinimum { node: usize },
}

impl fmt::Display for NoRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoRoute::Isolated { node } => write!(f, "node {node} is isolated"),
            NoRoute::LocalMinimum { node } => write!(f, "greedy forwarding stuck at node {node}"),
            NoRoute::NoBoundary => f.write_str("no node lies in the cell-boundary band"),
            NoRoute::Stage { stage, cause } => write!(f, "IAR stage {stage} failed: {cause:?}"),
        }
    }
}

impl std::error::Error for NoRoute {}

impl From<StageFailure> for NoRoute {
    fn from(e: StageFailure) -> Self {
        match e {
            StageFailure::Isolated { node } => NoRoute::Isolated { node },
            StageFailure::LocalMinimum { node } => NoRoute::LocalMinimum { node },
        }
    }
}

/// Greedy geographic forwarding from `src` towards `target`.
///
/// At each node the admitted neighbor closest to `target` is taken, among
/// those strictly closer than the current node. When `band` is given, the
/// choice is first restricted to band members; if none of them makes
/// progress the unrestricted choice is used and counted as a violation.
fn greedy(
    graph: &ReachabilityGraph,
    src: usize,
    target: usize,
    band: Option<&[bool]>,
) -> Result<Route, StageFailure> {
    let mut route = Route::start(src);
    let mut visited = vec![false; graph.len()];
    visited[src] = true;
    let goal = graph.position(target);
    let mut current = src;
    while current != target {
        let here = graph.position(current).distance_sq(goal);
        let pick = |in_band: bool| {
            graph
                .neighbors(current)
                .iter()
                .filter(|e| !visited[e.to])
                .filter(|e| !in_band || e.to == target || band.is_some_and(|b| b[e.to]))
                .map(|e| (graph.position(e.to).distance_sq(goal), e))
                .filter(|(d, _)| *d < here)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.to.cmp(&b.1.to)))
                .map(|(_, e)| *e)
        };
        let next = match band {
            Some(_) => match pick(true) {
                Some(e) => Some(e),
                None => {
                    let e = pick(false);
                    if e.is_some() {
                        route.band_violations += 1;
                    }
                    e
                }
            },
            None => pick(false),
        };
        let Some(edge) = next else {
            return Err(if current == src && graph.neighbors(src).is_empty() {
                StageFailure::Isolated { node: src }
            } else {
                StageFailure::LocalMinimum { node: current }
            });
        };
        visited[edge.to] = true;
        route.push(graph, edge.to, edge.success);
        current = edge.to;
    }
    Ok(route)
}

/// Shortest-path routing: greedy geographic forwarding to `dst`.
pub fn route_spr(graph: &ReachabilityGraph, src: usize, dst: usize) -> Result<Route, NoRoute> {
    greedy(graph, src, dst, None).map_err(NoRoute::from)
}

/// Interference-aware routing in three greedy stages: escape to the
/// boundary node nearest `src`, migrate along the band to the boundary node
/// nearest `dst`, return to `dst`.
///
/// Stage 2 steers towards the stage exit node. If the stages revisit a node
/// the loop between the two visits is cut out.
pub fn route_iar(
    graph: &ReachabilityGraph,
    src: usize,
    dst: usize,
    cells: &CellGeometry,
) -> Result<Route, NoRoute> {
    if src == dst {
        return Ok(Route::start(src));
    }
    let positions: Vec<_> = graph.nodes().iter().map(|n| n.position).collect();
    let band = boundary_nodes(&positions, cells);
    if band.nodes.is_empty() {
        return Err(NoRoute::NoBoundary);
    }
    let nearest = |to: usize| {
        let p = graph.position(to);
        band.nodes
            .iter()
            .copied()
            .min_by(|a, b| {
                graph.position(*a)
                    .distance_sq(p)
                    .total_cmp(&graph.position(*b).distance_sq(p))
                    .then(a.cmp(b))
            })
            .expect("band is non-empty")
    };
    let entry = nearest(src);
    let exit = nearest(dst);
    let mut in_band = vec![false; graph.len()];
    for &b in &band.nodes {
        in_band[b] = true;
    }

    let stage = |k: u8, r: Result<Route, StageFailure>| r.map_err(|cause| NoRoute::Stage { stage: k, cause });
    let legs = [
        stage(1, greedy(graph, src, entry, None))?,
        stage(2, greedy(graph, entry, exit, Some(&in_band)))?,
        stage(3, greedy(graph, exit, dst, None))?,
    ];
    let mut hops = vec![src];
    let mut violations = 0;
    for leg in &legs {
        hops.extend_from_slice(&leg.hops[1..]);
        violations += leg.band_violations;
    }
    let hops = erase_loops(hops);

    let mut route = Route::start(src);
    route.band_violations = violations;
    for w in hops.windows(2) {
        let e = graph.edge(w[0], w[1]).expect("consecutive stage hops are graph edges");
        route.push(graph, w[1], e.success);
    }
    Ok(route)
}

/// Removes cycles from a walk, keeping the first visit of each node and
/// continuing from its last visit.
fn erase_loops(walk: Vec<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(walk.len());
    for node in walk {
        if let Some(pos) = out.iter().position(|&n| n == node) {
            out.truncate(pos + 1);
        } else {
            out.push(node);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Point;

    /// Chain graph where nodes within `reach` meters see each other.
    fn disk_graph(points: &[Point], reach: f64) -> ReachabilityGraph {
        let mut g = ReachabilityGraph::new(RelayNode::from_points(points)).unwrap();
        for u in 0..points.len() {
            for v in 0..points.len() {
                if u != v && points[u].distance(points[v]) <= reach {
                    g.add_edge(u, v, 0.9).unwrap();
                }
            }
        }
        g
    }

    #[test]
    fn same_source_and_destination_is_empty_route() {
        let g = disk_graph(&[Point::new(0.0, 0.0), Point::new(5.0, 0.0)], 10.0);
        let r = route_spr(&g, 0, 0).unwrap();
        assert_eq!(r.hop_count(), 0);
        assert_eq!(r.total_length_m, 0.0);
    }

    #[test]
    fn isolated_source_has_no_route() {
        let g = disk_graph(&[Point::new(0.0, 0.0), Point::new(500.0, 0.0)], 10.0);
        assert_eq!(route_spr(&g, 0, 1), Err(NoRoute::Isolated { node: 0 }));
    }

    /// Every admissible forwarding sequence (strict progress, no revisits),
    /// enumerated by depth-first search; the greedy path must be the one
    /// that always takes the maximal-progress neighbor.
    fn all_progress_paths(g: &ReachabilityGraph, at: usize, dst: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == dst {
            out.push(path.clone());
            return;
        }
        let goal = g.position(dst);
        for e in g.neighbors(at) {
            if !path.contains(&e.to) && g.position(e.to).distance(goal) < g.position(at).distance(goal) {
                path.push(e.to);
                all_progress_paths(g, e.to, dst, path, out);
                path.pop();
            }
        }
    }

    #[test]
    fn colinear_chain_visits_every_node() {
        // src at 0 m, dst at 500 m, relays every 100 m, reach 150 m.
        let mut pts = vec![Point::new(0.0, 0.0), Point::new(500.0, 0.0)];
        pts.extend((1..5).map(|k| Point::new(100.0 * k as f64, 0.0)));
        let g = disk_graph(&pts, 150.0);
        let r = route_spr(&g, 0, 1).unwrap();
        assert_eq!(r.hop_count(), 5);
        assert_eq!(r.hops, vec![0, 2, 3, 4, 5, 1]);
        assert!((r.total_length_m - 500.0).abs() < 1e-9);
        assert!(r.is_valid_in(&g));

        let mut paths = Vec::new();
        all_progress_paths(&g, 0, 1, &mut vec![0], &mut paths);
        assert_eq!(paths, vec![r.hops.clone()]);
    }

    #[test]
    fn greedy_dead_end_is_local_minimum() {
        // Relay ahead of src but nothing reaches dst from it.
        let pts = [Point::new(0.0, 0.0), Point::new(300.0, 0.0), Point::new(100.0, 0.0)];
        let g = disk_graph(&pts, 120.0);
        assert_eq!(route_spr(&g, 0, 1), Err(NoRoute::LocalMinimum { node: 2 }));
    }

    #[test]
    fn loop_erasure() {
        assert_eq!(erase_loops(vec![0, 1, 2, 3, 1, 4]), vec![0, 1, 4]);
        assert_eq!(erase_loops(vec![0, 1, 2]), vec![0, 1, 2]);
    }

    fn two_cell_line() -> (Vec<Point>, CellGeometry) {
        // BSs at x = 0 and x = 400: the boundary is the line x = 200.
        let cells = CellGeometry::new(vec![Point::new(0.0, 0.0), Point::new(400.0, 0.0)], 20.0).unwrap();
        let mut pts = vec![Point::new(200.0, -150.0), Point::new(200.0, 150.0)];
        // Straight interior path along x = 150 and a band path along x = 200.
        for k in -2..=2 {
            pts.push(Point::new(150.0, 60.0 * k as f64));
        }
        for k in -2..=2 {
            pts.push(Point::new(205.0, 60.0 * k as f64 + 5.0));
        }
        (pts, cells)
    }

    #[test]
    fn iar_with_both_ends_on_boundary_stays_in_band() {
        let (pts, cells) = two_cell_line();
        let g = disk_graph(&pts, 100.0);
        let r = route_iar(&g, 0, 1, &cells).unwrap();
        assert!(r.is_valid_in(&g));
        // Stages 1 and 3 are empty, every intermediate hop is a band node.
        let band = boundary_nodes(&pts, &cells).nodes;
        assert!(r.hops.iter().all(|h| band.contains(h)), "{:?}", r.hops);
        assert_eq!(r.band_violations, 0);
    }

    #[test]
    fn iar_falls_back_when_band_is_broken() {
        let (mut pts, cells) = two_cell_line();
        // Push one band node out of the band so stage 2 must leave it once.
        pts[9] = Point::new(150.0, 65.0);
        let g = disk_graph(&pts, 100.0);
        let r = route_iar(&g, 0, 1, &cells).unwrap();
        assert!(r.is_valid_in(&g));
        assert!(r.band_violations >= 1);
    }

    #[test]
    fn iar_without_band_nodes_fails() {
        let cells = CellGeometry::new(vec![Point::new(0.0, 0.0), Point::new(400.0, 0.0)], 1.0).unwrap();
        let pts = [Point::new(10.0, 0.0), Point::new(60.0, 0.0)];
        let g = disk_graph(&pts, 100.0);
        assert_eq!(route_iar(&g, 0, 1, &cells), Err(NoRoute::NoBoundary));
    }
}
