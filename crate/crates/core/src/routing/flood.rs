use super::graph::ReachabilityGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastOutcome {
    pub reached: bool,
    /// Nodes that broadcast (each at most once).
    pub transmissions: usize,
    /// Ripple index at which `dst` first received the data.
    pub hop_depth: Option<usize>,
    /// Broadcasting nodes in ripple order.
    pub broadcasters: Vec<usize>,
}

/// Flooding: `src` broadcasts, and every node rebroadcasts once on first
/// reception. The flood runs to exhaustion rather than stopping at `dst`.
pub fn route_br(graph: &ReachabilityGraph, src: usize, dst: usize) -> BroadcastOutcome {
    if src == dst {
        return BroadcastOutcome {
            reached: true,
            transmissions: 0,
            hop_depth: Some(0),
            broadcasters: Vec::new(),
        };
    }
    let mut received = vec![false; graph.len()];
    received[src] = true;
    let mut wave = vec![src];
    let mut broadcasters = Vec::new();
    let mut hop_depth = None;
    let mut depth = 0;
    while !wave.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for &node in &wave {
            broadcasters.push(node);
            for e in graph.neighbors(node) {
                if !received[e.to] {
                    received[e.to] = true;
                    if e.to == dst {
                        hop_depth = Some(depth);
                    }
                    next.push(e.to);
                }
            }
        }
        wave = next;
    }
    BroadcastOutcome {
        reached: hop_depth.is_some(),
        transmissions: broadcasters.len(),
        hop_depth,
        broadcasters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Point;
    use crate::routing::RelayNode;

    fn graph(n: usize, edges: &[(usize, usize)]) -> ReachabilityGraph {
        let pts: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
        let mut g = ReachabilityGraph::new(RelayNode::from_points(&pts)).unwrap();
        for &(u, v) in edges {
            g.add_edge(u, v, 1.0).unwrap();
        }
        g
    }

    #[test]
    fn adjacent_destination_at_depth_one() {
        let g = graph(3, &[(0, 1), (0, 2), (2, 0)]);
        let out = route_br(&g, 0, 1);
        assert!(out.reached);
        assert_eq!(out.hop_depth, Some(1));
        assert_eq!(out.transmissions, 3);
    }

    #[test]
    fn disconnected_destination_floods_component() {
        // Component {0, 2, 3, 4}; node 1 unreachable.
        let g = graph(6, &[(0, 2), (2, 3), (3, 4), (4, 0), (5, 1)]);
        let out = route_br(&g, 0, 1);
        assert!(!out.reached);
        assert_eq!(out.hop_depth, None);
        assert_eq!(out.transmissions, 4);
    }

    #[test]
    fn depth_is_shortest_hop_count() {
        let g = graph(5, &[(0, 2), (2, 3), (3, 1), (0, 4), (4, 1)]);
        assert_eq!(route_br(&g, 0, 1).hop_depth, Some(2));
    }
}
