//! Lexicographic shortest paths: minimize total length, then maximize
//! charged length.
//!
//! Under a constant driving speed, maximizing time on charging roads among
//! equal-length routes is the same as maximizing charged length, so the
//! driver model is the lexicographic optimum of `(length, -charged)`.
//!
//! Lengths are summed in integer micrometers. Equal-length route families
//! (Manhattan staircases traverse the same segment multiset in different
//! orders) then tie exactly, which makes the two-stage search sound: a
//! Dijkstra pass fixes the shortest length, and a dynamic program over the
//! shortest-path DAG maximizes charged length without ever lengthening the
//! route.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub type NodeId = usize;

/// Convert meters to the integer routing unit (micrometers).
pub fn meters_to_um(m: f64) -> u64 {
    (m * 1e6).round() as u64
}

pub fn um_to_meters(um: u64) -> f64 {
    um as f64 * 1e-6
}

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub to: NodeId,
    pub length_um: u64,
    pub charging: bool,
}

/// Undirected network stored as adjacency lists.
#[derive(Debug, Clone)]
pub struct Network {
    adj: Vec<Vec<Edge>>,
}

impl Network {
    pub fn new(node_count: usize) -> Self {
        Network { adj: vec![Vec::new(); node_count] }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn add_undirected(&mut self, a: NodeId, b: NodeId, length_um: u64, charging: bool) {
        self.adj[a].push(Edge { to: b, length_um, charging });
        self.adj[b].push(Edge { to: a, length_um, charging });
    }

    pub fn neighbors(&self, n: NodeId) -> &[Edge] {
        &self.adj[n]
    }
}

/// A traversed segment of a routed path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentUse {
    pub from: NodeId,
    pub to: NodeId,
    pub length_um: u64,
    pub charging: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedPath {
    pub segments: Vec<SegmentUse>,
    pub length_um: u64,
    pub charged_um: u64,
}

impl RoutedPath {
    pub fn length_m(&self) -> f64 {
        um_to_meters(self.length_um)
    }

    pub fn charged_m(&self) -> f64 {
        um_to_meters(self.charged_um)
    }

    /// Charged percentage of the route; zero-length routes report 0.
    pub fn charged_fraction_pct(&self) -> f64 {
        if self.length_um == 0 {
            0.0
        } else {
            100.0 * self.charged_um as f64 / self.length_um as f64
        }
    }

    /// Distance driven before the route first traverses a positive-length
    /// stretch of a charging road; `None` when it never does.
    pub fn first_charge_distance_um(&self) -> Option<u64> {
        let mut acc = 0u64;
        for seg in &self.segments {
            if seg.charging && seg.length_um > 0 {
                return Some(acc);
            }
            acc += seg.length_um;
        }
        None
    }

    pub fn first_charge_distance_m(&self) -> Option<f64> {
        self.first_charge_distance_um().map(um_to_meters)
    }
}

/// Shortest path from `source` to `target`, charged length maximized among
/// shortest paths. `None` when the two are disconnected.
pub fn shortest_max_charged(net: &Network, source: NodeId, target: NodeId) -> Option<RoutedPath> {
    let n = net.node_count();
    let mut dist = vec![u64::MAX; n];
    let mut heap: BinaryHeap<Reverse<(u64, NodeId)>> = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for e in net.neighbors(v) {
            let nd = d + e.length_um;
            if nd < dist[e.to] {
                dist[e.to] = nd;
                heap.push(Reverse((nd, e.to)));
            }
        }
    }
    if dist[target] == u64::MAX {
        return None;
    }

    // Stage 2: longest charged length over the shortest-path DAG. Nodes are
    // relaxed in increasing distance order, so every DAG predecessor is
    // settled before its successors.
    let mut order: Vec<NodeId> = (0..n).filter(|v| dist[*v] != u64::MAX).collect();
    order.sort_by_key(|v| (dist[*v], *v));
    let mut charged: Vec<Option<u64>> = vec![None; n];
    let mut parent: Vec<Option<(NodeId, Edge)>> = vec![None; n];
    charged[source] = Some(0);
    for &u in &order {
        let Some(cu) = charged[u] else { continue };
        for e in net.neighbors(u) {
            if dist[u] + e.length_um != dist[e.to] {
                continue;
            }
            let cand = cu + if e.charging { e.length_um } else { 0 };
            let better = match charged[e.to] {
                None => true,
                Some(cur) => {
                    // Deterministic tie-break: prefer the smaller parent id.
                    cand > cur
                        || (cand == cur && parent[e.to].map(|(p, _)| u < p).unwrap_or(false))
                }
            };
            if better {
                charged[e.to] = Some(cand);
                parent[e.to] = Some((u, Edge { to: e.to, ..*e }));
            }
        }
    }

    let charged_um = charged[target].expect("target reachable");
    let mut segments = Vec::new();
    let mut v = target;
    while v != source {
        let (p, e) = parent[v].expect("parent chain reaches source");
        segments.push(SegmentUse { from: p, to: v, length_um: e.length_um, charging: e.charging });
        v = p;
    }
    segments.reverse();
    Some(RoutedPath { segments, length_um: dist[target], charged_um })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2x2 block: 0-1 top (maybe charging), 2-3 bottom, verticals 0-2, 1-3.
    fn square(charging_top: bool) -> Network {
        let mut net = Network::new(4);
        net.add_undirected(0, 1, meters_to_um(100.0), charging_top);
        net.add_undirected(2, 3, meters_to_um(100.0), false);
        net.add_undirected(0, 2, meters_to_um(100.0), false);
        net.add_undirected(1, 3, meters_to_um(100.0), false);
        net
    }

    #[test]
    fn picks_charged_route_among_equal_lengths() {
        let net = square(true);
        // 2 -> 1: both two-edge routes are 200 m; the one through node 0
        // uses the charging top edge.
        let path = shortest_max_charged(&net, 2, 1).unwrap();
        assert_eq!(path.length_um, meters_to_um(200.0));
        assert_eq!(path.charged_um, meters_to_um(100.0));
    }

    #[test]
    fn stage_two_never_lengthens() {
        let net = square(false);
        let path = shortest_max_charged(&net, 0, 3).unwrap();
        assert_eq!(path.length_um, meters_to_um(200.0));
        assert_eq!(path.charged_um, 0);
    }

    #[test]
    fn disconnected_returns_none() {
        let mut net = Network::new(4);
        net.add_undirected(0, 1, 10, false);
        net.add_undirected(2, 3, 10, false);
        assert!(shortest_max_charged(&net, 0, 3).is_none());
    }

    #[test]
    fn same_node_is_empty_path() {
        let net = square(true);
        let path = shortest_max_charged(&net, 2, 2).unwrap();
        assert_eq!(path.length_um, 0);
        assert!(path.segments.is_empty());
        assert_eq!(path.charged_fraction_pct(), 0.0);
    }

    #[test]
    fn first_charge_distance_accumulates() {
        let net = square(true);
        let path = shortest_max_charged(&net, 2, 1).unwrap();
        // 2 -> 0 (100 m, plain) -> 1 (100 m, charging).
        assert_eq!(path.first_charge_distance_um(), Some(meters_to_um(100.0)));
        let net = square(false);
        let path = shortest_max_charged(&net, 2, 1).unwrap();
        assert_eq!(path.first_charge_distance_um(), None);
    }

    #[test]
    fn charging_detour_not_taken_when_longer() {
        // Straight plain edge 0-1 of 100 m vs charging dogleg 0-2-1 of 220 m.
        let mut net = Network::new(3);
        net.add_undirected(0, 1, meters_to_um(100.0), false);
        net.add_undirected(0, 2, meters_to_um(110.0), true);
        net.add_undirected(2, 1, meters_to_um(110.0), true);
        let path = shortest_max_charged(&net, 0, 1).unwrap();
        assert_eq!(path.length_um, meters_to_um(100.0));
        assert_eq!(path.charged_um, 0);
    }
}
