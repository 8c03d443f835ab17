//! Line-arrangement graphs: intersections of the sampled lines become
//! vertices, stretches between adjacent intersections become edges, and
//! trip endpoints split the edges of the lines they sit on.

use crate::geom::Point;
use crate::route::{Network, NodeId};

/// One road line: signed axis offset plus charging mark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrLine {
    pub coord: f64,
    pub charging: bool,
}

/// Reference to a line of the arrangement by axis and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineRef {
    Vertical(usize),
    Horizontal(usize),
}

#[derive(Debug)]
pub struct Arrangement {
    pub net: Network,
    /// Node ids of the requested endpoints, in input order.
    pub endpoints: Vec<NodeId>,
}

fn quantize(m: f64) -> i64 {
    (m * 1e6).round() as i64
}

/// Build the arrangement over the given lines with `endpoints` pinned to
/// specific lines. Endpoint positions are the coordinate along the line's
/// own axis (x for horizontal lines, y for vertical ones).
pub fn build(
    vertical: &[ArrLine],
    horizontal: &[ArrLine],
    endpoints: &[(LineRef, Point)],
) -> Arrangement {
    let nv = vertical.len();
    let nh = horizontal.len();
    let grid = |i: usize, j: usize| -> NodeId { i * nh + j };
    let mut next_node = nv * nh;

    // Stations along each line: (quantized position, node id).
    let mut v_stations: Vec<Vec<(i64, NodeId)>> = (0..nv)
        .map(|i| horizontal.iter().enumerate().map(|(j, h)| (quantize(h.coord), grid(i, j))).collect())
        .collect();
    let mut h_stations: Vec<Vec<(i64, NodeId)>> = (0..nh)
        .map(|j| vertical.iter().enumerate().map(|(i, v)| (quantize(v.coord), grid(i, j))).collect())
        .collect();

    let mut endpoint_nodes = Vec::with_capacity(endpoints.len());
    for (line, point) in endpoints {
        let (stations, pos) = match line {
            LineRef::Vertical(i) => (&mut v_stations[*i], quantize(point.y)),
            LineRef::Horizontal(j) => (&mut h_stations[*j], quantize(point.x)),
        };
        // Reuse a coincident station (an intersection or an earlier
        // endpoint) instead of stacking zero-length edges.
        if let Some((_, node)) = stations.iter().find(|(p, _)| *p == pos) {
            endpoint_nodes.push(*node);
        } else {
            let node = next_node;
            next_node += 1;
            stations.push((pos, node));
            endpoint_nodes.push(node);
        }
    }

    let mut net = Network::new(next_node);
    let mut add_line = |stations: &mut Vec<(i64, NodeId)>, charging: bool| {
        stations.sort_unstable();
        for pair in stations.windows(2) {
            let (pa, a) = pair[0];
            let (pb, b) = pair[1];
            net.add_undirected(a, b, (pb - pa) as u64, charging);
        }
    };
    for (i, line) in vertical.iter().enumerate() {
        add_line(&mut v_stations[i], line.charging);
    }
    for (j, line) in horizontal.iter().enumerate() {
        add_line(&mut h_stations[j], line.charging);
    }

    Arrangement { net, endpoints: endpoint_nodes }
}
