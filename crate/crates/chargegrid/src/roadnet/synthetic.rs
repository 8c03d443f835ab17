//! Synthetic road graphs and trip logs, stand-ins for proprietary traffic
//! datasets in tests, fixtures, and strategy comparisons.

use rand::Rng;

use super::{RawEdge, RoadGraph};
use crate::geom::Point;
use crate::rng;

/// Regular grid centered on the origin: `rows x cols` nodes spaced
/// `spacing_m` apart. Each full row and column is one road (`h<r>`,
/// `v<c>`), matching how street grids group blocks into named roads.
pub fn grid_graph(rows: usize, cols: usize, spacing_m: f64) -> RoadGraph {
    assert!(rows >= 2 && cols >= 2, "grid needs at least 2x2 nodes");
    assert!(spacing_m > 0.0);
    let x0 = -((cols - 1) as f64) * spacing_m / 2.0;
    let y0 = -((rows - 1) as f64) * spacing_m / 2.0;
    let node_id = |r: usize, c: usize| format!("n{r}_{c}");

    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            nodes.push((node_id(r, c), x0 + c as f64 * spacing_m, y0 + r as f64 * spacing_m));
        }
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols - 1 {
            edges.push(RawEdge {
                id: format!("eh{r}_{c}"),
                u: node_id(r, c),
                v: node_id(r, c + 1),
                length_m: spacing_m,
                road_key: format!("h{r}"),
            });
        }
    }
    for c in 0..cols {
        for r in 0..rows - 1 {
            edges.push(RawEdge {
                id: format!("ev{r}_{c}"),
                u: node_id(r, c),
                v: node_id(r + 1, c),
                length_m: spacing_m,
                road_key: format!("v{c}"),
            });
        }
    }
    RoadGraph::from_parts(nodes, edges).expect("grid construction is well-formed")
}

/// Trip endpoints drawn with center-heavy weights: node weight
/// `(max(|p|, r0) / r0)^(-exponent)`. Pairs closer than `min_length_m`
/// (Euclidean) are redrawn so trips have substance.
pub fn power_law_trips(
    graph: &RoadGraph,
    n: usize,
    exponent: f64,
    r0: f64,
    min_length_m: f64,
    seed: u64,
) -> Vec<(usize, usize)> {
    assert!(exponent > 0.0 && r0 > 0.0);
    let weights: Vec<f64> = graph
        .nodes()
        .iter()
        .map(|node| (node.point.norm().max(r0) / r0).powf(-exponent))
        .collect();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    let total = acc;

    let mut rng = rng::stream(seed, rng::PURPOSE_SYNTH_TRIPS);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> usize {
        let u: f64 = rng.random::<f64>() * total;
        cumulative.partition_point(|c| *c < u).min(weights.len() - 1)
    };
    let mut trips = Vec::with_capacity(n);
    while trips.len() < n {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let d = graph.nodes()[a].point.distance(&graph.nodes()[b].point);
        if d >= min_length_m {
            trips.push((a, b));
        }
    }
    trips
}

/// Scatter of pickup/drop-off points around given hotspot centers plus
/// background noise, for clustering fixtures.
pub fn hotspot_points(
    centers: &[Point],
    per_center: usize,
    spread_m: f64,
    noise: usize,
    extent_m: f64,
    seed: u64,
) -> Vec<Point> {
    let mut rng = rng::stream(seed, rng::PURPOSE_SYNTH_TRIPS);
    let mut points = Vec::with_capacity(centers.len() * per_center + noise);
    for c in centers {
        for _ in 0..per_center {
            let dx: f64 = (rng.random::<f64>() - 0.5) * 2.0 * spread_m;
            let dy: f64 = (rng.random::<f64>() - 0.5) * 2.0 * spread_m;
            points.push(Point::new(c.x + dx, c.y + dy));
        }
    }
    for _ in 0..noise {
        points.push(Point::new(
            (rng.random::<f64>() - 0.5) * 2.0 * extent_m,
            (rng.random::<f64>() - 0.5) * 2.0 * extent_m,
        ));
    }
    points
}
