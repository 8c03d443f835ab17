//! Real road-network graphs: ingestion, charging assignment, and trip
//! routing.
//!
//! A graph is nodes with planar coordinates and undirected edges grouped
//! into roads. Deployment assigns each road a charging flag with
//! probability `g(center distance)`, where a road's center distance is the
//! minimum over its member nodes of the distance to the nearest center.

pub mod io;
pub mod synthetic;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{min_distance_to, Point};
use crate::mc::ChargeParams;
use crate::rng;
use crate::route::{meters_to_um, shortest_max_charged, Network};
use crate::thinning::{SpecError, ThinningSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: String,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub id: String,
    pub u: usize,
    pub v: usize,
    pub length_m: f64,
    pub road_key: String,
}

/// A group of edges sharing a road key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub key: String,
    pub edge_indices: Vec<usize>,
    pub total_length_m: f64,
    /// Minimum node distance to the nearest center; set by assignment.
    pub center_distance_m: Option<f64>,
    pub charging: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    nodes: Vec<RoadNode>,
    edges: Vec<RoadEdge>,
    roads: Vec<Road>,
    node_lookup: HashMap<String, usize>,
    edge_road: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdge(String),
    #[error("edge {edge:?} references missing node {node:?}")]
    DanglingEdge { edge: String, node: String },
    #[error("edge {edge:?} has non-positive length {length}")]
    NonPositiveLength { edge: String, length: f64 },
    #[error("non-finite coordinate on node {0:?}")]
    BadCoordinate(String),
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path}: row {row}: {message}")]
    BadRecord { path: String, row: usize, message: String },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Edge description prior to node-index resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawEdge {
    pub id: String,
    pub u: String,
    pub v: String,
    pub length_m: f64,
    /// Empty means the edge is its own road.
    #[serde(default)]
    pub road_key: String,
}

impl RoadGraph {
    /// Validate and assemble a graph. Edges without a road key become
    /// single-edge roads keyed by the edge id.
    pub fn from_parts(
        nodes: Vec<(String, f64, f64)>,
        edges: Vec<RawEdge>,
    ) -> Result<RoadGraph, IngestError> {
        let mut node_lookup = HashMap::with_capacity(nodes.len());
        let mut node_list = Vec::with_capacity(nodes.len());
        for (id, x, y) in nodes {
            if !x.is_finite() || !y.is_finite() {
                return Err(IngestError::BadCoordinate(id));
            }
            if node_lookup.insert(id.clone(), node_list.len()).is_some() {
                return Err(IngestError::DuplicateNode(id));
            }
            node_list.push(RoadNode { id, point: Point::new(x, y) });
        }

        let mut seen_edges: HashMap<String, ()> = HashMap::new();
        let mut edge_list = Vec::with_capacity(edges.len());
        let mut road_order: Vec<String> = Vec::new();
        let mut road_lookup: HashMap<String, usize> = HashMap::new();
        let mut edge_road = Vec::with_capacity(edges.len());
        for raw in edges {
            if seen_edges.insert(raw.id.clone(), ()).is_some() {
                return Err(IngestError::DuplicateEdge(raw.id));
            }
            let u = *node_lookup.get(&raw.u).ok_or_else(|| IngestError::DanglingEdge {
                edge: raw.id.clone(),
                node: raw.u.clone(),
            })?;
            let v = *node_lookup.get(&raw.v).ok_or_else(|| IngestError::DanglingEdge {
                edge: raw.id.clone(),
                node: raw.v.clone(),
            })?;
            if !(raw.length_m > 0.0) || !raw.length_m.is_finite() {
                return Err(IngestError::NonPositiveLength { edge: raw.id, length: raw.length_m });
            }
            let key = if raw.road_key.is_empty() { raw.id.clone() } else { raw.road_key.clone() };
            let road_idx = *road_lookup.entry(key.clone()).or_insert_with(|| {
                road_order.push(key.clone());
                road_order.len() - 1
            });
            edge_road.push(road_idx);
            edge_list.push(RoadEdge { id: raw.id, u, v, length_m: raw.length_m, road_key: key });
        }

        let mut roads: Vec<Road> = road_order
            .into_iter()
            .map(|key| Road {
                key,
                edge_indices: Vec::new(),
                total_length_m: 0.0,
                center_distance_m: None,
                charging: false,
            })
            .collect();
        for (i, e) in edge_list.iter().enumerate() {
            let r = &mut roads[edge_road[i]];
            r.edge_indices.push(i);
            r.total_length_m += e.length_m;
        }

        Ok(RoadGraph { nodes: node_list, edges: edge_list, roads, node_lookup, edge_road })
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_lookup.get(id).copied()
    }

    /// Index of the road an edge belongs to.
    pub fn road_of_edge(&self, edge: usize) -> usize {
        self.edge_road[edge]
    }

    /// Nearest node to a planar point, with its distance.
    pub fn nearest_node(&self, p: Point) -> Option<(usize, f64)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, n.point.distance(&p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Empirical per-road center distances for a set of centers, in road
    /// order.
    pub fn center_distances(&self, centers: &[Point]) -> Vec<f64> {
        self.roads
            .iter()
            .map(|road| {
                road.edge_indices
                    .iter()
                    .flat_map(|&e| [self.edges[e].u, self.edges[e].v])
                    .filter_map(|n| min_distance_to(self.nodes[n].point, centers))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Realized charging fractions: by road count and by road length.
    pub fn charging_fractions(&self) -> (f64, f64) {
        let total = self.roads.len() as f64;
        let count = self.roads.iter().filter(|r| r.charging).count() as f64;
        let length: f64 = self.roads.iter().map(|r| r.total_length_m).sum();
        let charged_length: f64 =
            self.roads.iter().filter(|r| r.charging).map(|r| r.total_length_m).sum();
        (
            if total > 0.0 { count / total } else { 0.0 },
            if length > 0.0 { charged_length / length } else { 0.0 },
        )
    }

    /// Overwrite charging flags from a saved assignment (road key to
    /// flag). Unknown keys are reported; roads absent from the map keep
    /// their flag.
    pub fn apply_assignment(
        &mut self,
        flags: &std::collections::BTreeMap<String, bool>,
    ) -> Result<(), IngestError> {
        let index: HashMap<String, usize> =
            self.roads.iter().enumerate().map(|(i, r)| (r.key.clone(), i)).collect();
        for (key, charging) in flags {
            let i = *index.get(key).ok_or_else(|| IngestError::BadRecord {
                path: "assignment".into(),
                row: 0,
                message: format!("unknown road key {key:?}"),
            })?;
            self.roads[i].charging = *charging;
        }
        Ok(())
    }

    /// Routing view of the graph under the current charging flags.
    pub fn router(&self) -> GraphRouter {
        let mut net = Network::new(self.nodes.len());
        for (i, e) in self.edges.iter().enumerate() {
            let charging = self.roads[self.edge_road[i]].charging;
            net.add_undirected(e.u, e.v, meters_to_um(e.length_m), charging);
        }
        GraphRouter { net }
    }
}

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("at least one center is required")]
    NoCenters,
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Mark each road charging independently with probability `g` of its center
/// distance. The draw is keyed by `(seed, road key)`, so assignments are
/// reproducible and insensitive to road order.
pub fn assign_charging(
    graph: &RoadGraph,
    spec: &ThinningSpec,
    centers: &[Point],
    seed: u64,
) -> Result<RoadGraph, AssignError> {
    spec.validate()?;
    if centers.is_empty() {
        return Err(AssignError::NoCenters);
    }
    let mut out = graph.clone();
    let distances = graph.center_distances(centers);
    for (road, dist) in out.roads.iter_mut().zip(distances) {
        road.center_distance_m = Some(dist);
        let u = rng::keyed_unit(seed, rng::PURPOSE_ROAD_ASSIGN, &road.key);
        road.charging = u < spec.charging_probability(dist);
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum RouteTripError {
    #[error("unknown endpoint {0:?}")]
    UnknownEndpoint(String),
    #[error("point ({x}, {y}) is {distance:.1} m from the nearest node, beyond the {radius:.1} m snap radius")]
    SnapFailure { x: f64, y: f64, distance: f64, radius: f64 },
    #[error("zone {0:?} has no member nodes")]
    EmptyZone(String),
    #[error("no route between {from:?} and {to:?}")]
    Disconnected { from: String, to: String },
}

/// A trip endpoint: a node or zone name, or a planar point to snap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Named(String),
    Coord { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub pickup: Endpoint,
    pub dropoff: Endpoint,
    pub timestamp: Option<String>,
}

/// Zone membership: zone id to node indices. Zone-level trips draw a
/// uniform member node with a seed fixed per trip.
pub type ZoneMap = std::collections::BTreeMap<String, Vec<usize>>;

/// Per-trip metrics from the lexicographic router.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripMetrics {
    pub length_m: f64,
    pub charged_m: f64,
    pub charged_fraction_pct: f64,
    pub first_charge_distance_m: Option<f64>,
    pub energy_kwh: f64,
}

pub struct GraphRouter {
    net: Network,
}

impl GraphRouter {
    /// Route between node indices. Zero-length trips report a charged
    /// fraction of zero.
    pub fn route(
        &self,
        graph: &RoadGraph,
        pickup: usize,
        dropoff: usize,
        charge: &ChargeParams,
    ) -> Result<TripMetrics, RouteTripError> {
        let path = shortest_max_charged(&self.net, pickup, dropoff).ok_or_else(|| {
            RouteTripError::Disconnected {
                from: graph.nodes[pickup].id.clone(),
                to: graph.nodes[dropoff].id.clone(),
            }
        })?;
        let charged_m = path.charged_m();
        Ok(TripMetrics {
            length_m: path.length_m(),
            charged_m,
            charged_fraction_pct: path.charged_fraction_pct(),
            first_charge_distance_m: path.first_charge_distance_m(),
            energy_kwh: charge.energy_kwh(charged_m / 1000.0),
        })
    }
}

/// Resolve an endpoint to a node index. Named endpoints match node ids
/// first, then zones; coordinates snap to the nearest node within
/// `snap_radius_m`. `trip_index` keys the zone draw.
pub fn resolve_endpoint(
    graph: &RoadGraph,
    endpoint: &Endpoint,
    snap_radius_m: f64,
    zones: Option<&ZoneMap>,
    seed: u64,
    trip_index: u64,
) -> Result<usize, RouteTripError> {
    match endpoint {
        Endpoint::Named(name) => {
            if let Some(idx) = graph.node_index(name) {
                return Ok(idx);
            }
            if let Some(members) = zones.and_then(|z| z.get(name)) {
                if members.is_empty() {
                    return Err(RouteTripError::EmptyZone(name.clone()));
                }
                let u = rng::keyed_unit(
                    seed,
                    rng::PURPOSE_ZONE_ENDPOINT,
                    &format!("{name}#{trip_index}"),
                );
                let k = ((u * members.len() as f64) as usize).min(members.len() - 1);
                return Ok(members[k]);
            }
            Err(RouteTripError::UnknownEndpoint(name.clone()))
        }
        Endpoint::Coord { x, y } => {
            let p = Point::new(*x, *y);
            let (idx, dist) = graph
                .nearest_node(p)
                .ok_or_else(|| RouteTripError::UnknownEndpoint("empty graph".into()))?;
            if dist > snap_radius_m {
                return Err(RouteTripError::SnapFailure {
                    x: *x,
                    y: *y,
                    distance: dist,
                    radius: snap_radius_m,
                });
            }
            Ok(idx)
        }
    }
}

/// Traffic evidence from which a deployment center is chosen.
pub enum TrafficEvidence<'a> {
    /// Zone statistics: the centroid of the highest-count zone wins, count
    /// ties broken by the lexicographically smallest zone id.
    ZoneCounts(&'a [(String, Point, u64)]),
    /// Raw pickup/drop-off points: densest cluster centroid via DBSCAN.
    Points { points: &'a [Point], eps: f64, min_pts: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum CenterError {
    #[error("empty traffic evidence")]
    EmptyInput,
    #[error("no cluster found")]
    NoCluster,
}

/// Pick the deployment center from traffic evidence.
pub fn center_from_traffic(evidence: TrafficEvidence<'_>) -> Result<Point, CenterError> {
    match evidence {
        TrafficEvidence::ZoneCounts(zones) => {
            if zones.is_empty() {
                return Err(CenterError::EmptyInput);
            }
            let best = zones
                .iter()
                .max_by(|a, b| a.2.cmp(&b.2).then_with(|| b.0.cmp(&a.0)))
                .expect("non-empty");
            Ok(best.1)
        }
        TrafficEvidence::Points { points, eps, min_pts } => {
            if points.is_empty() {
                return Err(CenterError::EmptyInput);
            }
            let clusters = crate::traffic::dbscan(points, eps, min_pts);
            let centers = crate::traffic::top_k_cluster_centers(&clusters, points, 1);
            centers.first().copied().ok_or(CenterError::NoCluster)
        }
    }
}
