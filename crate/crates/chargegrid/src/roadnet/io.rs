//! File formats for graphs, trips, zones, and assignments.
//!
//! Graphs arrive either as a node CSV (`id,x,y`) plus an edge CSV
//! (`id,u,v,length,road_key`) or as a single JSON document. Trips are CSV
//! with header `pickup_id,dropoff_id` and optional coordinate/timestamp
//! columns. Assignments leave as `road_key,center_distance_m,charging`.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::Deserialize;

use super::{Endpoint, IngestError, RawEdge, RoadGraph, TripRecord, ZoneMap};

fn csv_err(path: &Path, source: csv::Error) -> IngestError {
    IngestError::Csv { path: path.display().to_string(), source }
}

fn bad_record(path: &Path, row: usize, message: impl Into<String>) -> IngestError {
    IngestError::BadRecord { path: path.display().to_string(), row, message: message.into() }
}

fn column<'r>(
    headers: &csv::StringRecord,
    record: &'r csv::StringRecord,
    name: &'static str,
    path: &Path,
) -> Result<&'r str, IngestError> {
    let idx = headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IngestError::MissingColumn { path: path.display().to_string(), column: name })?;
    Ok(record.get(idx).unwrap_or(""))
}

fn optional_column<'r>(
    headers: &csv::StringRecord,
    record: &'r csv::StringRecord,
    name: &str,
) -> Option<&'r str> {
    headers
        .iter()
        .position(|h| h == name)
        .and_then(|idx| record.get(idx))
        .filter(|v| !v.is_empty())
}

/// Load a graph from a node CSV and an edge CSV.
pub fn load_graph_csv(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
) -> Result<RoadGraph, IngestError> {
    let nodes_path = nodes_path.as_ref();
    let edges_path = edges_path.as_ref();

    let mut reader = csv::Reader::from_path(nodes_path).map_err(|e| csv_err(nodes_path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(nodes_path, e))?.clone();
    let mut nodes = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(nodes_path, e))?;
        let id = column(&headers, &record, "id", nodes_path)?.to_string();
        let x: f64 = column(&headers, &record, "x", nodes_path)?
            .parse()
            .map_err(|_| bad_record(nodes_path, row + 2, format!("bad x for node {id:?}")))?;
        let y: f64 = column(&headers, &record, "y", nodes_path)?
            .parse()
            .map_err(|_| bad_record(nodes_path, row + 2, format!("bad y for node {id:?}")))?;
        nodes.push((id, x, y));
    }

    let mut reader = csv::Reader::from_path(edges_path).map_err(|e| csv_err(edges_path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(edges_path, e))?.clone();
    let mut edges = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(edges_path, e))?;
        let id = column(&headers, &record, "id", edges_path)?.to_string();
        let u = column(&headers, &record, "u", edges_path)?.to_string();
        let v = column(&headers, &record, "v", edges_path)?.to_string();
        let length_m: f64 = column(&headers, &record, "length", edges_path)?
            .parse()
            .map_err(|_| bad_record(edges_path, row + 2, format!("bad length for edge {id:?}")))?;
        let road_key = optional_column(&headers, &record, "road_key").unwrap_or("").to_string();
        edges.push(RawEdge { id, u, v, length_m, road_key });
    }

    RoadGraph::from_parts(nodes, edges)
}

#[derive(Deserialize)]
struct JsonGraph {
    nodes: Vec<JsonNode>,
    edges: Vec<RawEdge>,
}

#[derive(Deserialize)]
struct JsonNode {
    id: String,
    x: f64,
    y: f64,
}

/// Load a graph from a single JSON document `{nodes: [{id,x,y}], edges:
/// [{id,u,v,length_m,road_key?}]}`.
pub fn load_graph_json(path: impl AsRef<Path>) -> Result<RoadGraph, IngestError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let parsed: JsonGraph = serde_json::from_reader(BufReader::new(file))
        .map_err(|source| IngestError::Json { path: path.display().to_string(), source })?;
    RoadGraph::from_parts(
        parsed.nodes.into_iter().map(|n| (n.id, n.x, n.y)).collect(),
        parsed.edges,
    )
}

/// Load trips. Endpoints prefer the id columns; rows with empty ids fall
/// back to the coordinate columns.
pub fn load_trips_csv(path: impl AsRef<Path>) -> Result<Vec<TripRecord>, IngestError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut trips = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let parse_coord = |name: &str| -> Result<Option<f64>, IngestError> {
            optional_column(&headers, &record, name)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| bad_record(path, row + 2, format!("bad {name}")))
                })
                .transpose()
        };
        let endpoint = |id_name: &'static str,
                        x_name: &str,
                        y_name: &str|
         -> Result<Endpoint, IngestError> {
            if let Some(id) = optional_column(&headers, &record, id_name) {
                return Ok(Endpoint::Named(id.to_string()));
            }
            match (parse_coord(x_name)?, parse_coord(y_name)?) {
                (Some(x), Some(y)) => Ok(Endpoint::Coord { x, y }),
                _ => Err(bad_record(
                    path,
                    row + 2,
                    format!("trip needs {id_name} or {x_name}/{y_name}"),
                )),
            }
        };
        trips.push(TripRecord {
            pickup: endpoint("pickup_id", "pickup_x", "pickup_y")?,
            dropoff: endpoint("dropoff_id", "dropoff_x", "dropoff_y")?,
            timestamp: optional_column(&headers, &record, "timestamp").map(str::to_string),
        });
    }
    Ok(trips)
}

/// Load zone membership (`zone_id,node_id`), resolving node ids against the
/// graph.
pub fn load_zones_csv(
    path: impl AsRef<Path>,
    graph: &RoadGraph,
) -> Result<ZoneMap, IngestError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut zones = ZoneMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let zone = column(&headers, &record, "zone_id", path)?.to_string();
        let node = column(&headers, &record, "node_id", path)?;
        let idx = graph
            .node_index(node)
            .ok_or_else(|| bad_record(path, row + 2, format!("unknown node {node:?}")))?;
        zones.entry(zone).or_default().push(idx);
    }
    Ok(zones)
}

/// Write the charging assignment as `road_key,center_distance_m,charging`.
pub fn write_assignment_csv<W: Write>(graph: &RoadGraph, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["road_key", "center_distance_m", "charging"])?;
    for road in graph.roads() {
        w.write_record([
            road.key.as_str(),
            &road
                .center_distance_m
                .map(|d| format!("{d}"))
                .unwrap_or_default(),
            if road.charging { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}
