//! Monte Carlo estimation of the trip metrics over sampled cities.
//!
//! Every sample realizes the line process around a trip, routes the trip
//! with the lexicographic driver model, and reads the metrics off the
//! routed path. Source and destination roads are grafted onto the
//! realization at their prescribed offsets, which leaves the remaining
//! process distribution untouched.

pub mod arrangement;
mod conditioned;

pub use conditioned::{
    sample_crossing_distances, sample_metric_conditioned, ConditionedEvent, ConditionedRun,
    CrossingSample,
};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{EventId, Metric, Orientation, SourceDestPair};
use crate::ecdf::EmpiricalCdf;
use crate::geom::Point;
use crate::mplp::CityRealization;
use crate::rng;
use crate::route::shortest_max_charged;
use crate::thinning::{SpecError, ThinningSpec};
use arrangement::{ArrLine, LineRef};

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("source and destination are not connected")]
    RoutingFailure,
    #[error("conditioning event too rare: {accepted} accepted in {proposals} proposals")]
    ConditioningDegenerate { accepted: usize, proposals: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Constant charging model: `power_kw` delivered for the time spent on
/// charging roads at `speed_kmh`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeParams {
    pub power_kw: f64,
    pub speed_kmh: f64,
}

impl Default for ChargeParams {
    fn default() -> Self {
        ChargeParams { power_kw: 20.0, speed_kmh: 20.0 }
    }
}

impl ChargeParams {
    /// Energy received over `charged_km` of charging-road driving.
    pub fn energy_kwh(&self, charged_km: f64) -> f64 {
        self.power_kw * charged_km / self.speed_kmh
    }
}

/// How trips are placed on realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// A fixed source/destination pair; each sample re-realizes the city
    /// around it.
    FixedSd { sd: SourceDestPair },
    /// Endpoints drawn uniformly on uniformly chosen roads of a windowed
    /// realization.
    WindowUniform { half_width: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub spec: ThinningSpec,
    pub lambda: f64,
    pub placement: Placement,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub charge: ChargeParams,
}

/// Outcome of one routed trip.
#[derive(Debug, Clone, Copy)]
pub struct TripOutcome {
    pub event: Option<EventId>,
    pub length_m: f64,
    pub charged_m: f64,
    pub charged_fraction_pct: f64,
    pub first_charge_distance_m: Option<f64>,
    pub energy_kwh: f64,
}

/// Aggregated empirical distributions of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct McOutput {
    /// Distance before first entering a charging road, meters; censored
    /// trips (never charging) stay in the denominator.
    pub first_charge_distance: EmpiricalCdf,
    /// Charged percentage of trip length.
    pub charged_fraction: EmpiricalCdf,
    /// Energy received per trip, kWh.
    pub energy_charged: EmpiricalCdf,
    pub routed: usize,
    pub routing_failures: usize,
}

fn sample_marked_lines<R: Rng>(
    spec: &ThinningSpec,
    lambda: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Vec<ArrLine> {
    let mean = lambda * (hi - lo);
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("positive mean").sample(rng) as usize
    } else {
        0
    };
    let mut lines: Vec<ArrLine> = (0..count)
        .map(|_| {
            let coord = rng.random_range(lo..hi);
            ArrLine { coord, charging: rng.random::<f64>() < spec.charging_probability(coord) }
        })
        .collect();
    lines.sort_by(|a, b| a.coord.total_cmp(&b.coord));
    lines
}

fn insert_line(lines: &mut Vec<ArrLine>, line: ArrLine) -> usize {
    let idx = lines.partition_point(|l| l.coord < line.coord);
    lines.insert(idx, line);
    idx
}

/// Trip geometry for a fixed pair, following the convention that spans
/// extend from the source offset `s` toward the destination on both axes.
struct FixedGeometry {
    source_point: Point,
    dest_point: Point,
    source_coord: f64,
    dest_coord: f64,
    dest_axis_vertical: bool,
}

fn fixed_geometry(sd: &SourceDestPair) -> FixedGeometry {
    let sign = if sd.d >= sd.s { 1.0 } else { -1.0 };
    match sd.orientation {
        Orientation::Parallel => FixedGeometry {
            source_point: Point::new(sd.s, sd.s),
            dest_point: Point::new(sd.s + sign * sd.d_h, sd.d),
            source_coord: sd.s,
            dest_coord: sd.d,
            dest_axis_vertical: false,
        },
        Orientation::Perpendicular => FixedGeometry {
            source_point: Point::new(sd.s, sd.s),
            dest_point: Point::new(sd.d, sd.s + sign * sd.d_v),
            source_coord: sd.s,
            dest_coord: sd.d,
            dest_axis_vertical: true,
        },
    }
}

fn route_with_endpoints(
    vertical: &[ArrLine],
    horizontal: &[ArrLine],
    source: (LineRef, Point),
    dest: (LineRef, Point),
    charge: &ChargeParams,
    event: Option<EventId>,
) -> Option<TripOutcome> {
    let arr = arrangement::build(vertical, horizontal, &[source, dest]);
    let path = shortest_max_charged(&arr.net, arr.endpoints[0], arr.endpoints[1])?;
    let length_m = path.length_m();
    let charged_m = path.charged_m();
    Some(TripOutcome {
        event,
        length_m,
        charged_m,
        charged_fraction_pct: path.charged_fraction_pct(),
        first_charge_distance_m: path.first_charge_distance_m(),
        energy_kwh: charge.energy_kwh(charged_m / 1000.0),
    })
}

fn fixed_sd_trip<R: Rng>(
    spec: &ThinningSpec,
    lambda: f64,
    sd: &SourceDestPair,
    charge: &ChargeParams,
    rng: &mut R,
) -> Option<TripOutcome> {
    let geo = fixed_geometry(sd);
    // Routes almost never detour farther than a few line spacings beyond
    // the trip's bounding box; ten mean spacings make the truncation
    // negligible.
    let margin = 10.0 / lambda;
    let x_lo = geo.source_point.x.min(geo.dest_point.x) - margin;
    let x_hi = geo.source_point.x.max(geo.dest_point.x) + margin;
    let y_lo = geo.source_point.y.min(geo.dest_point.y) - margin;
    let y_hi = geo.source_point.y.max(geo.dest_point.y) + margin;

    let mut vertical = sample_marked_lines(spec, lambda, x_lo, x_hi, rng);
    let mut horizontal = sample_marked_lines(spec, lambda, y_lo, y_hi, rng);

    let source_charging = rng.random::<f64>() < spec.charging_probability(geo.source_coord);
    let dest_charging = rng.random::<f64>() < spec.charging_probability(geo.dest_coord);
    let src_idx = insert_line(
        &mut horizontal,
        ArrLine { coord: geo.source_coord, charging: source_charging },
    );
    let source_ref = LineRef::Horizontal(src_idx);
    let dest_ref = if geo.dest_axis_vertical {
        LineRef::Vertical(insert_line(
            &mut vertical,
            ArrLine { coord: geo.dest_coord, charging: dest_charging },
        ))
    } else {
        LineRef::Horizontal(insert_line(
            &mut horizontal,
            ArrLine { coord: geo.dest_coord, charging: dest_charging },
        ))
    };
    // Inserting the destination road may shift the source index.
    let source_ref = match (source_ref, dest_ref) {
        (LineRef::Horizontal(s), LineRef::Horizontal(d)) if d <= s => LineRef::Horizontal(s + 1),
        (s, _) => s,
    };

    let event = EventId::classify(sd.orientation, source_charging, dest_charging);
    route_with_endpoints(
        &vertical,
        &horizontal,
        (source_ref, geo.source_point),
        (dest_ref, geo.dest_point),
        charge,
        Some(event),
    )
}

fn window_uniform_trip<R: Rng>(
    spec: &ThinningSpec,
    lambda: f64,
    half_width: f64,
    charge: &ChargeParams,
    rng: &mut R,
) -> Option<TripOutcome> {
    let vertical = sample_marked_lines(spec, lambda, -half_width, half_width, rng);
    let horizontal = sample_marked_lines(spec, lambda, -half_width, half_width, rng);
    let nv = vertical.len();
    let nh = horizontal.len();
    if nv + nh == 0 {
        return None;
    }
    let pick = |rng: &mut R| -> (LineRef, Point) {
        let k = rng.random_range(0..nv + nh);
        let pos = rng.random_range(-half_width..half_width);
        if k < nv {
            (LineRef::Vertical(k), Point::new(vertical[k].coord, pos))
        } else {
            (LineRef::Horizontal(k - nv), Point::new(pos, horizontal[k - nv].coord))
        }
    };
    let source = pick(rng);
    let dest = pick(rng);
    route_with_endpoints(&vertical, &horizontal, source, dest, charge, None)
}

/// Draw `n` independent (realization, trip) pairs, route each, and
/// aggregate the metric distributions. Deterministic given the seed and
/// independent of thread count.
pub fn sample_metric(config: &McConfig) -> Result<McOutput, McError> {
    config.spec.validate()?;
    if config.lambda <= 0.0 || !config.lambda.is_finite() {
        return Err(McError::InvalidParameter(format!(
            "lambda must be positive, got {}",
            config.lambda
        )));
    }
    if config.n == 0 {
        return Err(McError::InvalidParameter("n must be at least 1".into()));
    }
    if let Placement::FixedSd { sd } = &config.placement {
        sd.validate()
            .map_err(|e| McError::InvalidParameter(e.to_string()))?;
    }

    let outcomes: Vec<Option<TripOutcome>> = (0..config.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::substream(config.seed, rng::PURPOSE_MC_SAMPLE, i as u64);
            match &config.placement {
                Placement::FixedSd { sd } => {
                    fixed_sd_trip(&config.spec, config.lambda, sd, &config.charge, &mut rng)
                }
                Placement::WindowUniform { half_width } => window_uniform_trip(
                    &config.spec,
                    config.lambda,
                    *half_width,
                    &config.charge,
                    &mut rng,
                ),
            }
        })
        .collect();

    let routed: Vec<TripOutcome> = outcomes.iter().flatten().copied().collect();
    let failures = config.n - routed.len();
    let mut contact = Vec::with_capacity(routed.len());
    let mut censored = 0usize;
    let mut fraction = Vec::with_capacity(routed.len());
    let mut energy = Vec::with_capacity(routed.len());
    for t in &routed {
        match t.first_charge_distance_m {
            Some(d) => contact.push(d),
            None => censored += 1,
        }
        fraction.push(t.charged_fraction_pct);
        energy.push(t.energy_kwh);
    }
    Ok(McOutput {
        first_charge_distance: EmpiricalCdf::with_censored(contact, censored),
        charged_fraction: EmpiricalCdf::new(fraction),
        energy_charged: EmpiricalCdf::new(energy),
        routed: routed.len(),
        routing_failures: failures,
    })
}

/// Per-sample routed outcomes at a fixed pair, retaining the realized event
/// for stratified recombination.
#[derive(Debug, Clone)]
pub struct FixedSdRun {
    samples: Vec<TripOutcome>,
    pub routing_failures: usize,
}

impl FixedSdRun {
    pub fn samples(&self) -> &[TripOutcome] {
        &self.samples
    }

    fn cdf_of(samples: impl Iterator<Item = TripOutcome>, metric: Metric) -> EmpiricalCdf {
        let mut values = Vec::new();
        let mut censored = 0usize;
        for t in samples {
            match metric {
                Metric::FirstChargeDistance => match t.first_charge_distance_m {
                    Some(d) => values.push(d),
                    None => censored += 1,
                },
                Metric::ChargedFraction => values.push(t.charged_fraction_pct),
            }
        }
        EmpiricalCdf::with_censored(values, censored)
    }

    /// Pooled empirical CDF of a metric.
    pub fn metric_cdf(&self, metric: Metric) -> EmpiricalCdf {
        Self::cdf_of(self.samples.iter().copied(), metric)
    }

    /// Empirical CDF restricted to samples whose realized event is `event`;
    /// `None` when the stratum is empty.
    pub fn metric_cdf_for_event(&self, metric: Metric, event: EventId) -> Option<EmpiricalCdf> {
        let subset: Vec<TripOutcome> = self
            .samples
            .iter()
            .filter(|t| t.event == Some(event))
            .copied()
            .collect();
        if subset.is_empty() {
            None
        } else {
            Some(Self::cdf_of(subset.into_iter(), metric))
        }
    }
}

/// Routed Monte Carlo at a fixed pair, one realization per sample.
pub fn fixed_sd_samples(
    spec: &ThinningSpec,
    lambda: f64,
    sd: &SourceDestPair,
    n: usize,
    seed: u64,
) -> Result<FixedSdRun, McError> {
    spec.validate()?;
    sd.validate()
        .map_err(|e| McError::InvalidParameter(e.to_string()))?;
    if lambda <= 0.0 || n == 0 {
        return Err(McError::InvalidParameter("lambda and n must be positive".into()));
    }
    let charge = ChargeParams::default();
    let outcomes: Vec<Option<TripOutcome>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::substream(seed, rng::PURPOSE_MC_SAMPLE, i as u64);
            fixed_sd_trip(spec, lambda, sd, &charge, &mut rng)
        })
        .collect();
    let samples: Vec<TripOutcome> = outcomes.iter().flatten().copied().collect();
    let routing_failures = n - samples.len();
    Ok(FixedSdRun { samples, routing_failures })
}

/// Route a specific trip on an existing realization.
///
/// Both endpoints must lie on lines of the realization: the nearest line on
/// the matching axis within `1e-6` m is used, and anything farther is an
/// error.
pub fn route_on_realization(
    city: &CityRealization,
    source: Point,
    dest: Point,
    charge: &ChargeParams,
) -> Result<TripOutcome, McError> {
    let vertical: Vec<ArrLine> =
        city.vertical.iter().map(|l| ArrLine { coord: l.coord, charging: l.charging }).collect();
    let horizontal: Vec<ArrLine> =
        city.horizontal.iter().map(|l| ArrLine { coord: l.coord, charging: l.charging }).collect();
    let locate = |p: Point| -> Result<LineRef, McError> {
        let on_v = vertical
            .iter()
            .enumerate()
            .find(|(_, l)| (l.coord - p.x).abs() < 1e-6)
            .map(|(i, _)| LineRef::Vertical(i));
        let on_h = horizontal
            .iter()
            .enumerate()
            .find(|(_, l)| (l.coord - p.y).abs() < 1e-6)
            .map(|(j, _)| LineRef::Horizontal(j));
        on_h.or(on_v).ok_or_else(|| {
            McError::InvalidParameter(format!("point ({}, {}) lies on no road", p.x, p.y))
        })
    };
    let source_ref = locate(source)?;
    let dest_ref = locate(dest)?;
    route_with_endpoints(
        &vertical,
        &horizontal,
        (source_ref, source),
        (dest_ref, dest),
        charge,
        None,
    )
    .ok_or(McError::RoutingFailure)
}
