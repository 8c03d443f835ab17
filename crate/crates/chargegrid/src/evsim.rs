//! Battery trajectories under the constant-speed, constant-power charging
//! model.
//!
//! Per trip, the battery gains charger power times time on charging roads
//! and loses the consumption rate times the trip length. State of charge is
//! clamped at full; a vehicle that would cross empty mid-trip is marked
//! depleted at the interpolated distance and stays at zero thereafter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::mc::ChargeParams;
use crate::roadnet::{assign_charging, AssignError, RoadGraph, RouteTripError, TripMetrics};
use crate::thinning::{
    avg_charging_fraction, calibrate, CalibrationError, RoadDistanceWeights, ThinningSpec,
};

/// Vehicle constants: consumption per km and battery capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvModel {
    pub name: String,
    pub consumption_kwh_per_km: f64,
    pub capacity_kwh: f64,
}

impl EvModel {
    pub fn new(name: &str, consumption_kwh_per_km: f64, capacity_kwh: f64) -> Self {
        EvModel { name: name.to_string(), consumption_kwh_per_km, capacity_kwh }
    }

    pub fn tesla_model_3_range_plus() -> Self {
        Self::new("Tesla Model 3 Range Plus", 0.149129, 50.0)
    }

    pub fn chevrolet_bolt() -> Self {
        Self::new("Chevrolet Bolt", 0.180197, 60.0)
    }

    pub fn nissan_leaf() -> Self {
        Self::new("Nissan Leaf", 0.186411, 40.0)
    }

    pub fn validate(&self) -> Result<(), EvSimError> {
        if !(self.consumption_kwh_per_km > 0.0) || !(self.capacity_kwh > 0.0) {
            return Err(EvSimError::InvalidModel(self.name.clone()));
        }
        Ok(())
    }
}

/// Charging-system and trip-start configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeConfig {
    pub system_power_kw: f64,
    pub speed_kmh: f64,
    pub initial_soc: f64,
}

impl Default for ChargeConfig {
    fn default() -> Self {
        ChargeConfig { system_power_kw: 20.0, speed_kmh: 20.0, initial_soc: 0.5 }
    }
}

impl ChargeConfig {
    pub fn validate(&self) -> Result<(), EvSimError> {
        if !(self.system_power_kw > 0.0)
            || !(self.speed_kmh > 0.0)
            || !(0.0..=1.0).contains(&self.initial_soc)
        {
            return Err(EvSimError::InvalidConfig);
        }
        Ok(())
    }

    pub fn charge_params(&self) -> ChargeParams {
        ChargeParams { power_kw: self.system_power_kw, speed_kmh: self.speed_kmh }
    }
}

#[derive(Debug, Error)]
pub enum EvSimError {
    #[error("EV model {0:?} has non-positive constants")]
    InvalidModel(String),
    #[error("charge configuration out of range")]
    InvalidConfig,
    #[error("trip has negative length or charged fraction outside [0, 1]")]
    InvalidTrip,
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Assignment(#[from] AssignError),
    #[error(transparent)]
    Routing(#[from] RouteTripError),
}

/// One simulated trip: length and the fraction of it on charging roads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripLeg {
    pub length_km: f64,
    pub charged_fraction: f64,
}

/// Net battery change over a trip: charging power times time on charging
/// roads, minus consumption times distance.
pub fn trip_energy_delta_kwh(model: &EvModel, config: &ChargeConfig, trip: &TripLeg) -> f64 {
    config.system_power_kw * (trip.length_km / config.speed_kmh) * trip.charged_fraction
        - model.consumption_kwh_per_km * trip.length_km
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub cumulative_km: f64,
    pub soc: f64,
    pub depleted: bool,
}

/// State-of-charge series over a trip sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryTrace {
    pub points: Vec<TracePoint>,
    /// Energy discarded by clamping at full capacity, kWh.
    pub overcharge_loss_kwh: f64,
    /// Distance at which the battery hit empty, if it did.
    pub depletion_km: Option<f64>,
}

impl BatteryTrace {
    pub fn final_soc(&self) -> f64 {
        self.points.last().map(|p| p.soc).unwrap_or(0.0)
    }

    /// Trace output rows `(cumulative_km, soc_percent, depleted)`.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cumulative_km", "soc_percent", "depleted"])?;
        for p in &self.points {
            w.write_record([
                format!("{}", p.cumulative_km),
                format!("{}", 100.0 * p.soc),
                (p.depleted as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fold a trip sequence into a battery trace.
///
/// Charging within a trip is averaged through its charged fraction, exact
/// under the constant model since energy is linear in charged time.
/// Overcharge clamps at the end of the trip; depletion interpolates within
/// it and latches.
pub fn simulate_sequence(
    model: &EvModel,
    config: &ChargeConfig,
    trips: &[TripLeg],
) -> Result<BatteryTrace, EvSimError> {
    model.validate()?;
    config.validate()?;
    let mut soc = config.initial_soc;
    let mut km = 0.0;
    let mut overcharge = 0.0;
    let mut depletion: Option<f64> = None;
    let mut points = vec![TracePoint { cumulative_km: 0.0, soc, depleted: false }];
    for trip in trips {
        if !(trip.length_km >= 0.0) || !(0.0..=1.0).contains(&trip.charged_fraction) {
            return Err(EvSimError::InvalidTrip);
        }
        if depletion.is_some() {
            km += trip.length_km;
            points.push(TracePoint { cumulative_km: km, soc: 0.0, depleted: true });
            continue;
        }
        let delta = trip_energy_delta_kwh(model, config, trip) / model.capacity_kwh;
        if soc + delta < 0.0 && trip.length_km > 0.0 {
            // Net drain is uniform along the trip under the constant model.
            let crossing = trip.length_km * soc / -delta;
            km += crossing;
            soc = 0.0;
            depletion = Some(km);
            points.push(TracePoint { cumulative_km: km, soc: 0.0, depleted: true });
            km += trip.length_km - crossing;
            points.push(TracePoint { cumulative_km: km, soc: 0.0, depleted: true });
            continue;
        }
        km += trip.length_km;
        soc += delta;
        if soc > 1.0 {
            overcharge += (soc - 1.0) * model.capacity_kwh;
            soc = 1.0;
        }
        points.push(TracePoint { cumulative_km: km, soc, depleted: false });
    }
    Ok(BatteryTrace { points, overcharge_loss_kwh: overcharge, depletion_km: depletion })
}

/// A named, calibrated deployment strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Strategy {
    pub name: String,
    pub spec: ThinningSpec,
}

/// Outcome of one strategy in a comparison.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyOutcome {
    pub strategy: String,
    pub avg_fraction: f64,
    pub realized_count_fraction: f64,
    pub final_soc: f64,
    pub depletion_km: Option<f64>,
    #[serde(skip)]
    pub trace: BatteryTrace,
}

/// Calibrate each strategy template to `target_fraction` under the graph's
/// empirical center distances, then run the identical trip sequence under
/// each assignment and simulate the battery.
#[allow(clippy::too_many_arguments)]
pub fn compare_strategies(
    graph: &RoadGraph,
    trips: &[(usize, usize)],
    templates: &[Strategy],
    target_fraction: f64,
    centers: &[Point],
    model: &EvModel,
    config: &ChargeConfig,
    seed: u64,
) -> Result<Vec<StrategyOutcome>, EvSimError> {
    let weights = RoadDistanceWeights::Empirical { distances: graph.center_distances(centers) };
    let mut outcomes = Vec::with_capacity(templates.len());
    for template in templates {
        let spec = calibrate(&template.spec, target_fraction, &weights)?;
        let avg = avg_charging_fraction(&spec, &weights)?;
        let assigned = assign_charging(graph, &spec, centers, seed)?;
        let router = assigned.router();
        let charge = config.charge_params();
        let mut legs = Vec::with_capacity(trips.len());
        for &(pickup, dropoff) in trips {
            let m: TripMetrics = router.route(&assigned, pickup, dropoff, &charge)?;
            legs.push(TripLeg {
                length_km: m.length_m / 1000.0,
                charged_fraction: m.charged_fraction_pct / 100.0,
            });
        }
        let trace = simulate_sequence(model, config, &legs)?;
        let (count_fraction, _) = assigned.charging_fractions();
        outcomes.push(StrategyOutcome {
            strategy: template.name.clone(),
            avg_fraction: avg,
            realized_count_fraction: count_fraction,
            final_soc: trace.final_soc(),
            depletion_km: trace.depletion_km,
            trace,
        });
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn leaf() -> EvModel {
        EvModel::nissan_leaf()
    }

    #[test]
    fn energy_delta_fully_charged_trip() {
        // 10 km at rho = 1: 20 kW * 0.5 h - 0.186411 * 10.
        let d = trip_energy_delta_kwh(
            &leaf(),
            &ChargeConfig::default(),
            &TripLeg { length_km: 10.0, charged_fraction: 1.0 },
        );
        assert_relative_eq!(d, 8.13589, max_relative = 1e-9);
    }

    #[test]
    fn energy_delta_uncharged_trip() {
        let d = trip_energy_delta_kwh(
            &leaf(),
            &ChargeConfig::default(),
            &TripLeg { length_km: 10.0, charged_fraction: 0.0 },
        );
        assert_relative_eq!(d, -1.86411, max_relative = 1e-9);
    }

    #[test]
    fn zero_length_trip_is_neutral() {
        let d = trip_energy_delta_kwh(
            &leaf(),
            &ChargeConfig::default(),
            &TripLeg { length_km: 0.0, charged_fraction: 1.0 },
        );
        assert_eq!(d, 0.0);
    }

    #[test]
    fn depletion_distance_matches_arithmetic() {
        // 0.5 * 40 / 0.186411 = 107.29 km, independent of trip granularity.
        let trips: Vec<TripLeg> =
            (0..20).map(|_| TripLeg { length_km: 10.0, charged_fraction: 0.0 }).collect();
        let trace = simulate_sequence(&leaf(), &ChargeConfig::default(), &trips).unwrap();
        let expect = 0.5 * 40.0 / 0.186411;
        let got = trace.depletion_km.expect("depletes");
        assert_relative_eq!(got, expect, max_relative = 1e-9);
        assert!((got - 107.29).abs() < 0.01);
        assert_eq!(trace.final_soc(), 0.0);
    }

    #[test]
    fn saturation_clamps_and_records_loss() {
        let config = ChargeConfig { system_power_kw: 100.0, ..Default::default() };
        let trips: Vec<TripLeg> =
            (0..30).map(|_| TripLeg { length_km: 10.0, charged_fraction: 1.0 }).collect();
        let trace = simulate_sequence(&leaf(), &config, &trips).unwrap();
        assert_eq!(trace.final_soc(), 1.0);
        assert!(trace.overcharge_loss_kwh > 0.0);
        assert!(trace.points.iter().all(|p| p.soc <= 1.0));
    }

    #[test]
    fn empty_trip_list_is_initial_point() {
        let trace = simulate_sequence(&leaf(), &ChargeConfig::default(), &[]).unwrap();
        assert_eq!(trace.points.len(), 1);
        assert_eq!(trace.final_soc(), 0.5);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(EvModel::new("x", 0.0, 40.0).validate().is_err());
        assert!(ChargeConfig { initial_soc: 1.5, ..Default::default() }.validate().is_err());
        let bad = simulate_sequence(
            &leaf(),
            &ChargeConfig::default(),
            &[TripLeg { length_km: -1.0, charged_fraction: 0.0 }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn energy_bookkeeping_is_exact() {
        let model = leaf();
        let config = ChargeConfig { system_power_kw: 40.0, ..Default::default() };
        let trips: Vec<TripLeg> = (0..50)
            .map(|i| TripLeg {
                length_km: 3.0 + (i % 7) as f64,
                charged_fraction: ((i % 11) as f64) / 10.0,
            })
            .collect();
        let trace = simulate_sequence(&model, &config, &trips).unwrap();
        assert!(trace.depletion_km.is_none());
        let deltas: f64 =
            trips.iter().map(|t| trip_energy_delta_kwh(&model, &config, t)).sum();
        let lhs = trace.final_soc() * model.capacity_kwh;
        let rhs = 0.5 * model.capacity_kwh + deltas - trace.overcharge_loss_kwh;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-9);
        assert!(trace.overcharge_loss_kwh >= 0.0);
    }

    proptest! {
        #[test]
        fn trace_bounds_and_latching(
            trips in proptest::collection::vec((0.0f64..25.0, 0.0f64..=1.0), 0..60),
            power in 5.0f64..60.0,
            initial in 0.0f64..=1.0,
        ) {
            let legs: Vec<TripLeg> = trips
                .iter()
                .map(|(l, f)| TripLeg { length_km: *l, charged_fraction: *f })
                .collect();
            let config = ChargeConfig { system_power_kw: power, speed_kmh: 20.0, initial_soc: initial };
            let trace = simulate_sequence(&leaf(), &config, &legs).unwrap();
            let mut seen_depleted = false;
            let mut prev_km = -1.0;
            for p in &trace.points {
                prop_assert!((0.0..=1.0).contains(&p.soc));
                prop_assert!(p.cumulative_km >= prev_km - 1e-12);
                prev_km = p.cumulative_km;
                if seen_depleted {
                    prop_assert!(p.depleted && p.soc == 0.0);
                }
                seen_depleted |= p.depleted;
            }
        }

        #[test]
        fn more_charging_never_hurts(
            trips in proptest::collection::vec((1.0f64..20.0, 0.0f64..0.9), 1..40),
        ) {
            let base: Vec<TripLeg> = trips
                .iter()
                .map(|(l, f)| TripLeg { length_km: *l, charged_fraction: *f })
                .collect();
            let boosted: Vec<TripLeg> = base
                .iter()
                .map(|t| TripLeg { length_km: t.length_km, charged_fraction: (t.charged_fraction + 0.1).min(1.0) })
                .collect();
            let config = ChargeConfig::default();
            let a = simulate_sequence(&leaf(), &config, &base).unwrap();
            let b = simulate_sequence(&leaf(), &config, &boosted).unwrap();
            for (pa, pb) in a.points.iter().zip(&b.points) {
                prop_assert!(pb.soc >= pa.soc - 1e-12);
            }
        }
    }
}
