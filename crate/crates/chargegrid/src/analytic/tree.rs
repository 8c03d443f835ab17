//! Trip event decomposition and the destination-only-charging event tree.
//!
//! Conditioned on a source/destination pair, a trip falls into one of eight
//! events: the two roads are parallel or perpendicular, and each is
//! charging or not. The parallel case with only the destination road
//! charging is refined further into a tree of ten leaves describing which
//! charging road (if any) the driver can pick up along the way; that tree
//! carries the only closed metric distributions, for its
//! reachable-charging-parallel leaf.

use serde::{Deserialize, Serialize};

use super::props::{charging_gap_cdf, CrossingLaw, RoadKind};
use super::{AnalyticError, Orientation, SourceDestPair};
use crate::quad::{integrate, QuadOptions};
use crate::thinning::ThinningSpec;

/// One of the eight orientation/charging combinations of the source and
/// destination roads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventId {
    ParallelBothCharging,
    ParallelSourceOnlyCharging,
    ParallelDestOnlyCharging,
    ParallelNeitherCharging,
    PerpendicularBothCharging,
    PerpendicularSourceOnlyCharging,
    PerpendicularDestOnlyCharging,
    PerpendicularNeitherCharging,
}

impl EventId {
    pub const ALL: [EventId; 8] = [
        EventId::ParallelBothCharging,
        EventId::ParallelSourceOnlyCharging,
        EventId::ParallelDestOnlyCharging,
        EventId::ParallelNeitherCharging,
        EventId::PerpendicularBothCharging,
        EventId::PerpendicularSourceOnlyCharging,
        EventId::PerpendicularDestOnlyCharging,
        EventId::PerpendicularNeitherCharging,
    ];

    pub fn orientation(&self) -> Orientation {
        match self {
            EventId::ParallelBothCharging
            | EventId::ParallelSourceOnlyCharging
            | EventId::ParallelDestOnlyCharging
            | EventId::ParallelNeitherCharging => Orientation::Parallel,
            _ => Orientation::Perpendicular,
        }
    }

    pub fn source_charging(&self) -> bool {
        matches!(
            self,
            EventId::ParallelBothCharging
                | EventId::ParallelSourceOnlyCharging
                | EventId::PerpendicularBothCharging
                | EventId::PerpendicularSourceOnlyCharging
        )
    }

    pub fn dest_charging(&self) -> bool {
        matches!(
            self,
            EventId::ParallelBothCharging
                | EventId::ParallelDestOnlyCharging
                | EventId::PerpendicularBothCharging
                | EventId::PerpendicularDestOnlyCharging
        )
    }

    /// Event matching an orientation and the two charging marks.
    pub fn classify(orientation: Orientation, source_charging: bool, dest_charging: bool) -> Self {
        match (orientation, source_charging, dest_charging) {
            (Orientation::Parallel, true, true) => EventId::ParallelBothCharging,
            (Orientation::Parallel, true, false) => EventId::ParallelSourceOnlyCharging,
            (Orientation::Parallel, false, true) => EventId::ParallelDestOnlyCharging,
            (Orientation::Parallel, false, false) => EventId::ParallelNeitherCharging,
            (Orientation::Perpendicular, true, true) => EventId::PerpendicularBothCharging,
            (Orientation::Perpendicular, true, false) => EventId::PerpendicularSourceOnlyCharging,
            (Orientation::Perpendicular, false, true) => EventId::PerpendicularDestOnlyCharging,
            (Orientation::Perpendicular, false, false) => EventId::PerpendicularNeitherCharging,
        }
    }
}

/// `P(event | S, D)` for all eight events. Events of the other orientation
/// have probability zero, so the eight always sum to one.
pub fn event_probabilities(
    spec: &ThinningSpec,
    sd: &SourceDestPair,
) -> Result<[f64; 8], AnalyticError> {
    spec.validate()?;
    sd.validate()?;
    let g_s = spec.charging_probability(sd.s);
    let g_d = spec.charging_probability(sd.d);
    let mut probs = [0.0; 8];
    for (i, event) in EventId::ALL.iter().enumerate() {
        if event.orientation() != sd.orientation {
            continue;
        }
        let p_s = if event.source_charging() { g_s } else { 1.0 - g_s };
        let p_d = if event.dest_charging() { g_d } else { 1.0 - g_d };
        probs[i] = p_s * p_d;
    }
    Ok(probs)
}

/// Leaves of the destination-only-charging tree for parallel roads,
/// ordered left to right. "Parallel" roads share the source road's
/// orientation and are crossed over the offset gap `d_v`; "cross" roads are
/// perpendicular to it and are met over the along-road span `d_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DestOnlyLeaf {
    /// No parallel roads strictly between source and destination roads.
    NoParallelBetween,
    /// Exactly one parallel road between them, not charging.
    OneNonChargingParallel,
    /// Two or more parallel roads, all non-charging, and no charging cross
    /// road within the span.
    NonChargingParallelsOnly,
    /// Two or more non-charging parallel roads but a charging cross road is
    /// available.
    NonChargingParallelsWithCross,
    /// A charging parallel road exists, no charging cross road, the nearest
    /// parallel road is non-charging, and the charging one trails it by
    /// less than the along-road span.
    ReachableChargingParallel,
    /// As above, but the charging parallel road trails by more than the
    /// span and is passed up.
    DistantChargingParallel,
    /// No charging cross road and the nearest parallel road is itself
    /// charging.
    NearestParallelCharging,
    /// Charging cross and parallel roads both available, nearest parallel
    /// non-charging, and the cross road comes first.
    ChargingCrossFirst,
    /// As above with the charging parallel road first.
    ChargingParallelFirst,
    /// Charging cross road available and the nearest parallel road is
    /// charging.
    NearestParallelChargingWithCross,
}

impl DestOnlyLeaf {
    pub const ALL: [DestOnlyLeaf; 10] = [
        DestOnlyLeaf::NoParallelBetween,
        DestOnlyLeaf::OneNonChargingParallel,
        DestOnlyLeaf::NonChargingParallelsOnly,
        DestOnlyLeaf::NonChargingParallelsWithCross,
        DestOnlyLeaf::ReachableChargingParallel,
        DestOnlyLeaf::DistantChargingParallel,
        DestOnlyLeaf::NearestParallelCharging,
        DestOnlyLeaf::ChargingCrossFirst,
        DestOnlyLeaf::ChargingParallelFirst,
        DestOnlyLeaf::NearestParallelChargingWithCross,
    ];

    /// 1-based position in left-to-right tree order.
    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|l| l == self).expect("member") + 1
    }
}

const DEGENERATE_EPS: f64 = 1e-12;

/// The destination-only-charging tree for a parallel pair: node
/// probabilities and the closed metric laws of its reachable leaf.
#[derive(Debug, Clone)]
pub struct DestOnlyTree {
    sd: SourceDestPair,
    law: CrossingLaw,
    g_s: f64,
    g_d: f64,
}

impl DestOnlyTree {
    pub fn new(
        spec: &ThinningSpec,
        lambda: f64,
        sd: &SourceDestPair,
    ) -> Result<Self, AnalyticError> {
        sd.validate()?;
        if sd.orientation != Orientation::Parallel {
            return Err(AnalyticError::InvalidParameter(
                "the destination-only tree is defined for parallel pairs".into(),
            ));
        }
        if sd.d_v <= 0.0 {
            return Err(AnalyticError::InvalidParameter(
                "parallel pair must have distinct road offsets".into(),
            ));
        }
        let law = CrossingLaw::new(spec, lambda, sd.s, sd.d)?;
        Ok(DestOnlyTree {
            sd: *sd,
            g_s: spec.charging_probability(sd.s),
            g_d: spec.charging_probability(sd.d),
            law,
        })
    }

    pub fn law(&self) -> &CrossingLaw {
        &self.law
    }

    /// `P(source non-charging, destination charging | S, D)`.
    pub fn root_probability(&self) -> f64 {
        (1.0 - self.g_s) * self.g_d
    }

    /// `P(at least one charging parallel road between the two | root)`.
    pub fn charging_parallel_present(&self) -> f64 {
        self.law
            .cdf(RoadKind::Charging, self.sd.d_v)
            .expect("non-negative span")
    }

    /// `P(no charging cross road within the along-road span | root)`.
    pub fn charging_cross_absent(&self) -> f64 {
        1.0 - self
            .law
            .cdf(RoadKind::Charging, self.sd.d_h)
            .expect("non-negative span")
    }

    fn quad_opts(&self, upper: f64, extra: &[f64]) -> QuadOptions {
        let mut splits = self.law.split_points(upper);
        splits.extend(extra.iter().copied().filter(|t| *t > 0.0 && *t < upper));
        QuadOptions::default()
            .with_tolerances(1e-8, 1e-10)
            .with_split_points(&splits)
    }

    /// `P(nearest parallel road is non-charging | a charging parallel road
    /// exists)`: the non-charging void probability averaged over the
    /// nearest-charging distance.
    pub fn nearest_parallel_noncharging(&self) -> Result<f64, AnalyticError> {
        let d_v = self.sd.d_v;
        let denom = self.charging_parallel_present();
        if denom < DEGENERATE_EPS {
            return Err(AnalyticError::ConditioningDegenerate);
        }
        let num = integrate(
            |a| {
                self.law.cdf(RoadKind::NonCharging, a).unwrap_or(f64::NAN)
                    * self.law.pdf(RoadKind::Charging, a).unwrap_or(f64::NAN)
            },
            0.0,
            d_v,
            &self.quad_opts(d_v, &[]),
        )?
        .value;
        Ok((num / denom).clamp(0.0, 1.0))
    }

    /// `P(gap from nearest non-charging parallel to the charging one <
    /// d_h | both within the offset gap)`.
    pub fn reachable_gap_probability(&self) -> Result<f64, AnalyticError> {
        charging_gap_cdf(&self.law, self.sd.d_v, self.sd.d_h)
    }

    /// `P(the charging cross road comes before the charging parallel road |
    /// both available, nearest parallel non-charging)`.
    pub fn charging_cross_first(&self) -> Result<f64, AnalyticError> {
        let d_v = self.sd.d_v;
        let d_h = self.sd.d_h;
        let cross_present = self.law.cdf(RoadKind::Charging, d_h)?;
        if cross_present < DEGENERATE_EPS {
            return Ok(0.0);
        }
        let weight = |a: f64| {
            self.law.cdf(RoadKind::NonCharging, a).unwrap_or(f64::NAN)
                * self.law.pdf(RoadKind::Charging, a).unwrap_or(f64::NAN)
        };
        let denom = integrate(weight, 0.0, d_v, &self.quad_opts(d_v, &[]))?.value;
        if denom < DEGENERATE_EPS {
            return Err(AnalyticError::ConditioningDegenerate);
        }
        let num = integrate(
            |a| {
                let cross_before = self
                    .law
                    .cdf(RoadKind::Charging, a.min(d_h))
                    .unwrap_or(f64::NAN)
                    / cross_present;
                cross_before * weight(a)
            },
            0.0,
            d_v,
            &self.quad_opts(d_v, &[d_h]),
        )?
        .value;
        Ok((num / denom).clamp(0.0, 1.0))
    }

    /// Absolute probabilities of the ten leaves; they sum to the root
    /// probability up to quadrature tolerance.
    pub fn leaf_probabilities(&self) -> Result<[f64; 10], AnalyticError> {
        let root = self.root_probability();
        let d_v = self.sd.d_v;
        let mass_c = self.law.charging_mass(d_v);
        let mass_nc = self.law.noncharging_mass(d_v);
        let p_none = (-(mass_c + mass_nc)).exp();
        let p_one_nc = mass_nc * p_none;
        let p_all_nc_many = (-mass_c).exp() * (1.0 - (-mass_nc).exp() - mass_nc * (-mass_nc).exp());
        let p_charging_parallel = self.charging_parallel_present();
        let p_cross_absent = self.charging_cross_absent();

        let mut leaves = [0.0; 10];
        leaves[0] = root * p_none;
        leaves[1] = root * p_one_nc;
        leaves[2] = root * p_all_nc_many * p_cross_absent;
        leaves[3] = root * p_all_nc_many * (1.0 - p_cross_absent);
        if p_charging_parallel >= DEGENERATE_EPS {
            let q = self.nearest_parallel_noncharging()?;
            let gap = if self.sd.d_h > 0.0 && q > DEGENERATE_EPS {
                self.reachable_gap_probability()?
            } else {
                0.0
            };
            let cross_first = if q > DEGENERATE_EPS {
                self.charging_cross_first()?
            } else {
                0.0
            };
            let on = root * p_charging_parallel;
            leaves[4] = on * p_cross_absent * q * gap;
            leaves[5] = on * p_cross_absent * q * (1.0 - gap);
            leaves[6] = on * p_cross_absent * (1.0 - q);
            leaves[7] = on * (1.0 - p_cross_absent) * q * cross_first;
            leaves[8] = on * (1.0 - p_cross_absent) * q * (1.0 - cross_first);
            leaves[9] = on * (1.0 - p_cross_absent) * (1.0 - q);
        }
        Ok(leaves)
    }

    fn reachable_leaf_denominator(&self) -> Result<f64, AnalyticError> {
        let d_v = self.sd.d_v;
        let d_h = self.sd.d_h;
        let den = integrate(
            |t| {
                let upper = self
                    .law
                    .cdf(RoadKind::Charging, (t + d_h).min(d_v))
                    .unwrap_or(f64::NAN);
                let lower = self.law.cdf(RoadKind::Charging, t).unwrap_or(f64::NAN);
                (upper - lower) * self.law.pdf(RoadKind::NonCharging, t).unwrap_or(f64::NAN)
            },
            0.0,
            d_v,
            &self.quad_opts(d_v, &[d_v - d_h]),
        )?
        .value;
        if den < DEGENERATE_EPS {
            return Err(AnalyticError::ConditioningDegenerate);
        }
        Ok(den)
    }

    /// CDF of the distance driven before first entering a charging road,
    /// conditioned on the reachable-charging-parallel leaf. Under this leaf
    /// the first contact is the nearest charging parallel road, so the law
    /// is that of its offset restricted by the leaf conditions; beyond the
    /// offset gap the CDF is one.
    pub fn first_contact_cdf_leaf5(&self, x: f64) -> Result<f64, AnalyticError> {
        if x < 0.0 || !x.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "distance must be non-negative and finite, got {x}"
            )));
        }
        let d_v = self.sd.d_v;
        let d_h = self.sd.d_h;
        if x >= d_v {
            return Ok(1.0);
        }
        let den = self.reachable_leaf_denominator()?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let num = integrate(
            |t| {
                let upper = self
                    .law
                    .cdf(RoadKind::Charging, (t + d_h).min(x))
                    .unwrap_or(f64::NAN);
                let lower = self.law.cdf(RoadKind::Charging, t).unwrap_or(f64::NAN);
                (upper - lower).max(0.0)
                    * self.law.pdf(RoadKind::NonCharging, t).unwrap_or(f64::NAN)
            },
            0.0,
            x,
            &self.quad_opts(x, &[x - d_h]),
        )?
        .value;
        Ok((num / den).clamp(0.0, 1.0))
    }

    /// CDF of the charged route distance (trip length minus the first
    /// contact distance) under the reachable-charging-parallel leaf, in
    /// meters of route. Support is `[d_h, d_h + d_v]`; dividing the
    /// argument by the trip length recovers the charged-fraction law.
    pub fn charged_distance_cdf_leaf5(&self, x: f64) -> Result<f64, AnalyticError> {
        if !x.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "distance must be finite, got {x}"
            )));
        }
        let d_v = self.sd.d_v;
        let d_h = self.sd.d_h;
        if x <= d_h {
            let den = self.reachable_leaf_denominator();
            return den.map(|_| 0.0);
        }
        if x >= d_h + d_v {
            return Ok(1.0);
        }
        let den = self.reachable_leaf_denominator()?;
        let lo = (d_v - x).max(0.0);
        let num = integrate(
            |t| {
                let upper = self
                    .law
                    .cdf(RoadKind::Charging, (t + d_h).min(d_v))
                    .unwrap_or(f64::NAN);
                let lower = self
                    .law
                    .cdf(RoadKind::Charging, (d_h + d_v - x).max(t))
                    .unwrap_or(f64::NAN);
                (upper - lower).max(0.0)
                    * self.law.pdf(RoadKind::NonCharging, t).unwrap_or(f64::NAN)
            },
            lo,
            d_v,
            &self.quad_opts(d_v, &[lo, d_h + d_v - x, d_v - d_h]),
        )?
        .value;
        Ok((num / den).clamp(0.0, 1.0))
    }
}

/// Metric whose conditional distribution is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Distance driven before first entering a charging road, meters.
    FirstChargeDistance,
    /// Percentage of the trip length driven on charging roads.
    ChargedFraction,
}

/// Evaluation route for a conditional metric CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EvalMethod {
    /// Closed form of the reachable-charging-parallel leaf, the only branch
    /// with a derived analytic law. Errors on anything it does not cover.
    AnalyticDestOnlyLeaf,
    /// Routed Monte Carlo at the fixed pair, pooled over all events.
    MonteCarlo { n: usize, seed: u64 },
    /// Routed Monte Carlo stratified by the realized event, recombined
    /// with the analytic event probabilities.
    Hybrid { n: usize, seed: u64 },
}

/// Evaluate `P(metric < x | S, D)` on a grid of `x` values.
///
/// For the charged fraction, grid values are percentages in `[0, 100]`; the
/// analytic leaf law is converted from route meters by the trip length.
pub fn metric_cdf_curve(
    spec: &ThinningSpec,
    lambda: f64,
    sd: &SourceDestPair,
    metric: Metric,
    method: EvalMethod,
    grid: &[f64],
) -> Result<Vec<f64>, AnalyticError> {
    sd.validate()?;
    match method {
        EvalMethod::AnalyticDestOnlyLeaf => {
            let tree = DestOnlyTree::new(spec, lambda, sd)?;
            grid.iter()
                .map(|&x| match metric {
                    Metric::FirstChargeDistance => tree.first_contact_cdf_leaf5(x),
                    Metric::ChargedFraction => {
                        tree.charged_distance_cdf_leaf5(x / 100.0 * sd.trip_length())
                    }
                })
                .collect()
        }
        EvalMethod::MonteCarlo { n, seed } => {
            let run = crate::mc::fixed_sd_samples(spec, lambda, sd, n, seed)
                .map_err(|e| AnalyticError::Sampling(e.to_string()))?;
            let cdf = run.metric_cdf(metric);
            Ok(grid.iter().map(|&x| cdf.eval(x)).collect())
        }
        EvalMethod::Hybrid { n, seed } => {
            let run = crate::mc::fixed_sd_samples(spec, lambda, sd, n, seed)
                .map_err(|e| AnalyticError::Sampling(e.to_string()))?;
            let probs = event_probabilities(spec, sd)?;
            let pooled = run.metric_cdf(metric);
            let mut values = vec![0.0; grid.len()];
            for (event, p_event) in EventId::ALL.iter().zip(probs) {
                if p_event == 0.0 {
                    continue;
                }
                // Empty strata fall back to the pooled estimate so the
                // weights still sum to one.
                let stratum = run.metric_cdf_for_event(metric, *event);
                let cdf = stratum.as_ref().unwrap_or(&pooled);
                for (v, &x) in values.iter_mut().zip(grid) {
                    *v += p_event * cdf.eval(x);
                }
            }
            Ok(values)
        }
    }
}

/// Single-point convenience wrapper over [`metric_cdf_curve`].
pub fn metric_cdf_given_sd(
    spec: &ThinningSpec,
    lambda: f64,
    sd: &SourceDestPair,
    metric: Metric,
    x: f64,
    method: EvalMethod,
) -> Result<f64, AnalyticError> {
    Ok(metric_cdf_curve(spec, lambda, sd, metric, method, &[x])?[0])
}
