//! Process-level sampling of trip configurations, with and without
//! conditioning on an event path.
//!
//! These estimators operate on the crossing processes directly: the roads
//! met over each travel span are sampled as thinned Poisson crossings and
//! the metrics follow the same minimal-route reading the event tree uses
//! (the trip takes the shortest Manhattan length; once the driver can pick
//! up a charging road, the remainder of the route counts as charged). That
//! keeps them exactly comparable with the closed leaf laws they oracle.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::McError;
use crate::analytic::{DestOnlyLeaf, EventId, SourceDestPair};
use crate::ecdf::EmpiricalCdf;
use crate::rng;
use crate::thinning::ThinningSpec;

/// Nearest-crossing distances observed in one sampled span.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrossingSample {
    pub charging: Option<f64>,
    pub noncharging: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct SpanCrossings {
    count: usize,
    charging_count: usize,
    nearest_charging: Option<f64>,
    nearest_noncharging: Option<f64>,
}

fn sample_span<R: Rng>(
    spec: &ThinningSpec,
    lambda: f64,
    origin: f64,
    span: f64,
    rng: &mut R,
) -> SpanCrossings {
    let mut out = SpanCrossings::default();
    if span <= 0.0 {
        return out;
    }
    let count = Poisson::new(lambda * span).expect("positive mean").sample(rng) as usize;
    out.count = count;
    for _ in 0..count {
        let t = rng.random::<f64>() * span;
        let charging = rng.random::<f64>() < spec.charging_probability(origin + t);
        if charging {
            out.charging_count += 1;
            if out.nearest_charging.map(|c| t < c).unwrap_or(true) {
                out.nearest_charging = Some(t);
            }
        } else if out.nearest_noncharging.map(|c| t < c).unwrap_or(true) {
            out.nearest_noncharging = Some(t);
        }
    }
    out
}

fn effective_origin(s: f64, d: f64) -> f64 {
    if s <= d {
        s
    } else {
        -s
    }
}

/// Sample nearest charging / non-charging crossing distances within
/// `horizon` meters of the source, for a span extending from `s` toward
/// `d`. Serves as the simulation oracle for the conditional
/// nearest-crossing laws.
pub fn sample_crossing_distances(
    spec: &ThinningSpec,
    lambda: f64,
    s: f64,
    d: f64,
    horizon: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<CrossingSample>, McError> {
    spec.validate()?;
    if lambda <= 0.0 || horizon <= 0.0 {
        return Err(McError::InvalidParameter(
            "lambda and horizon must be positive".into(),
        ));
    }
    let origin = effective_origin(s, d);
    Ok((0..n)
        .map(|i| {
            let mut rng = rng::substream(seed, rng::PURPOSE_MC_CROSSING, i as u64);
            let span = sample_span(spec, lambda, origin, horizon, &mut rng);
            CrossingSample {
                charging: span.nearest_charging,
                noncharging: span.nearest_noncharging,
            }
        })
        .collect())
}

/// Event path to condition on: one of the eight root events, or a leaf of
/// the destination-only tree (parallel pairs only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionedEvent {
    Event(EventId),
    Leaf(DestOnlyLeaf),
}

/// Conditioned metric estimates plus the observed acceptance rate (an
/// estimate of the event path's probability given the pair).
#[derive(Debug, Clone)]
pub struct ConditionedRun {
    /// Distance before first charging contact, meters.
    pub first_contact: EmpiricalCdf,
    /// Charged route distance, meters (trip length minus first contact).
    pub charged_distance: EmpiricalCdf,
    pub acceptance_rate: f64,
    pub accepted: usize,
    pub proposals: usize,
    /// Accepted-sample tallies per destination-only leaf, in tree order;
    /// populated when conditioning on that root or one of its leaves.
    pub leaf_counts: Option<[usize; 10]>,
}

const DEGENERATE_RATE: f64 = 1e-4;
const DEGENERATE_CHECK_AT: usize = 1_000_000;

struct Proposal {
    source_charging: bool,
    dest_charging: bool,
    parallel: SpanCrossings,
    cross: SpanCrossings,
}

fn classify_leaf(p: &Proposal, d_h: f64) -> Option<DestOnlyLeaf> {
    if p.source_charging || !p.dest_charging {
        return None;
    }
    let par = &p.parallel;
    let leaf = if par.count == 0 {
        DestOnlyLeaf::NoParallelBetween
    } else if par.charging_count == 0 {
        if par.count == 1 {
            DestOnlyLeaf::OneNonChargingParallel
        } else if p.cross.nearest_charging.is_none() {
            DestOnlyLeaf::NonChargingParallelsOnly
        } else {
            DestOnlyLeaf::NonChargingParallelsWithCross
        }
    } else {
        let a = par.nearest_charging.expect("charging crossing present");
        let nearest_is_noncharging = par.nearest_noncharging.map(|t| t < a).unwrap_or(false);
        match (p.cross.nearest_charging, nearest_is_noncharging) {
            (None, true) => {
                if a - par.nearest_noncharging.expect("checked") < d_h {
                    DestOnlyLeaf::ReachableChargingParallel
                } else {
                    DestOnlyLeaf::DistantChargingParallel
                }
            }
            (None, false) => DestOnlyLeaf::NearestParallelCharging,
            (Some(t), true) => {
                if t < a {
                    DestOnlyLeaf::ChargingCrossFirst
                } else {
                    DestOnlyLeaf::ChargingParallelFirst
                }
            }
            (Some(_), false) => DestOnlyLeaf::NearestParallelChargingWithCross,
        }
    };
    Some(leaf)
}

/// First-contact distance under the minimal-route model for a parallel
/// destination-only configuration, by leaf.
fn dest_only_first_contact(p: &Proposal, leaf: DestOnlyLeaf, sd: &SourceDestPair) -> f64 {
    let d_v = sd.d_v;
    let cross_c = p.cross.nearest_charging;
    let par_c = p.parallel.nearest_charging;
    match leaf {
        DestOnlyLeaf::NoParallelBetween | DestOnlyLeaf::OneNonChargingParallel => {
            cross_c.map(|t| t.min(d_v)).unwrap_or(d_v)
        }
        DestOnlyLeaf::NonChargingParallelsOnly => d_v,
        DestOnlyLeaf::NonChargingParallelsWithCross => {
            cross_c.expect("cross charging present").min(d_v)
        }
        DestOnlyLeaf::ReachableChargingParallel => par_c.expect("parallel charging present"),
        DestOnlyLeaf::DistantChargingParallel => d_v,
        DestOnlyLeaf::NearestParallelCharging => par_c.expect("parallel charging present"),
        DestOnlyLeaf::ChargingCrossFirst => cross_c.expect("cross charging present"),
        DestOnlyLeaf::ChargingParallelFirst => par_c.expect("parallel charging present"),
        DestOnlyLeaf::NearestParallelChargingWithCross => {
            let a = par_c.expect("parallel charging present");
            cross_c.map(|t| t.min(a)).unwrap_or(a)
        }
    }
}

/// First-contact distance (or censoring) for a root event under the
/// minimal-route model; `None` inside the option means the trip never
/// touches a charging road.
fn root_first_contact(
    p: &Proposal,
    event: EventId,
    sd: &SourceDestPair,
) -> Option<f64> {
    let d_h = sd.d_h;
    match event {
        EventId::ParallelBothCharging
        | EventId::ParallelSourceOnlyCharging
        | EventId::PerpendicularBothCharging
        | EventId::PerpendicularSourceOnlyCharging => Some(0.0),
        EventId::ParallelDestOnlyCharging => {
            let leaf = classify_leaf(p, d_h).expect("dest-only configuration");
            Some(dest_only_first_contact(p, leaf, sd))
        }
        EventId::ParallelNeitherCharging => {
            let from_cross = p.cross.nearest_charging;
            let from_parallel = p.parallel.nearest_charging;
            match (from_cross, from_parallel) {
                (None, None) => None,
                (a, b) => Some(a.unwrap_or(f64::INFINITY).min(b.unwrap_or(f64::INFINITY))),
            }
        }
        EventId::PerpendicularDestOnlyCharging => {
            // Riding the destination road begins at distance d_h.
            Some(p.cross.nearest_charging.map(|t| t.min(d_h)).unwrap_or(d_h))
        }
        EventId::PerpendicularNeitherCharging => {
            let via_cross = p.cross.nearest_charging;
            let via_parallel = p.parallel.nearest_charging.map(|a| d_h + a);
            match (via_cross, via_parallel) {
                (None, None) => None,
                (a, b) => Some(a.unwrap_or(f64::INFINITY).min(b.unwrap_or(f64::INFINITY))),
            }
        }
    }
}

/// Rejection-sample trip configurations matching `event` and aggregate the
/// minimal-route metrics over accepted samples.
///
/// Proposals draw the two road marks and the crossing processes over the
/// trip spans; acceptance requires the whole path from the root to match.
/// Fails once the running acceptance rate drops below `1e-4` after a
/// million proposals.
pub fn sample_metric_conditioned(
    spec: &ThinningSpec,
    lambda: f64,
    sd: &SourceDestPair,
    event: ConditionedEvent,
    n_target: usize,
    seed: u64,
) -> Result<ConditionedRun, McError> {
    spec.validate()?;
    sd.validate()
        .map_err(|e| McError::InvalidParameter(e.to_string()))?;
    if lambda <= 0.0 || n_target == 0 {
        return Err(McError::InvalidParameter(
            "lambda and n_target must be positive".into(),
        ));
    }
    let root = match event {
        ConditionedEvent::Event(ev) => ev,
        ConditionedEvent::Leaf(_) => EventId::ParallelDestOnlyCharging,
    };
    if root.orientation() != sd.orientation {
        return Err(McError::InvalidParameter(format!(
            "event {root:?} does not match the pair orientation {:?}",
            sd.orientation
        )));
    }

    let origin = effective_origin(sd.s, sd.d);
    let g_s = spec.charging_probability(sd.s);
    let g_d = spec.charging_probability(sd.d);
    let mut rng = rng::stream(seed, rng::PURPOSE_MC_CONDITIONED);

    let mut contacts: Vec<f64> = Vec::with_capacity(n_target);
    let mut censored = 0usize;
    let mut charged: Vec<f64> = Vec::with_capacity(n_target);
    let mut proposals = 0usize;
    let total = sd.trip_length();
    let track_leaves = root == EventId::ParallelDestOnlyCharging;
    let mut leaf_counts = [0usize; 10];

    while contacts.len() + censored < n_target {
        proposals += 1;
        let source_charging = rng.random::<f64>() < g_s;
        let dest_charging = rng.random::<f64>() < g_d;
        let accepted_marks =
            source_charging == root.source_charging() && dest_charging == root.dest_charging();
        if accepted_marks {
            let parallel = sample_span(spec, lambda, origin, sd.d_v, &mut rng);
            let cross = sample_span(spec, lambda, origin, sd.d_h, &mut rng);
            let proposal = Proposal { source_charging, dest_charging, parallel, cross };
            let leaf_ok = match event {
                ConditionedEvent::Event(_) => true,
                ConditionedEvent::Leaf(want) => classify_leaf(&proposal, sd.d_h) == Some(want),
            };
            if leaf_ok {
                if track_leaves {
                    let leaf = classify_leaf(&proposal, sd.d_h).expect("dest-only root");
                    leaf_counts[leaf.index() - 1] += 1;
                }
                match root_first_contact(&proposal, root, sd) {
                    Some(d_n) => {
                        contacts.push(d_n);
                        charged.push(total - d_n);
                    }
                    None => censored += 1,
                }
            }
        }
        if proposals % DEGENERATE_CHECK_AT == 0 {
            let rate = (contacts.len() + censored) as f64 / proposals as f64;
            if rate < DEGENERATE_RATE {
                return Err(McError::ConditioningDegenerate {
                    accepted: contacts.len() + censored,
                    proposals,
                });
            }
        }
    }

    let accepted = contacts.len() + censored;
    Ok(ConditionedRun {
        first_contact: EmpiricalCdf::with_censored(contacts, censored),
        charged_distance: EmpiricalCdf::new(charged),
        acceptance_rate: accepted as f64 / proposals as f64,
        accepted,
        proposals,
        leaf_counts: track_leaves.then_some(leaf_counts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd() -> SourceDestPair {
        SourceDestPair::parallel(600.0, 1600.0, 800.0).unwrap()
    }

    #[test]
    fn acceptance_rate_matches_root_probability() {
        let spec = ThinningSpec::power_law(1.0, 500.0);
        let run = sample_metric_conditioned(
            &spec,
            0.01,
            &sd(),
            ConditionedEvent::Event(EventId::ParallelDestOnlyCharging),
            20_000,
            5,
        )
        .unwrap();
        let g_s = spec.charging_probability(600.0);
        let g_d = spec.charging_probability(1600.0);
        let expect = (1.0 - g_s) * g_d;
        let sigma = (expect * (1.0 - expect) / run.proposals as f64).sqrt();
        assert!(
            (run.acceptance_rate - expect).abs() < 3.0 * sigma + 1e-4,
            "rate {} expected {expect}",
            run.acceptance_rate
        );
    }

    #[test]
    fn impossible_event_degenerates() {
        // Uniform p = 1: the source road is always charging, so the
        // destination-only event never happens.
        let err = sample_metric_conditioned(
            &ThinningSpec::uniform(1.0),
            0.01,
            &sd(),
            ConditionedEvent::Event(EventId::ParallelDestOnlyCharging),
            100,
            5,
        )
        .unwrap_err();
        assert!(matches!(err, McError::ConditioningDegenerate { .. }));
    }

    #[test]
    fn orientation_mismatch_rejected() {
        let err = sample_metric_conditioned(
            &ThinningSpec::uniform(0.5),
            0.01,
            &sd(),
            ConditionedEvent::Event(EventId::PerpendicularBothCharging),
            100,
            5,
        )
        .unwrap_err();
        assert!(matches!(err, McError::InvalidParameter(_)));
    }

    #[test]
    fn source_charging_events_have_zero_contact() {
        let run = sample_metric_conditioned(
            &ThinningSpec::uniform(0.5),
            0.01,
            &sd(),
            ConditionedEvent::Event(EventId::ParallelBothCharging),
            500,
            5,
        )
        .unwrap();
        assert_eq!(run.first_contact.eval(0.0), 1.0);
        assert_eq!(run.censored(), 0);
    }

    impl ConditionedRun {
        fn censored(&self) -> usize {
            self.first_contact.censored()
        }
    }

    #[test]
    fn crossing_distance_oracle_is_exponential_for_uniform() {
        // Uniform p: nearest charging crossing is Exp(lambda p).
        let spec = ThinningSpec::uniform(0.4);
        let samples =
            sample_crossing_distances(&spec, 0.02, 0.0, 1000.0, 2000.0, 40_000, 3).unwrap();
        let observed: Vec<f64> = samples.iter().filter_map(|s| s.charging).collect();
        let censored = samples.len() - observed.len();
        let cdf = EmpiricalCdf::with_censored(observed, censored);
        let rate = 0.02 * 0.4;
        let ks = cdf.ks_distance(|x| 1.0 - (-rate * x).exp());
        assert!(ks < 0.015, "ks {ks}");
    }
}
