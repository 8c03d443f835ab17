//! Simulation oracles for the conditional and marginal nearest-crossing
//! laws: empirical CDFs from thinned-process sampling against the closed
//! forms.

use chargegrid::analytic::{
    charging_gap_cdf, marginal_nearest_charging_cdf, CrossingLaw, RoadKind,
};
use chargegrid::density::Density1d;
use chargegrid::ecdf::EmpiricalCdf;
use chargegrid::mc::sample_crossing_distances;
use chargegrid::thinning::ThinningSpec;

#[test]
fn uniform_nearest_charging_is_exponential() {
    // Constant g reduces the nearest-crossing law to an exponential.
    let lambda = 0.01;
    let p = 0.3;
    let spec = ThinningSpec::uniform(p);
    let samples =
        sample_crossing_distances(&spec, lambda, -250.0, 4000.0, 5000.0, 100_000, 41).unwrap();
    let observed: Vec<f64> = samples.iter().filter_map(|s| s.charging).collect();
    let censored = samples.len() - observed.len();
    let cdf = EmpiricalCdf::with_censored(observed, censored);
    let ks = cdf.ks_distance(|x| 1.0 - (-lambda * p * x).exp());
    assert!(ks < 0.01, "KS against exponential: {ks}");
}

#[test]
fn power_law_nearest_crossing_laws_match_simulation() {
    let lambda = 0.01;
    let horizon = 3000.0;
    for (i, &alpha) in [0.5, 1.0, 2.0].iter().enumerate() {
        let spec = ThinningSpec::power_law(alpha, 500.0);
        let (s, d) = (600.0, 3600.0);
        let law = CrossingLaw::new(&spec, lambda, s, d).unwrap();
        let samples = sample_crossing_distances(
            &spec,
            lambda,
            s,
            d,
            horizon,
            100_000,
            100 + i as u64,
        )
        .unwrap();

        let charging: Vec<f64> = samples.iter().filter_map(|c| c.charging).collect();
        let censored = samples.len() - charging.len();
        let cdf = EmpiricalCdf::with_censored(charging, censored);
        let ks = cdf.ks_distance(|x| law.cdf(RoadKind::Charging, x).unwrap());
        assert!(ks < 0.02, "alpha {alpha}: charging KS {ks}");

        let noncharging: Vec<f64> = samples.iter().filter_map(|c| c.noncharging).collect();
        let censored = samples.len() - noncharging.len();
        let cdf = EmpiricalCdf::with_censored(noncharging, censored);
        let ks = cdf.ks_distance(|x| law.cdf(RoadKind::NonCharging, x).unwrap());
        assert!(ks < 0.02, "alpha {alpha}: non-charging KS {ks}");
    }
}

#[test]
fn reflected_pair_matches_simulation() {
    // Downward trips (d < s) exercise the reflection convention.
    let lambda = 0.015;
    let spec = ThinningSpec::power_law(1.0, 400.0);
    let (s, d) = (900.0, -800.0);
    let law = CrossingLaw::new(&spec, lambda, s, d).unwrap();
    let samples = sample_crossing_distances(&spec, lambda, s, d, 2500.0, 60_000, 7).unwrap();
    let charging: Vec<f64> = samples.iter().filter_map(|c| c.charging).collect();
    let censored = samples.len() - charging.len();
    let cdf = EmpiricalCdf::with_censored(charging, censored);
    let ks = cdf.ks_distance(|x| law.cdf(RoadKind::Charging, x).unwrap());
    assert!(ks < 0.02, "KS {ks}");
}

#[test]
fn charging_gap_law_matches_conditioned_simulation() {
    // Gap between the nearest non-charging crossing and the next charging
    // one, conditioned on ordering and containment within the separation.
    let lambda = 0.01;
    let separation = 2000.0;
    for (i, spec) in [ThinningSpec::uniform(0.5), ThinningSpec::power_law(1.0, 500.0)]
        .iter()
        .enumerate()
    {
        let (s, d) = (0.0, separation);
        let law = CrossingLaw::new(spec, lambda, s, d).unwrap();
        let samples = sample_crossing_distances(
            spec,
            lambda,
            s,
            d,
            separation,
            400_000,
            200 + i as u64,
        )
        .unwrap();
        let gaps: Vec<f64> = samples
            .iter()
            .filter_map(|c| match (c.noncharging, c.charging) {
                (Some(nc), Some(ch)) if nc < ch && ch < separation => Some(ch - nc),
                _ => None,
            })
            .collect();
        assert!(gaps.len() > 50_000, "conditioning too rare: {}", gaps.len());
        let cdf = EmpiricalCdf::new(gaps);
        let ks = cdf.ks_distance(|x| charging_gap_cdf(&law, separation, x).unwrap());
        assert!(ks < 0.02, "{spec:?}: gap KS {ks}");
    }
}

#[test]
fn marginal_nearest_charging_matches_simulation() {
    // Average the conditional indicator over sampled (s, d) pairs and
    // compare with the nested-quadrature marginal.
    let lambda = 0.01;
    let spec = ThinningSpec::power_law(1.0, 500.0);
    let f = Density1d::Uniform { lo: -2000.0, hi: 2000.0 };
    let x = 300.0;

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;
    let mut hits = 0usize;
    for i in 0..n {
        let s = -2000.0 + 4000.0 * rng.random::<f64>();
        let d = -2000.0 + 4000.0 * rng.random::<f64>();
        let samples = sample_crossing_distances(&spec, lambda, s, d, x, 1, i as u64).unwrap();
        if samples[0].charging.is_some() {
            hits += 1;
        }
    }
    let empirical = hits as f64 / n as f64;
    let analytic = marginal_nearest_charging_cdf(&spec, lambda, &f, &f, x).unwrap();
    assert!(
        (empirical - analytic).abs() < 0.01,
        "empirical {empirical} vs analytic {analytic}"
    );
}
