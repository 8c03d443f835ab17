//! Deployment densities: the probability that a road at a given distance
//! from the city center is equipped with dynamic charging.
//!
//! A [`ThinningSpec`] is a function `g(r) -> [0, 1]` of the signed distance
//! `r` from the center. Applying it to a homogeneous line process yields an
//! inhomogeneous charging-road process of intensity `lambda * g(r)` and a
//! non-charging process of intensity `lambda * (1 - g(r))`.

use crate::geom::Point;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Treat the power-law exponent as 1 below this gap; the antiderivative
/// switches to its logarithmic limit there.
const ALPHA_LOG_EPS: f64 = 1e-9;

/// A deployment density `g(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThinningSpec {
    /// Every road is charging with the same probability `p`.
    Uniform { p: f64 },
    /// `g(r) = 1` inside the plateau `|r| <= r_min`, `(|r|/r_min)^(-alpha)`
    /// outside it.
    PowerLaw { alpha: f64, r_min: f64 },
    /// `g(r) = peak * exp(-r^2 / (2 sigma^2))`.
    Gaussian { sigma: f64, peak: f64 },
    /// Power-law profile evaluated at the minimum distance to a set of
    /// centers. Scalar evaluation reduces to the single-center power law;
    /// the centers matter when evaluating at planar points.
    MultiCenterPowerLaw {
        alpha: f64,
        r_min: f64,
        centers: Vec<Point>,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("multi-center spec needs at least one center")]
    NoCenters,
    #[error("integration bounds reversed: {a} > {b}")]
    ReversedBounds { a: f64, b: f64 },
}

impl ThinningSpec {
    pub fn uniform(p: f64) -> Self {
        ThinningSpec::Uniform { p }
    }

    pub fn power_law(alpha: f64, r_min: f64) -> Self {
        ThinningSpec::PowerLaw { alpha, r_min }
    }

    pub fn gaussian(sigma: f64, peak: f64) -> Self {
        ThinningSpec::Gaussian { sigma, peak }
    }

    /// Check parameter ranges.
    pub fn validate(&self) -> Result<(), SpecError> {
        match self {
            ThinningSpec::Uniform { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(SpecError::ProbabilityRange(*p));
                }
            }
            ThinningSpec::PowerLaw { alpha, r_min } => {
                if *alpha <= 0.0 {
                    return Err(SpecError::NonPositive { name: "alpha", value: *alpha });
                }
                if *r_min <= 0.0 {
                    return Err(SpecError::NonPositive { name: "r_min", value: *r_min });
                }
            }
            ThinningSpec::Gaussian { sigma, peak } => {
                if *sigma <= 0.0 {
                    return Err(SpecError::NonPositive { name: "sigma", value: *sigma });
                }
                if !(*peak > 0.0 && *peak <= 1.0) {
                    return Err(SpecError::ProbabilityRange(*peak));
                }
            }
            ThinningSpec::MultiCenterPowerLaw { alpha, r_min, centers } => {
                if *alpha <= 0.0 {
                    return Err(SpecError::NonPositive { name: "alpha", value: *alpha });
                }
                if *r_min <= 0.0 {
                    return Err(SpecError::NonPositive { name: "r_min", value: *r_min });
                }
                if centers.is_empty() {
                    return Err(SpecError::NoCenters);
                }
            }
        }
        Ok(())
    }

    /// Charging probability for a road at signed center distance `r`.
    ///
    /// Total on the reals; all variants are symmetric in `r`.
    pub fn charging_probability(&self, r: f64) -> f64 {
        match self {
            ThinningSpec::Uniform { p } => *p,
            ThinningSpec::PowerLaw { alpha, r_min }
            | ThinningSpec::MultiCenterPowerLaw { alpha, r_min, .. } => {
                power_law_profile(*alpha, *r_min, r)
            }
            ThinningSpec::Gaussian { sigma, peak } => {
                peak * (-r * r / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// Charging probability for a road passing through planar point `p`.
    ///
    /// For the multi-center variant the relevant distance is the minimum
    /// distance to any center; single-center variants measure from the
    /// origin.
    pub fn charging_probability_at_point(&self, p: Point) -> f64 {
        let r = match self {
            ThinningSpec::MultiCenterPowerLaw { centers, .. } => {
                crate::geom::min_distance_to(p, centers).unwrap_or(f64::INFINITY)
            }
            _ => p.norm(),
        };
        self.charging_probability(r)
    }

    /// Closed form of `integral of g(r) dr` over `[a, b]`.
    ///
    /// The power-law branch splits the range at the plateau edges `-r_min`
    /// and `r_min`: the two tails integrate the power profile (with the
    /// logarithmic antiderivative when `alpha` is 1) and the plateau
    /// contributes its overlap length. The Gaussian branch uses the error
    /// function primitive.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64, SpecError> {
        if a > b {
            return Err(SpecError::ReversedBounds { a, b });
        }
        let value = match self {
            ThinningSpec::Uniform { p } => p * (b - a),
            ThinningSpec::PowerLaw { alpha, r_min }
            | ThinningSpec::MultiCenterPowerLaw { alpha, r_min, .. } => {
                power_law_integral(*alpha, *r_min, a, b)
            }
            ThinningSpec::Gaussian { sigma, peak } => {
                let scale = sigma * std::f64::consts::SQRT_2;
                let erf = statrs::function::erf::erf;
                peak * sigma * (std::f64::consts::PI / 2.0).sqrt()
                    * (erf(b / scale) - erf(a / scale))
            }
        };
        Ok(value)
    }

    /// `integral of (1 - g(r)) dr` over `[a, b]`.
    pub fn complement_integral(&self, a: f64, b: f64) -> Result<f64, SpecError> {
        Ok((b - a) - self.integral(a, b)?)
    }
}

fn power_law_profile(alpha: f64, r_min: f64, r: f64) -> f64 {
    let r = r.abs();
    if r <= r_min {
        1.0
    } else {
        (r / r_min).powf(-alpha)
    }
}

/// `integral of (r/r_min)^(-alpha) dr` over `[lo, hi]` with `r_min <= lo <= hi`.
fn power_tail_integral(alpha: f64, r_min: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if (1.0 - alpha).abs() < ALPHA_LOG_EPS {
        r_min * (hi / lo).ln()
    } else {
        r_min / (1.0 - alpha) * ((hi / r_min).powf(1.0 - alpha) - (lo / r_min).powf(1.0 - alpha))
    }
}

fn power_law_integral(alpha: f64, r_min: f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    // Left tail: [a, min(b, -r_min)], reflected onto [r_min, -a].
    if a < -r_min {
        let hi = b.min(-r_min);
        total += power_tail_integral(alpha, r_min, -hi, -a);
    }
    // Plateau overlap with [-r_min, r_min].
    let lo = a.max(-r_min);
    let hi = b.min(r_min);
    if hi > lo {
        total += hi - lo;
    }
    // Right tail: [max(a, r_min), b].
    if b > r_min {
        total += power_tail_integral(alpha, r_min, a.max(r_min), b);
    }
    total
}

/// Distribution of road center distances `|r|`, the weighting under which
/// average charging fractions are taken.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoadDistanceWeights {
    /// `|r|` uniform on `[lo, hi]`; synthetic cities use `[0, half_width]`.
    Uniform { lo: f64, hi: f64 },
    /// Empirical per-road center distances, equally weighted.
    Empirical { distances: Vec<f64> },
}

impl RoadDistanceWeights {
    pub fn uniform_window(half_width: f64) -> Self {
        RoadDistanceWeights::Uniform { lo: 0.0, hi: half_width }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("empty road-distance weights")]
    EmptyWeights,
    #[error("invalid weights: lo {lo} >= hi {hi}")]
    InvalidWeights { lo: f64, hi: f64 },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(
        "target fraction {target} unreachable; achievable range [{achievable_lo}, {achievable_hi}]"
    )]
    Unreachable {
        target: f64,
        achievable_lo: f64,
        achievable_hi: f64,
    },
}

/// Expected charging probability `E[g(r)]` under a road-distance
/// distribution.
pub fn avg_charging_fraction(
    spec: &ThinningSpec,
    weights: &RoadDistanceWeights,
) -> Result<f64, CalibrationError> {
    spec.validate()?;
    match weights {
        RoadDistanceWeights::Uniform { lo, hi } => {
            if !(hi > lo) {
                return Err(CalibrationError::InvalidWeights { lo: *lo, hi: *hi });
            }
            Ok(spec.integral(*lo, *hi)? / (hi - lo))
        }
        RoadDistanceWeights::Empirical { distances } => {
            if distances.is_empty() {
                return Err(CalibrationError::EmptyWeights);
            }
            let sum: f64 = distances
                .iter()
                .map(|r| spec.charging_probability(r.abs()))
                .sum();
            Ok(sum / distances.len() as f64)
        }
    }
}

/// Tolerance on the achieved average fraction.
pub const CALIBRATION_TOL: f64 = 0.005;
const CALIBRATION_MAX_ITERS: usize = 200;

/// Solve for the free parameter of `template` so that the average charging
/// fraction matches `target` within [`CALIBRATION_TOL`].
///
/// The free parameter is implied by the variant: `p` for uniform, `alpha`
/// for the power laws, `sigma` for the Gaussian (its peak stays fixed). The
/// fraction is monotone in each, so bisection over a fixed bracket settles
/// it; targets outside the bracket's reach are reported with the achievable
/// range.
pub fn calibrate(
    template: &ThinningSpec,
    target: f64,
    weights: &RoadDistanceWeights,
) -> Result<ThinningSpec, CalibrationError> {
    template.validate()?;
    let (lo, hi) = match template {
        ThinningSpec::Uniform { .. } => (0.0, 1.0),
        ThinningSpec::PowerLaw { .. } | ThinningSpec::MultiCenterPowerLaw { .. } => (1e-3, 64.0),
        ThinningSpec::Gaussian { .. } => {
            let scale = match weights {
                RoadDistanceWeights::Uniform { hi, .. } => hi.abs(),
                RoadDistanceWeights::Empirical { distances } => {
                    distances.iter().fold(0.0f64, |m, d| m.max(d.abs()))
                }
            }
            .max(1.0);
            (1e-3 * scale, 10.0 * scale)
        }
    };
    let with_param = |v: f64| -> ThinningSpec {
        let mut s = template.clone();
        match &mut s {
            ThinningSpec::Uniform { p } => *p = v,
            ThinningSpec::PowerLaw { alpha, .. }
            | ThinningSpec::MultiCenterPowerLaw { alpha, .. } => *alpha = v,
            ThinningSpec::Gaussian { sigma, .. } => *sigma = v,
        }
        s
    };
    let eval = |v: f64| avg_charging_fraction(&with_param(v), weights);

    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    let (achievable_lo, achievable_hi) = if f_lo <= f_hi { (f_lo, f_hi) } else { (f_hi, f_lo) };
    if target < achievable_lo - CALIBRATION_TOL || target > achievable_hi + CALIBRATION_TOL {
        return Err(CalibrationError::Unreachable { target, achievable_lo, achievable_hi });
    }
    let increasing = f_hi >= f_lo;

    let (mut a, mut b) = (lo, hi);
    let mut best = if (f_lo - target).abs() <= (f_hi - target).abs() { lo } else { hi };
    let mut best_err = (eval(best)? - target).abs();
    for _ in 0..CALIBRATION_MAX_ITERS {
        let mid = 0.5 * (a + b);
        let f_mid = eval(mid)?;
        let err = (f_mid - target).abs();
        if err < best_err {
            best = mid;
            best_err = err;
        }
        if err <= 0.5 * CALIBRATION_TOL {
            break;
        }
        if (f_mid < target) == increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    if best_err > CALIBRATION_TOL {
        return Err(CalibrationError::Unreachable { target, achievable_lo, achievable_hi });
    }
    Ok(with_param(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use approx::assert_relative_eq;

    #[test]
    fn power_law_boundary_and_tail() {
        let spec = ThinningSpec::power_law(1.0, 500.0);
        assert_eq!(spec.charging_probability(500.0), 1.0);
        assert_eq!(spec.charging_probability(-1000.0), 0.5);
        assert_eq!(spec.charging_probability(0.0), 1.0);
    }

    #[test]
    fn uniform_is_constant() {
        let spec = ThinningSpec::uniform(0.2);
        assert_eq!(spec.charging_probability(1e6), 0.2);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ThinningSpec::uniform(1.5).validate().is_err());
        assert!(ThinningSpec::power_law(0.0, 500.0).validate().is_err());
        assert!(ThinningSpec::power_law(1.0, -1.0).validate().is_err());
        assert!(ThinningSpec::gaussian(0.0, 0.5).validate().is_err());
        assert!(
            ThinningSpec::MultiCenterPowerLaw { alpha: 1.0, r_min: 500.0, centers: vec![] }
                .validate()
                .is_err()
        );
    }

    #[test]
    fn plateau_integral_is_length() {
        let spec = ThinningSpec::power_law(2.0, 500.0);
        assert_relative_eq!(spec.integral(-500.0, 500.0).unwrap(), 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn right_tail_integral_closed_form() {
        // alpha = 2: r_min/(1-alpha) * ((b/r_min)^(1-alpha) - 1) = 250.
        let spec = ThinningSpec::power_law(2.0, 500.0);
        assert_relative_eq!(spec.integral(500.0, 1000.0).unwrap(), 250.0, max_relative = 1e-12);
    }

    #[test]
    fn alpha_one_logarithmic_branch() {
        let spec = ThinningSpec::power_law(1.0, 500.0);
        let expect = 500.0 * 2.0f64.ln();
        assert_relative_eq!(spec.integral(500.0, 1000.0).unwrap(), expect, max_relative = 1e-12);
        // Symmetric left tail.
        assert_relative_eq!(spec.integral(-1000.0, -500.0).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature_across_branches() {
        let opts = QuadOptions::default().with_tolerances(1e-13, 1e-12);
        for &alpha in &[0.5, 1.0, 2.0, 3.5] {
            for &r_min in &[200.0, 500.0] {
                let spec = ThinningSpec::power_law(alpha, r_min);
                for &(a, b) in &[
                    (-2000.0, -800.0),
                    (-2000.0, 300.0),
                    (-300.0, 250.0),
                    (-100.0, 1500.0),
                    (700.0, 4000.0),
                    (-5000.0, 5000.0),
                ] {
                    let closed = spec.integral(a, b).unwrap();
                    let numeric = integrate(
                        |r| spec.charging_probability(r),
                        a,
                        b,
                        &opts.clone().with_split_points(&[-r_min, r_min]),
                    )
                    .unwrap()
                    .value;
                    assert_relative_eq!(closed, numeric, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn gaussian_integral_matches_quadrature() {
        let spec = ThinningSpec::gaussian(300.0, 0.8);
        let closed = spec.integral(-200.0, 900.0).unwrap();
        let numeric = integrate(
            |r| spec.charging_probability(r),
            -200.0,
            900.0,
            &QuadOptions::default().with_tolerances(1e-13, 1e-12),
        )
        .unwrap()
        .value;
        assert_relative_eq!(closed, numeric, max_relative = 1e-10);
    }

    #[test]
    fn reversed_bounds_rejected() {
        let spec = ThinningSpec::uniform(0.5);
        assert!(matches!(spec.integral(1.0, 0.0), Err(SpecError::ReversedBounds { .. })));
    }

    #[test]
    fn avg_fraction_uniform_spec() {
        let w = RoadDistanceWeights::Uniform { lo: 0.0, hi: 2000.0 };
        let f = avg_charging_fraction(&ThinningSpec::uniform(0.2), &w).unwrap();
        assert_relative_eq!(f, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn avg_fraction_power_law_analytic() {
        // (r_min + r_min ln 4) / 2000 for alpha = 1, r_min = 500.
        let w = RoadDistanceWeights::Uniform { lo: 0.0, hi: 2000.0 };
        let spec = ThinningSpec::power_law(1.0, 500.0);
        let expect = (500.0 + 500.0 * 4.0f64.ln()) / 2000.0;
        let got = avg_charging_fraction(&spec, &w).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-12);
        assert_relative_eq!(got, 0.5966, epsilon = 1e-4);
    }

    #[test]
    fn avg_fraction_multi_center_reduces_to_power_law() {
        let w = RoadDistanceWeights::Empirical { distances: vec![100.0, 800.0, 1500.0] };
        let single = ThinningSpec::power_law(1.2, 400.0);
        let multi = ThinningSpec::MultiCenterPowerLaw {
            alpha: 1.2,
            r_min: 400.0,
            centers: vec![Point::ORIGIN],
        };
        assert_eq!(
            avg_charging_fraction(&single, &w).unwrap(),
            avg_charging_fraction(&multi, &w).unwrap()
        );
    }

    #[test]
    fn avg_fraction_empty_weights_rejected() {
        let w = RoadDistanceWeights::Empirical { distances: vec![] };
        assert_eq!(
            avg_charging_fraction(&ThinningSpec::uniform(0.5), &w),
            Err(CalibrationError::EmptyWeights)
        );
    }

    #[test]
    fn calibrate_uniform_is_identity() {
        let w = RoadDistanceWeights::Uniform { lo: 0.0, hi: 1000.0 };
        let spec = calibrate(&ThinningSpec::uniform(0.7), 0.2, &w).unwrap();
        match spec {
            ThinningSpec::Uniform { p } => assert!((p - 0.2).abs() <= CALIBRATION_TOL),
            _ => panic!("variant changed"),
        }
    }

    #[test]
    fn calibrate_power_law_inverts_average() {
        let w = RoadDistanceWeights::Uniform { lo: 0.0, hi: 2000.0 };
        let target = (500.0 + 500.0 * 4.0f64.ln()) / 2000.0;
        let spec = calibrate(&ThinningSpec::power_law(3.0, 500.0), target, &w).unwrap();
        match spec {
            ThinningSpec::PowerLaw { alpha, .. } => assert!((alpha - 1.0).abs() < 0.01),
            _ => panic!("variant changed"),
        }
    }

    #[test]
    fn calibrate_reports_unreachable_targets() {
        // Plateau mass alone forces E[g] >= r_min / hi; ask below it.
        let w = RoadDistanceWeights::Uniform { lo: 0.0, hi: 2000.0 };
        let err = calibrate(&ThinningSpec::power_law(1.0, 500.0), 0.1, &w).unwrap_err();
        match err {
            CalibrationError::Unreachable { achievable_lo, achievable_hi, .. } => {
                assert!(achievable_lo > 0.1);
                assert!(achievable_hi <= 1.0 + 1e-12);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn calibrate_round_trips_within_tolerance() {
        let w = RoadDistanceWeights::Uniform { lo: 0.0, hi: 7500.0 };
        for &target in &[0.1, 0.2, 0.4, 0.8] {
            for template in [
                ThinningSpec::power_law(1.0, 300.0),
                ThinningSpec::gaussian(500.0, 1.0),
                ThinningSpec::uniform(0.5),
            ] {
                let spec = calibrate(&template, target, &w).unwrap();
                let achieved = avg_charging_fraction(&spec, &w).unwrap();
                assert!(
                    (achieved - target).abs() <= CALIBRATION_TOL,
                    "{spec:?}: achieved {achieved} target {target}"
                );
            }
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ThinningSpec::power_law(1.0, 500.0);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"power_law","alpha":1.0,"r_min":500.0}"#);
        let back: ThinningSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
