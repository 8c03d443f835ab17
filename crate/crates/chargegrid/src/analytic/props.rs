//! Nearest-crossing distance distributions.
//!
//! Conditioned on the trip, the roads crossing the driver's path form
//! one-dimensional Poisson processes of intensity `lambda * g` (charging)
//! and `lambda * (1 - g)` (non-charging) along the travel axis, with the
//! span starting at the source offset `s` and extending toward the
//! destination. Void probabilities of those processes give every CDF here
//! in closed form up to the integral of `g`.

use super::AnalyticError;
use crate::density::Density1d;
use crate::quad::{integrate, QuadOptions};
use crate::thinning::ThinningSpec;

/// Which thinned component a distribution refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoadKind {
    Charging,
    NonCharging,
}

/// Distribution of distances from the source to nearest crossings, given
/// the source offset and travel direction.
///
/// When the destination lies below the source the pair is reflected through
/// the center (`g` is symmetric), so spans always extend to the right of
/// the effective origin.
#[derive(Debug, Clone)]
pub struct CrossingLaw {
    spec: ThinningSpec,
    lambda: f64,
    origin: f64,
}

impl CrossingLaw {
    pub fn new(
        spec: &ThinningSpec,
        lambda: f64,
        s: f64,
        d: f64,
    ) -> Result<CrossingLaw, AnalyticError> {
        spec.validate()?;
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let origin = if s <= d { s } else { -s };
        Ok(CrossingLaw { spec: spec.clone(), lambda, origin })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spec(&self) -> &ThinningSpec {
        &self.spec
    }

    /// Charging probability at distance `t` from the origin along the span.
    pub fn g_at(&self, t: f64) -> f64 {
        self.spec.charging_probability(self.origin + t)
    }

    /// Expected number of charging crossings within the first `t` meters.
    pub fn charging_mass(&self, t: f64) -> f64 {
        self.lambda * self.spec.integral(self.origin, self.origin + t).expect("t >= 0")
    }

    /// Expected number of non-charging crossings within the first `t` meters.
    pub fn noncharging_mass(&self, t: f64) -> f64 {
        self.lambda
            * self
                .spec
                .complement_integral(self.origin, self.origin + t)
                .expect("t >= 0")
    }

    fn check_distance(x: f64) -> Result<(), AnalyticError> {
        if x < 0.0 || !x.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "distance must be non-negative and finite, got {x}"
            )));
        }
        Ok(())
    }

    /// `P(nearest crossing of `kind` < x)`; the void probability of the
    /// corresponding thinned process over the span.
    pub fn cdf(&self, kind: RoadKind, x: f64) -> Result<f64, AnalyticError> {
        Self::check_distance(x)?;
        let mass = match kind {
            RoadKind::Charging => self.charging_mass(x),
            RoadKind::NonCharging => self.noncharging_mass(x),
        };
        Ok(1.0 - (-mass).exp())
    }

    /// Density of the nearest-crossing distance.
    pub fn pdf(&self, kind: RoadKind, x: f64) -> Result<f64, AnalyticError> {
        Self::check_distance(x)?;
        let (rate, mass) = match kind {
            RoadKind::Charging => (self.lambda * self.g_at(x), self.charging_mass(x)),
            RoadKind::NonCharging => {
                (self.lambda * (1.0 - self.g_at(x)), self.noncharging_mass(x))
            }
        };
        Ok(rate * (-mass).exp())
    }

    /// Distances (from the origin) at which the deployment profile has
    /// kinks, for use as quadrature split points.
    pub fn split_points(&self, upper: f64) -> Vec<f64> {
        match &self.spec {
            ThinningSpec::PowerLaw { r_min, .. }
            | ThinningSpec::MultiCenterPowerLaw { r_min, .. } => [-r_min, *r_min]
                .iter()
                .map(|edge| edge - self.origin)
                .filter(|t| *t > 0.0 && *t < upper)
                .collect(),
            _ => Vec::new(),
        }
    }
}

const GAP_DEGENERATE_EPS: f64 = 1e-12;

/// CDF of the gap between the nearest non-charging crossing and the next
/// charging crossing, conditioned on both appearing within `separation`
/// (non-charging first).
///
/// The ratio-of-integrals form averages `P(t - x < nearest non-charging <
/// t)` over the nearest-charging distance `t`; independence of the two
/// thinned processes makes the factorization exact.
pub fn charging_gap_cdf(
    law: &CrossingLaw,
    separation: f64,
    x: f64,
) -> Result<f64, AnalyticError> {
    if separation <= 0.0 || !separation.is_finite() {
        return Err(AnalyticError::InvalidParameter(format!(
            "separation must be positive, got {separation}"
        )));
    }
    if x < 0.0 {
        return Err(AnalyticError::InvalidParameter(format!(
            "gap distance must be non-negative, got {x}"
        )));
    }
    let opts = QuadOptions::default()
        .with_tolerances(1e-8, 1e-10)
        .with_split_points(&law.split_points(separation));
    let weight = |t: f64| {
        law.cdf(RoadKind::NonCharging, t).unwrap_or(f64::NAN)
            * law.pdf(RoadKind::Charging, t).unwrap_or(f64::NAN)
    };
    let denominator = integrate(weight, 0.0, separation, &opts)?.value;
    if denominator < GAP_DEGENERATE_EPS {
        return Err(AnalyticError::ConditioningDegenerate);
    }
    if x >= separation {
        return Ok(1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut splits = law.split_points(separation);
    splits.push(x);
    let numerator = integrate(
        |t| {
            let near = law.cdf(RoadKind::NonCharging, t).unwrap_or(f64::NAN);
            let far = law
                .cdf(RoadKind::NonCharging, (t - x).max(0.0))
                .unwrap_or(f64::NAN);
            (near - far) * law.pdf(RoadKind::Charging, t).unwrap_or(f64::NAN)
        },
        0.0,
        separation,
        &opts.clone().with_split_points(&splits),
    )?
    .value;
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

fn marginal_nearest_cdf(
    spec: &ThinningSpec,
    lambda: f64,
    kind: RoadKind,
    f_s: &Density1d,
    f_d: &Density1d,
    x: f64,
) -> Result<f64, AnalyticError> {
    spec.validate()?;
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(AnalyticError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if x < 0.0 || !x.is_finite() {
        return Err(AnalyticError::InvalidParameter(format!(
            "distance must be non-negative and finite, got {x}"
        )));
    }
    f_s.validate()
        .map_err(|e| AnalyticError::InvalidParameter(e.to_string()))?;
    f_d.validate()
        .map_err(|e| AnalyticError::InvalidParameter(e.to_string()))?;
    if x == 0.0 {
        return Ok(0.0);
    }

    let span_mass = |a: f64, b: f64| -> f64 {
        let raw = spec.integral(a, b).expect("ordered bounds");
        match kind {
            RoadKind::Charging => lambda * raw,
            RoadKind::NonCharging => lambda * ((b - a) - raw),
        }
    };

    let (d_lo, d_hi) = f_d.support();
    let inner_opts = QuadOptions::default().with_tolerances(1e-9, 1e-9);
    // Survival probability of the span from s toward d, averaged over d.
    // The span direction only depends on which side of s the destination
    // falls, so the inner integral splits at d = s.
    let inner = |s: f64| -> f64 {
        let below = (-span_mass(s - x, s)).exp();
        let above = (-span_mass(s, s + x)).exp();
        let mut total = 0.0;
        if d_lo < s.min(d_hi) {
            total += below
                * integrate(|d| f_d.pdf(d), d_lo, s.min(d_hi), &inner_opts)
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN);
        }
        if d_hi > s.max(d_lo) {
            total += above
                * integrate(|d| f_d.pdf(d), s.max(d_lo), d_hi, &inner_opts)
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN);
        }
        total
    };

    let (s_lo, s_hi) = f_s.support();
    let outer_opts = QuadOptions::default().with_tolerances(1e-6, 1e-8);
    let survival = integrate(|s| f_s.pdf(s) * inner(s), s_lo, s_hi, &outer_opts)?.value;
    Ok((1.0 - survival).clamp(0.0, 1.0))
}

/// Unconditional CDF of the distance to the nearest charging crossing,
/// obtained by averaging the conditional law over source and destination
/// densities with nested quadrature.
pub fn marginal_nearest_charging_cdf(
    spec: &ThinningSpec,
    lambda: f64,
    f_s: &Density1d,
    f_d: &Density1d,
    x: f64,
) -> Result<f64, AnalyticError> {
    marginal_nearest_cdf(spec, lambda, RoadKind::Charging, f_s, f_d, x)
}

/// Non-charging analogue of [`marginal_nearest_charging_cdf`].
pub fn marginal_nearest_noncharging_cdf(
    spec: &ThinningSpec,
    lambda: f64,
    f_s: &Density1d,
    f_d: &Density1d,
    x: f64,
) -> Result<f64, AnalyticError> {
    marginal_nearest_cdf(spec, lambda, RoadKind::NonCharging, f_s, f_d, x)
}
