//! One-dimensional densities for source and destination road coordinates.
//!
//! The marginal nearest-road distributions average over where trips start
//! and end. Nothing in the model pins these densities down, so two
//! practical choices are provided: uniform over the simulation window, and
//! a power-law profile mirroring center-heavy traffic.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{integrate, QuadOptions};
use crate::thinning::ThinningSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density1d {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Density proportional to the power-law deployment profile on
    /// `[-half_width, half_width]`: plateau through `r_min`, then
    /// `(|r|/r_min)^(-alpha)` tails.
    PowerLaw { alpha: f64, r_min: f64, half_width: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("empty support: lo {lo} >= hi {hi}")]
    EmptySupport { lo: f64, hi: f64 },
    #[error("invalid power-law density parameters")]
    InvalidPowerLaw,
}

impl Density1d {
    pub fn validate(&self) -> Result<(), DensityError> {
        match self {
            Density1d::Uniform { lo, hi } => {
                if !(hi > lo) {
                    return Err(DensityError::EmptySupport { lo: *lo, hi: *hi });
                }
            }
            Density1d::PowerLaw { alpha, r_min, half_width } => {
                if !(*alpha > 0.0 && *r_min > 0.0 && *half_width > 0.0) {
                    return Err(DensityError::InvalidPowerLaw);
                }
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Density1d::Uniform { lo, hi } => (*lo, *hi),
            Density1d::PowerLaw { half_width, .. } => (-half_width, *half_width),
        }
    }

    fn power_law_norm(alpha: f64, r_min: f64, half_width: f64) -> f64 {
        ThinningSpec::power_law(alpha, r_min)
            .integral(-half_width, half_width)
            .expect("ordered bounds")
    }

    /// Density value at `r`.
    pub fn pdf(&self, r: f64) -> f64 {
        match self {
            Density1d::Uniform { lo, hi } => {
                if r >= *lo && r <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Density1d::PowerLaw { alpha, r_min, half_width } => {
                if r.abs() > *half_width {
                    0.0
                } else {
                    let profile = ThinningSpec::power_law(*alpha, *r_min).charging_probability(r);
                    profile / Self::power_law_norm(*alpha, *r_min, *half_width)
                }
            }
        }
    }

    /// Cumulative probability of `(-inf, r]`.
    pub fn cdf(&self, r: f64) -> f64 {
        match self {
            Density1d::Uniform { lo, hi } => ((r - lo) / (hi - lo)).clamp(0.0, 1.0),
            Density1d::PowerLaw { alpha, r_min, half_width } => {
                if r <= -half_width {
                    0.0
                } else if r >= *half_width {
                    1.0
                } else {
                    let spec = ThinningSpec::power_law(*alpha, *r_min);
                    spec.integral(-half_width, r).expect("ordered bounds")
                        / Self::power_law_norm(*alpha, *r_min, *half_width)
                }
            }
        }
    }

    /// Draw a sample by inverting the CDF.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            Density1d::Uniform { lo, hi } => lo + u * (hi - lo),
            Density1d::PowerLaw { half_width, .. } => {
                // Bisect the monotone CDF; 60 halvings put the error far
                // below a micrometer on city scales.
                let (mut lo, mut hi) = (-half_width, *half_width);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Quadrature check that the density integrates to one.
    pub fn normalization_defect(&self) -> f64 {
        let (lo, hi) = self.support();
        let opts = QuadOptions::default().with_tolerances(1e-10, 1e-10);
        let mass = integrate(|r| self.pdf(r), lo, hi, &opts)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        (mass - 1.0).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn both_variants_integrate_to_one() {
        for d in [
            Density1d::Uniform { lo: -2000.0, hi: 2000.0 },
            Density1d::PowerLaw { alpha: 1.0, r_min: 500.0, half_width: 2000.0 },
        ] {
            assert!(d.normalization_defect() < 1e-6, "{d:?}");
        }
    }

    #[test]
    fn sampling_matches_cdf() {
        let d = Density1d::PowerLaw { alpha: 1.5, r_min: 300.0, half_width: 2000.0 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let below: usize = (0..n).filter(|_| d.sample(&mut rng) < 0.0).count();
        // Symmetric density: half the mass below zero.
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
        let q = d.cdf(300.0);
        let below_q: usize = {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
            (0..n).filter(|_| d.sample(&mut rng) < 300.0).count()
        };
        assert!((below_q as f64 / n as f64 - q).abs() < 0.02);
    }

    #[test]
    fn invalid_supports_rejected() {
        assert!(Density1d::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(Density1d::PowerLaw { alpha: 0.0, r_min: 1.0, half_width: 1.0 }
            .validate()
            .is_err());
    }
}
