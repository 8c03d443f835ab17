//! Empirical distribution functions with distribution-free confidence
//! bands.

use serde::{Deserialize, Serialize};

/// DKW confidence level used for bands.
pub const DKW_CONFIDENCE: f64 = 0.99;

/// Empirical CDF over `n` trials, of which some may be censored (observed
/// to never happen). Censored trials count in the denominator, so the
/// function plateaus below one when censoring is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    n: usize,
    band: f64,
}

fn dkw_band(n: usize) -> f64 {
    ((2.0 / (1.0 - DKW_CONFIDENCE)).ln() / (2.0 * n as f64)).sqrt()
}

impl EmpiricalCdf {
    /// Build from fully observed samples.
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        EmpiricalCdf { values: samples, n, band: dkw_band(n.max(1)) }
    }

    /// Build from observed samples plus a count of censored trials.
    pub fn with_censored(mut observed: Vec<f64>, censored: usize) -> Self {
        observed.sort_by(f64::total_cmp);
        let n = observed.len() + censored;
        EmpiricalCdf { values: observed, n, band: dkw_band(n.max(1)) }
    }

    /// Total number of trials, censored included.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn observed(&self) -> &[f64] {
        &self.values
    }

    pub fn censored(&self) -> usize {
        self.n - self.values.len()
    }

    /// Half-width of the DKW band at confidence [`DKW_CONFIDENCE`].
    pub fn band(&self) -> f64 {
        self.band
    }

    /// Right-continuous evaluation `P(X <= x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|v| *v <= x);
        k as f64 / self.n as f64
    }

    /// Merge two estimates built from disjoint sample sets.
    pub fn merge(&self, other: &EmpiricalCdf) -> EmpiricalCdf {
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        EmpiricalCdf::with_censored(values, self.censored() + other.censored())
    }

    /// Kolmogorov-Smirnov distance against a reference CDF, evaluated at
    /// the sample jump points (both sides of each jump).
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, reference: F) -> f64 {
        let n = self.n as f64;
        let mut sup: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let f = reference(*v);
            let above = ((i + 1) as f64 / n - f).abs();
            let below = (i as f64 / n - f).abs();
            sup = sup.max(above).max(below);
        }
        sup
    }

    /// Rows of `(value, F, band_lo, band_hi)` for CSV export.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let n = self.n as f64;
        let band = self.band;
        self.values.iter().enumerate().map(move |(i, v)| {
            let f = (i + 1) as f64 / n;
            (*v, f, (f - band).max(0.0), (f + band).min(1.0))
        })
    }
}
