//! Closed-form and quadrature evaluation of the deployment metrics.
//!
//! Everything here conditions on a source/destination pair: the source road
//! sits at signed center offset `s`, the destination road at `d`, and the
//! trip covers a horizontal separation `d_h` and a vertical separation
//! `d_v`. Distances to nearest charging and non-charging crossings follow
//! from the thinned line intensities; the event tree for the
//! destination-only-charging parallel case refines them into per-leaf
//! metric distributions.

mod props;
mod tree;

pub use props::{
    charging_gap_cdf, marginal_nearest_charging_cdf, marginal_nearest_noncharging_cdf,
    CrossingLaw, RoadKind,
};
pub use tree::{
    event_probabilities, metric_cdf_curve, metric_cdf_given_sd, DestOnlyLeaf, DestOnlyTree,
    EvalMethod, EventId, Metric,
};

use crate::quad::NumericError;
use crate::thinning::SpecError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative orientation of the source and destination roads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Parallel,
    Perpendicular,
}

/// A conditioned trip: road offsets plus the planar separations.
///
/// For parallel roads the separation along the shared axis is `d_h` and the
/// offset gap `|d - s|` is `d_v`. The source point is taken at coordinate
/// `s` on both axes, so spans toward the destination start at `s`
/// everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceDestPair {
    pub s: f64,
    pub d: f64,
    pub d_h: f64,
    pub d_v: f64,
    pub orientation: Orientation,
}

impl SourceDestPair {
    /// Parallel roads at offsets `s` and `d`, separated by `d_h` along
    /// their shared axis; `d_v` is implied by the offsets.
    pub fn parallel(s: f64, d: f64, d_h: f64) -> Result<Self, AnalyticError> {
        if d_h < 0.0 || !d_h.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "separation d_h must be non-negative, got {d_h}"
            )));
        }
        Ok(SourceDestPair { s, d, d_h, d_v: (d - s).abs(), orientation: Orientation::Parallel })
    }

    /// Perpendicular roads: a horizontal source at offset `s` and a
    /// vertical destination at offset `d`.
    pub fn perpendicular(s: f64, d: f64, d_h: f64, d_v: f64) -> Result<Self, AnalyticError> {
        if d_h < 0.0 || d_v < 0.0 || !d_h.is_finite() || !d_v.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "separations must be non-negative, got d_h={d_h} d_v={d_v}"
            )));
        }
        Ok(SourceDestPair { s, d, d_h, d_v, orientation: Orientation::Perpendicular })
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        if self.d_h < 0.0 || self.d_v < 0.0 {
            return Err(AnalyticError::InvalidParameter(
                "separations must be non-negative".into(),
            ));
        }
        if self.orientation == Orientation::Parallel
            && ((self.d - self.s).abs() - self.d_v).abs() > 1e-6
        {
            return Err(AnalyticError::InvalidParameter(format!(
                "parallel pair requires |d - s| = d_v, got |{} - {}| vs {}",
                self.d, self.s, self.d_v
            )));
        }
        Ok(())
    }

    /// Minimal trip length `d_h + d_v`.
    pub fn trip_length(&self) -> f64 {
        self.d_h + self.d_v
    }
}

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("conditioning event has vanishing probability")]
    ConditioningDegenerate,
    #[error("no closed form is available for {0}")]
    NotImplementedByPaper(&'static str),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("sampling failed: {0}")]
    Sampling(String),
}
