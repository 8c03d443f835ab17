//! Manhattan Poisson line process sampling and thinning.
//!
//! A realization is two independent Poisson point processes of intensity
//! `lambda` along the axes: vertical roads at sampled x-offsets and
//! horizontal roads at sampled y-offsets, restricted to a finite square
//! window around the city center.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::thinning::ThinningSpec;

/// Square sampling window `[-half_width, half_width]^2`, city center at the
/// origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    pub half_width: f64,
}

impl SimWindow {
    pub fn new(half_width: f64) -> Result<Self, MplpError> {
        if half_width <= 0.0 || !half_width.is_finite() {
            return Err(MplpError::InvalidParameter {
                name: "half_width",
                value: half_width,
            });
        }
        Ok(SimWindow { half_width })
    }

    pub fn contains_offset(&self, coord: f64) -> bool {
        coord.abs() <= self.half_width
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MplpError {
    #[error("{name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// One road of a realization: its axis offset and charging mark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadLine {
    /// Signed offset from the center: x for vertical roads, y for
    /// horizontal ones.
    pub coord: f64,
    pub charging: bool,
}

/// A sampled city: vertical and horizontal road lines inside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityRealization {
    pub vertical: Vec<RoadLine>,
    pub horizontal: Vec<RoadLine>,
    pub lambda: f64,
    pub window: SimWindow,
}

impl CityRealization {
    pub fn line_count(&self) -> usize {
        self.vertical.len() + self.horizontal.len()
    }

    pub fn charging_count(&self) -> usize {
        self.vertical
            .iter()
            .chain(self.horizontal.iter())
            .filter(|l| l.charging)
            .count()
    }

    /// Export as CSV with header `axis,coord_m,charging`.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis", "coord_m", "charging"])?;
        for line in &self.vertical {
            w.write_record(["vertical", &format!("{}", line.coord), charging_str(line.charging)])?;
        }
        for line in &self.horizontal {
            w.write_record(["horizontal", &format!("{}", line.coord), charging_str(line.charging)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn charging_str(c: bool) -> &'static str {
    if c {
        "1"
    } else {
        "0"
    }
}

fn sample_axis<R: Rng>(lambda: f64, window: SimWindow, rng: &mut R) -> Vec<RoadLine> {
    let mean = 2.0 * lambda * window.half_width;
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut lines: Vec<RoadLine> = (0..count)
        .map(|_| RoadLine {
            coord: rng.random_range(-window.half_width..=window.half_width),
            charging: false,
        })
        .collect();
    lines.sort_by(|a, b| a.coord.total_cmp(&b.coord));
    lines
}

/// Sample a homogeneous realization; every road starts non-charging.
///
/// Counts on each axis are Poisson with mean `2 * lambda * half_width` and
/// offsets are uniform in the window. Deterministic given the seed, with
/// independent streams per axis.
pub fn sample_mplp(
    lambda: f64,
    window: SimWindow,
    seed: u64,
) -> Result<CityRealization, MplpError> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(MplpError::InvalidParameter { name: "lambda", value: lambda });
    }
    let mut v_rng = rng::stream(seed, rng::PURPOSE_MPLP_VERTICAL);
    let mut h_rng = rng::stream(seed, rng::PURPOSE_MPLP_HORIZONTAL);
    Ok(CityRealization {
        vertical: sample_axis(lambda, window, &mut v_rng),
        horizontal: sample_axis(lambda, window, &mut h_rng),
        lambda,
        window,
    })
}

/// Mark each road charging independently with probability `g(coord)`.
///
/// Charging roads then form an inhomogeneous process of intensity
/// `lambda * g(r)`, non-charging roads one of intensity `lambda * (1 - g(r))`.
pub fn thin(city: &CityRealization, spec: &ThinningSpec, seed: u64) -> CityRealization {
    let mut out = city.clone();
    let mut v_rng = rng::stream(seed, rng::PURPOSE_THIN_VERTICAL);
    let mut h_rng = rng::stream(seed, rng::PURPOSE_THIN_HORIZONTAL);
    for line in &mut out.vertical {
        line.charging = v_rng.random::<f64>() < spec.charging_probability(line.coord);
    }
    for line in &mut out.horizontal {
        line.charging = h_rng.random::<f64>() < spec.charging_probability(line.coord);
    }
    out
}
