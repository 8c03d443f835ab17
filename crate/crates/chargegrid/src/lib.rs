//! Planning and analysis toolkit for dynamic (in-road wireless) EV charging
//! in grid-like cities.
//!
//! The crate models a city's street grid as a Manhattan Poisson line process,
//! marks roads as charging roads according to a deployment density, and then
//! quantifies what drivers get out of a deployment through three per-trip
//! metrics:
//!
//! * the distance driven before first entering a charging road,
//! * the fraction of the trip length driven on charging roads, and
//! * the energy received while driving.
//!
//! Distributions of these metrics are available two ways: closed forms and
//! quadrature in [`analytic`], and Monte Carlo over sampled cities in [`mc`].
//! The same deployment machinery applies to real road graphs ([`roadnet`]),
//! feeding battery simulations ([`evsim`]) and traffic-model fitting
//! ([`traffic`]).
//!
//! See the `book/` directory for a guided tour; every snippet there compiles
//! against this crate.

pub mod analytic;
pub mod density;
pub mod ecdf;
pub mod evsim;
pub mod geom;
pub mod mc;
pub mod mplp;
pub mod quad;
pub mod roadnet;
pub mod route;
pub mod thinning;
pub mod traffic;

pub(crate) mod rng;

pub use ecdf::EmpiricalCdf;
pub use geom::Point;
pub use mplp::{CityRealization, SimWindow};
pub use thinning::ThinningSpec;
