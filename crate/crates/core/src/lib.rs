//! Drone transect survey planning and wildlife density estimation.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithm of the
//! toolkit: the grid-based transect planner, naive / bootstrap / ZINB
//! density extrapolation, the Random Encounter Model, the ANOVA and Tukey
//! comparison of methods, and a known-truth simulator used to check all of
//! the above. File formats and the command line live in the `dronesurvey`
//! crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ecosim;
pub mod error;
pub mod estimators;
pub mod field;
pub mod geom;
pub mod grid;
pub mod linalg;
pub mod math;
pub mod optim;
pub mod planner;
pub mod quadrature;
pub mod rem;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{DensityEstimate, Method};
pub use geom::{PlanarPoint, Polygon, SurveyRegion};
pub use grid::{GridGraph, GridSpec, Heading};
pub use planner::{FlightPlan, SurveyDesign, Transect};
