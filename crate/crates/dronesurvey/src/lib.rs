//! File formats, plotting and the command-line front end for
//! [`dronesurvey_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod geojson;
pub mod plot;
pub mod report;
pub mod sim;

pub use dronesurvey_core as core;
pub use error::{Error, Result};
