//! Numerical workbench for the two-circle metrics on T²×I: closed-form
//! metric evaluation, calibration checks, discrete systoles on weighted
//! cubical meshes, sphere maps from pants decompositions, and j-sweeps.

pub mod error;
pub mod harness;
pub mod calibration;
pub mod complex;
pub mod metric;
pub mod pants;

pub use error::{Error, Result};
