//! Reconstruction of piecewise-constant acoustic wavespeeds from
//! band-limited boundary data by projected Landweber iteration.

pub mod error;
pub mod boundary;
pub mod cli;
pub mod config;
pub mod grid;
pub mod helmholtz;
pub mod inversion;
pub mod model;
pub mod special;
pub mod timedomain;
pub mod weights;

pub use error::{Error, Result};
