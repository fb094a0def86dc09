//! Road-network graph inference from construction-site GPS trip logs.
//!
//! The pipeline runs preprocessing ([`trips`]), the heading histogram
//! ([`heading_grid`]), intersection detection ([`intersections`]), load and
//! drop-off nodes ([`action_nodes`]) and road inference ([`roads`]).

pub mod action_nodes;
pub mod cluster;
pub mod config;
pub mod error;
pub mod eval;
pub mod export;
pub mod geo;
pub mod heading_grid;
pub mod intersections;
pub mod pipeline;
pub mod plot;
pub mod polyline;
pub mod rng;
pub mod roads;
pub mod spline;
pub mod synth;
pub mod trips;

pub use error::{Error, Result};
