//! Site-specific specular ray tracing and MIMO channel rank analysis for
//! UAV air-to-ground links.
//!
//! The pipeline runs, per receiver site:
//!
//! 1. [`propagation::enumerate_paths`] finds every unblocked specular path
//!    (line of sight plus up to two reflections) over an extruded-building
//!    [`geometry::Scene`] using the image method.
//! 2. [`propagation::rssi`] sums the path fields into a received power.
//! 3. [`mimo::synthesize_channel`] builds the narrowband `N_r x N_t` channel
//!    matrix from uniform linear arrays at both ends.
//! 4. [`rankanalysis`] extracts singular values, applies the relative-K and
//!    population-mean thresholds, and derives ranks and condition numbers.
//!
//! [`sweep::run_sweep`] drives the whole thing over a receiver grid at
//! several altitudes and writes CSV tables, heatmaps and a run manifest.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod ingest;
pub mod material;
pub mod mimo;
pub mod output;
pub mod propagation;
pub mod rankanalysis;
pub mod sweep;

pub use error::{Error, Result};
pub use geometry::{Facet, FacetId, Scene, SceneBuilder, Vec3};
pub use material::Material;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wavelength in meters for a carrier frequency in Hz.
pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}
