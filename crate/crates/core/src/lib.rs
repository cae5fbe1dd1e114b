//! Simulation of indoor non-line-of-sight mmWave links relayed by passive
//! specular reflectors.
//!
//! The crate is organized bottom-up:
//!
//! - [`materials`]: complex permittivity, Fresnel coefficients, Rayleigh
//!   roughness and the bundled material database.
//! - [`scene`]: 3-D world model and image-method specular geometry.
//! - [`linkbudget`]: bistatic radar cross section, uniform linear array gain
//!   and the bistatic radar equation.
//! - [`lidar`]: a virtual LiDAR that sees the NLoS user through the
//!   reflector and turns the sighting into a beam-steering angle.
//! - [`experiment`]: fixed, exhaustive and LiDAR-guided beam selection over a
//!   receiver grid, CCDF curves and improvement statistics.
//!
//! ```
//! use specular_link::experiment::{run_strategy, Strategy};
//! use specular_link::linkbudget::RadioParams;
//! use specular_link::scene::build_default_scene;
//!
//! let scene = build_default_scene();
//! let radio = RadioParams::default();
//! let field = run_strategy(&scene, &radio, 0, &Strategy::exhaustive(), 0.0, 7).unwrap();
//! assert_eq!(field.records.len(), 102);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod lidar;
pub mod linkbudget;
pub mod materials;
pub mod scene;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wavelength in meters for a carrier frequency in Hz.
pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

// Book chapters are compiled and run as doc-tests so the guide cannot drift
// from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/materials.md")]
    mod materials {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/link-budget.md")]
    mod link_budget {}
    #[doc = include_str!("../../../book/src/lidar.md")]
    mod lidar {}
    #[doc = include_str!("../../../book/src/experiment.md")]
    mod experiment {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
