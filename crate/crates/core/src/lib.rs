//! Single-excitation dynamics of a two-level atom inside a cavity whose
//! mirrors are chains of atoms coupled to a one-dimensional waveguide.
//!
//! Four independent routes to the central-atom amplitude `c0(t)` are provided
//! and cross-check each other:
//!
//! * [`dde`]: direct integration of the retarded equations of motion,
//! * [`series`]: the exact sum of delayed partial-fraction terms,
//! * [`spectral`]: residue sums over the poles of the Laplace transform,
//! * closed-form approximations, also in [`spectral`].
//!
//! [`mirror`] computes the reflectance of a single atomic mirror and
//! [`model`] holds the parameter space and the experimental presets.
//!
//! Units: the single-atom waveguide decay rate γ is 1, times are in 1/γ and
//! lengths in v_g/γ.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
// `!(x < y)` is used deliberately so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod analysis;
pub mod dd;
pub mod dde;
mod error;
mod math;
pub mod mirror;
pub mod model;
pub mod poly;
#[cfg(test)]
mod properties;
pub mod roots;
pub mod series;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{CavityParams, DerivedGroups, FiguresOfMerit, Platform, PlatformPreset};
pub use trajectory::{DelayState, Method, Trajectory, TrajectoryMeta};

/// Complex amplitude type used throughout the crate.
pub type C64 = num_complex::Complex64;
