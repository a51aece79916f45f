//! Random regular graphs: models, switchings, and numerics for the local
//! semicircle law.
//!
//! The crate is `no_std` and needs only `alloc`. Vertices are 0-based
//! throughout, so the distinguished vertex of the resampling maps is `0`.

#![no_std]

extern crate alloc;

pub mod eigen_observables;
pub mod error;
pub mod graph_models;
pub mod law_harness;
pub mod linalg;
pub mod local_resampling;
pub mod quadrature;
pub mod rng;
pub mod spectral_core;
pub mod stability_concentration;

pub use error::{Error, Result};
