//! Discrete minimizing constant-mean-curvature disks and planes in hyperbolic 3-space.
//!
//! The crate is `no_std` (with `alloc`). Geometry lives in the Poincaré ball
//! model; surfaces are Euclidean triangle meshes in the ball whose hyperbolic
//! area and enclosed volume are integrated with the conformal factor.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
#[macro_use]
extern crate std;

pub mod error;
pub mod exhaustion;
pub mod hyperbolic;
pub mod math;
pub mod mesh;
pub mod solver;
pub mod umbilic;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
