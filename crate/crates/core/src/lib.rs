//! Nonlinear generalized functions for impulsive gravitational waves.
//!
//! Smooth objects are represented by truncated Taylor jets ([`jet::Jet`]),
//! generalized functions by ε-indexed nets of such fields ([`gfn`]), and the
//! impulsive pp-wave by a metric built from a strict delta net ([`delta`]).

pub mod delta;
pub mod error;
pub mod geometry;
pub mod gfn;
pub mod jet;
pub mod numerics;
pub mod penrose;
pub mod ppwave;

pub use error::{Error, Result};
