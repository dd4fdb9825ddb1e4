//! Synchronous probabilistic cellular automata on finite boxes of `Z^d`:
//! geometry, local rules, coupled simulation, exact enumeration and the
//! rate analysis built on top of them.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod exec;
pub mod lattice;
pub mod math;
pub mod noise;
pub mod rule;
pub mod stats;
pub mod dynamics;
pub mod coupling;
pub mod exact;
pub mod analysis;

pub use error::{Error, Result};
