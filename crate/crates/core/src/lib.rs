//! Exact-arithmetic machinery for lower bounds in hypercube bin packing.
//!
//! The crate builds separated families of gapped languages, turns them into
//! verified single-bin packings of cubes of side `(1+eps)/k`, generates
//! adversarial instances for bounded-space online algorithms, and checks
//! equilibria of the selfish hypercube bin packing game. All geometry and all
//! costs are exact rationals.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod game;
pub mod geometry;
pub mod languages;
pub mod online;
pub mod packing;
pub mod params;
pub mod rat;
pub mod rng;

pub use geometry::{Bin, CubeClass, Interval, PlacedCube};
pub use rat::Rat;
