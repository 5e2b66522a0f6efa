//! Zig-zag meso-structure patterns modelled as networks of discrete elastic
//! rods: pattern generation, static equilibrium, homogenization into a
//! simplified network and inverse design of boundary anchors.

pub mod design;
pub mod elastic;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod network;
pub mod pattern;
pub mod reduction;
pub mod scenarios;

pub use error::{Error, Result};
