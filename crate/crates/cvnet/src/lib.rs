//! Simulation and certification toolkit for one-way Bell experiments on
//! all-optical continuous-variable chain networks.
//!
//! The crate is organized around an exact Gaussian algebra: beams are
//! linear forms over independent vacuum seeds ([`quad`]), transformed by the
//! optical elements of the swapping chain ([`elements`]), assembled into the
//! two-chain polarization network ([`chain`]). On top of that sit the
//! photon-number Bell test ([`bell`]), parameter sweeps with a CSV data
//! product ([`sweep`]), the two-mode separability test ([`separability`]),
//! the classical-hybrid bound certifier ([`hybrid`]), an independent Monte
//! Carlo oracle ([`mc`]), and a small circuit description language
//! ([`dsl`]).

pub mod bell;
pub mod chain;
pub mod dsl;
pub mod elements;
mod error;
pub mod hybrid;
pub mod mc;
pub mod quad;
pub mod separability;
pub mod sweep;

pub use error::{Error, Result};
