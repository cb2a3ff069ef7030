//! Heterogeneous Fisher-Snedecor F composite fading channels.
//!
//! The crate covers the channel laws (single reflector, reflector sums, per-UAV
//! subchannels and the heterogeneous composite), the water-filling power policy
//! matched to that law, an iterative joint bandwidth/power allocator for several
//! subchannels, and an energy-efficiency comparison between IRS-assisted and
//! relay-assisted links. Every analytic density has a second evaluation route
//! (Meijer G / Gauss hypergeometric) and a Monte Carlo sampler so results can be
//! cross-checked.
//!
//! Units are SI throughout the public API: watts, hertz, meters, bits/s.

pub mod channel;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod joint_alloc;
pub mod numerics;
pub mod power_alloc;
pub mod specfun;
pub mod validate;

pub use error::{Error, Result};
