//! Coverage probability toolkit for downlink coordinated-multipoint (CoMP)
//! mmWave heterogeneous cellular networks.
//!
//! A network is a superposition of homogeneous Poisson point processes (one
//! per tier), each tier with its own base-station density, transmit power and
//! blockage constant. The `n` base stations with the strongest average
//! received power jointly transmit to a typical user at the origin; everyone
//! else interferes through a uniform-linear-array beamforming gain evaluated
//! at a random directional-cosine offset.
//!
//! The crate provides two independent evaluation routes for the coverage
//! probability `P(SINR > T)`:
//!
//! * [`analytic`] — numerical evaluation of the coverage integrals
//!   (ordered-simplex outer integral over the cooperating pathlosses, Laplace
//!   transform of the shot-noise interference, characteristic-function
//!   inversion for Nakagami / no-fading signal models, and an incomplete-gamma
//!   closed form for the interference-free bound);
//! * [`simulator`] — a Monte Carlo engine that samples network realizations
//!   and builds the SINR sample-by-sample.
//!
//! Agreement between the two routes is the crate's primary correctness gate;
//! the `acceptance` integration test drives it end to end.

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod geometry;
pub mod quad;
pub mod simulator;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
