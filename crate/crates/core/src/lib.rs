//! Superimposed RIS-phase modulation for RIS-assisted MIMO links.
//!
//! The library covers channel generation, the joint BS/RIS transmit alphabet,
//! maximum-likelihood, sphere-decoding and linear detection, analytical ABER
//! and capacity evaluation, precoder optimization and a Monte Carlo harness.
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`.

pub mod analysis;
pub mod channels;
pub mod detection;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod modulation;
pub mod precoding;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{CMatrix, CVector, Cx, Real};

pub type Alphabet64 = modulation::Alphabet<f64>;
pub type ChannelSet64 = channels::ChannelSet<f64>;
pub type StaticChannels64 = channels::StaticChannels<f64>;
