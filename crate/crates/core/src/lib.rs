//! Achievable-rate models and power-constrained design search for wideband
//! receivers with low-resolution ADCs.
//!
//! The numeric modules are generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the aliases below fix `f64`, which is
//! what the experiment drivers use.

pub mod config;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod oracle;
pub mod power;
pub mod quantizer;
pub mod rates;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Infeasibility, Result};
pub use rates::{Architecture, Csit};
pub use scalar::Real;

pub type QuantizerSpec = quantizer::QuantizerSpec<f64>;
pub type PowerModel = power::PowerModel<f64>;
pub type LinkConfig = rates::LinkConfig<f64>;
pub type ChannelRealization = rates::ChannelRealization<f64>;
pub type PowerAllocation = rates::PowerAllocation<f64>;
pub type CMatrix = linalg::CMatrix<f64>;
pub type DiscreteChannel = oracle::DiscreteChannel<f64>;

pub type QuantizerSpecF32 = quantizer::QuantizerSpec<f32>;
pub type PowerModelF32 = power::PowerModel<f32>;
pub type LinkConfigF32 = rates::LinkConfig<f32>;
