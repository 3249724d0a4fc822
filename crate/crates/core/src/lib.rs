//! Randomized content placement, capacity and energy-efficiency analysis for
//! cache-enabled cooperative UAV networks, with a Monte Carlo
//! stochastic-geometry simulator as an independent check.
//!
//! Every numerical type is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod analytics;
pub mod caching;
pub mod channel;
pub mod error;
pub mod format;
pub mod harness;
pub mod quadrature;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use analytics::{CoopTerm, EnergyForm};
pub use caching::PolicyKind;
pub use channel::{EnvironmentKind, LinkMode, ShadowingConvention};

pub type Environment = channel::Environment<f64>;
pub type ChannelConfig = channel::ChannelConfig<f64>;
pub type LaplaceKernel = channel::LaplaceKernel<f64>;
pub type ContentLibrary = caching::ContentLibrary<f64>;
pub type PlacementPolicy = caching::PlacementPolicy<f64>;
pub type ScenarioConfig = analytics::ScenarioConfig<f64>;
pub type PowerModel = analytics::PowerModel<f64>;
pub type QuadratureConfig = analytics::QuadratureConfig<f64>;
pub type CapacityReport = analytics::CapacityReport<f64>;
pub type SimConfig = simulator::SimConfig<f64>;
pub type SimEstimate = simulator::SimEstimate<f64>;
pub type Simulator = simulator::Simulator<f64>;
pub type NetworkRealization = simulator::NetworkRealization<f64>;
