//! Circuit-level simulator for a two-layer stacked memristor crossbar.
//!
//! The two layers share their middle electrode as the column wire. Per-layer
//! read-enable lines route each cell either onto that shared column or to local
//! ground, which gives two operating modes:
//!
//! - **expansion**: both layers read together, doubling the inputs per column;
//! - **deep-net**: the layers hold complementary read-enable so one is programmed
//!   with the next network layer while the other reads out.
//!
//! The circuit math ([`device`], [`cell`], [`fabric`], [`engine`]) is generic over
//! [`Scalar`]; the aliases below fix it to `f64`, which is what the experiments and the
//! command-line tool use.

pub mod cell;
pub mod config;
pub mod device;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fabric;
pub mod io;
pub mod pipeline;
pub mod scalar;

pub use error::{Error, Result};
pub use fabric::Mode;
pub use scalar::Scalar;

pub type DeviceParams = device::DeviceParams<f64>;
pub type Device = device::DeviceInstance<f64>;
pub type TransistorParams = cell::TransistorParams<f64>;
pub type Cell = cell::CellInstance<f64>;
pub type FabricGeometry = fabric::FabricGeometry<f64>;
pub type Fabric = fabric::Fabric<f64>;
pub type Netlist = fabric::Netlist<f64>;
pub type SolveResult = fabric::SolveResult<f64>;

/// Single-precision variants, for memory-bound sweeps where 1e-9 agreement is not needed.
pub type Device32 = device::DeviceInstance<f32>;
pub type Fabric32 = fabric::Fabric<f32>;
