//! Digit-accurate simulator and analytic performance model of a CNN
//! accelerator built from left-to-right (most-significant-digit-first)
//! signed-digit arithmetic units.
//!
//! The crate has three layers:
//!
//! - [`sd`] and [`online`]: the redundant signed-digit number system and
//!   the cycle-stepped online multiplier, adder and reduction trees.
//! - [`sim`] and [`baseline`]: a digit-stepped simulation of one
//!   weight-stationary accelerator tile, checked against a nested-loop
//!   golden model, plus the functional/analytic bit-serial baseline.
//! - [`perf`] and [`zoo`]: the analytic cycle/throughput/efficiency model,
//!   report generation, built-in network tables and config ingestion.
//!
//! The `dslr` binary fronts all of it; see the repository README.

pub mod baseline;
pub mod config;
pub mod dyadic;
pub mod online;
pub mod perf;
pub mod sd;
pub mod sim;
pub mod tensor;
pub mod zoo;

pub use config::{BaselineConfig, HwProfile, LayerConfig, TileConfig, TilesForm};
pub use dyadic::Dyadic;
pub use sd::{DigitStream, Fixed, SignedDigit};
pub use tensor::TensorFx;
