//! Transmuted geometric distribution toolkit.

pub mod data;
pub mod distribution;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod models;
pub mod params;
pub mod reliability;
pub mod report;
pub mod simulation;

pub use error::{Result, TgdError};
pub use params::{RngSeed, TgdParams};
