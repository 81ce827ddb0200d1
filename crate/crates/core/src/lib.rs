//! Key-rate analysis and simulation for semi-quantum key distribution with
//! qutrits and ququarts.

pub mod analysis;
pub mod attack;
pub mod channel;
pub mod cli;
pub mod error;
pub mod keyrate;
pub mod mub;
pub mod numerics;
pub mod sim;

pub use error::{Error, Result};
