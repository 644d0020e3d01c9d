//! Reversible-circuit constructions for quantum Monte Carlo pricing under a
//! piecewise-linear local volatility model.
//!
//! The crate contains two circuit builders ([`prn_way`] and [`rn_way`]), a
//! sparse basis-state simulator ([`circuit`]), a bit-exact classical reference
//! engine ([`lvmodel`]) and closed-form resource estimates ([`resources`]).
//! Each capability has a runnable program under `examples/`.

pub mod circuit;
pub mod config;
pub mod error;
pub mod fixedpoint;
pub mod icdf;
pub mod lvmodel;
pub mod normal;
pub mod prn_way;
pub mod prng;
pub mod resources;
pub mod rn_way;

pub use error::{Error, Result};
pub use fixedpoint::{FxFormat, FxNum};
