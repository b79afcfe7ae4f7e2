//! Corruption-robust linear bandits.
//!
//! The crate provides the protocol data model ([`model`]), environments and
//! corruption adversaries ([`env`]), approximate G-optimal designs
//! ([`design`]), phased elimination for corrupted and misspecified
//! stochastic bandits ([`elimination`]), FTRL with a log-determinant
//! barrier for adversarial bandits ([`ftrl`]), continuous exponential
//! weights for the strong corruption measure ([`cew`]), the
//! misspecification-to-corruption reduction ([`reduction`]) and a seeded
//! batch experiment runner ([`harness`]).

pub mod cew;
pub mod design;
pub mod elimination;
pub mod env;
pub mod error;
pub mod ftrl;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod reduction;

pub use error::{Error, Result};
