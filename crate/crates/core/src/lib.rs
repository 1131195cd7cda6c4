//! Spectral laboratory for the gauged Benjamin-Ono flow.

pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod infr;
pub mod lab;
pub mod spectral;

pub use error::{Error, Result};
