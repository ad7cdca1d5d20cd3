//! Numerical core for BMS-invariant free field theory: the celestial sphere,
//! the BMS group, supermomenta, Hida-type white-noise calculus, Lagrangian
//! dynamics and induced representations.

pub mod bmsgroup;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod induced;
pub mod serial;
pub mod sphere;
pub mod supermomenta;
pub mod verify;
pub mod whitenoise;

pub use error::{Error, Result};
