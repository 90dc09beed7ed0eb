//! Finite-dimensional reduction toolkit for sign-changing blow-up of the
//! slightly subcritical Hardy-Sobolev problem on the unit ball.

pub mod error;
pub mod quadrature;

pub use error::{Error, Result};
pub mod integrals;
pub mod profiles;
pub mod ball;
pub mod critical;
pub mod reduced;
pub mod energy;
pub mod acceptance;
