//! Hash-based one-time signatures, the blind-forgery game, and a small
//! statevector laboratory for checking the quantum random oracle arguments
//! behind their security at toy parameter sizes.

pub mod attacks;
pub mod bits;
pub mod cli;
pub mod error;
pub mod game;
pub mod lemmas;
pub mod ots;
pub mod qsim;
pub mod qworlds;
pub mod rom;
pub mod seed;

pub use error::{Error, Result};
