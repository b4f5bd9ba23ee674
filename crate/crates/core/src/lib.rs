//! Lyapunov spectra and Oseledets splittings of semi-invertible matrix
//! cocycles, with numerical checks of the regularity of the splitting.

pub mod builtins;
pub mod cli;
pub mod cocycle;
pub mod error;
pub mod holder;
pub mod linalg;
pub mod met;
pub mod regularity;
pub mod subspace;

pub use error::{Error, Result};
