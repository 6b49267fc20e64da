//! Numerical toolkit for conditional sandwiched Rényi entropies, the Rényi chain
//! rule and entropy accumulation bounds, checked against brute-force oracles on
//! small Hilbert spaces.
#![forbid(unsafe_code)]

pub mod error;
pub mod linalg;
pub mod operator;
pub mod random;
pub mod optim;
pub mod entropy;
pub mod sdp;
pub mod smooth;
pub mod state;
pub mod chain;
pub mod eat;
pub mod apps;
pub mod io;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use operator::{reg, Operator, Register};
