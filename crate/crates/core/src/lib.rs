//! Numerical laboratory for 1D scattering of Gaussian wave packets on the
//! Eckart potential `V(x) = U0 / cosh^2(alpha x)`.
//!
//! The crate is organised bottom-up: complex special functions, the potential
//! and its semiclassical integrals, the exact transmission amplitude, its pole
//! expansion, the delay-amplitude distribution, wave-packet propagation and
//! brute-force oracles used for cross-validation.

pub mod csv_out;
pub mod delay;
pub mod error;
mod lattice;
pub mod oracles;
pub mod poles;
pub mod potential;
pub mod quadrature;
pub mod special_fn;
pub mod transmission;
pub mod wavepacket;

pub use error::{Error, Result};
pub use num_complex::Complex64 as Complex;
pub use special_fn::LogComplex;
