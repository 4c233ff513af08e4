//! Pseudo-spectral laboratory for the periodic 2D smectic energy
//!
//! ```text
//! E_eps(w) = 1/2 ∫ (1/eps) (|d1|^{-1} (d2 w - d1 w^2/2))^2 + eps (d1 w)^2 dx
//! ```
//!
//! on the unit torus, for fields with vanishing mean in `x1` on every line.
//!
//! The crate is organized bottom-up:
//!
//! - [`torus_field`]: grid samples and Fourier coefficients, admissibility.
//! - [`spectral_ops`]: Fourier multipliers, shifts, differences, dealiased products.
//! - [`energy`]: `E_eps`, `E` and the L2 gradient.
//! - [`besov_lab`]: Besov seminorms, HKM balance laws, L^3 / L^p estimates, Fourier tails.
//! - [`entropy_lab`]: entropy fields, Rankine-Hugoniot checks, jump cost.
//! - [`ansatz`]: mollified shock profiles and eps-sweeps.
//! - [`minimizer`]: projected descent with optional anchoring.

pub mod ansatz;
pub mod besov_lab;
pub mod energy;
pub mod entropy_lab;
pub mod error;
mod fft;
pub mod field_io;
pub mod minimizer;
pub mod record;
pub mod spectral_ops;
pub mod suite;
pub mod torus_field;

pub use error::{Result, SmecticError};
pub use record::{CheckKind, VerificationRecord};
pub use rustfft::num_complex::Complex64;
pub use torus_field::{random_band_limited, AdmissibleField, GridSpec, TorusField};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
