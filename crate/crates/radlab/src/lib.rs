//! Numerical lab for radial solutions of
//!
//! ```text
//! −Δu + m|∇u|^q − u^p = 0   in a punctured ball or an exterior domain of ℝ^N
//! ```
//!
//! together with its model reductions: Lane-Emden (−Δu = u^p), Riccati
//! (−Δu + m|∇u|^q = 0) and eikonal (u^p = m|∇u|^q).

pub mod closed_forms;
pub mod construction;
pub mod error;
pub mod ode;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod roots;
pub mod verification;

pub use error::{Error, Result};
pub use params::Params;

/// Library version, echoed in every artifact header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
