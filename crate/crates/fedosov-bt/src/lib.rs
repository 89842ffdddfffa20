//! Fedosov-type Berezin-Toeplitz quantization on model Kahler manifolds.
//!
//! The crate is organized around the local-to-global pipeline of the
//! construction:
//!
//! * [`jet`] / [`scalar`] - truncated Taylor coefficients over complex
//!   doubles or exact rationals;
//! * [`weyl`] - the truncated formal Weyl algebra with the fiberwise Wick
//!   product, the Koszul operators and the polarized-weight grading;
//! * [`geometry`] - model Kahler geometries (flat C^n, CP^1 with the
//!   Fubini-Study metric), their jets and connections;
//! * [`fedosov`] - the Fedosov connection for the Berezin-Toeplitz star
//!   product and its flat-section recursions;
//! * [`bf`] - the level-k Bargmann-Fock action and the higher
//!   Kostant-Souriau operators built from it;
//! * [`bergman`] - the concrete Hilbert spaces H^0(CP^1, O(k)): quadrature,
//!   Toeplitz matrices, operator norms and the verification studies;
//! * [`catalog`] - the function catalog used by the studies;
//! * [`report`] - tabular study output and slope fits.

pub mod bergman;
pub mod bf;
pub mod catalog;
pub mod fedosov;
pub mod geometry;
pub mod jet;
pub mod report;
pub mod scalar;
pub mod weyl;

pub use jet::{ChartJet, JetShape};
pub use scalar::{Scalar, C64, QC};
