//! Numerics for the asymmetric double well `V(q) = q²(1 - g q)²/2 - ε g q`.
//!
//! * [`model`]: potential, derivatives and the two wells.
//! * [`series`]: exact high-order perturbative coefficients and their large-order analysis.
//! * [`nonpert`]: the secular function, its zeros and closed-form non-perturbative levels.
//! * [`spectrum`]: oscillator-basis diagonalization.
//! * [`valley`]: valley-instanton and instanton/anti-instanton valley solutions.

pub mod dd;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod mp;
pub mod nonpert;
pub mod quad;
pub mod rational;
pub mod series;
pub mod spectrum;
pub mod valley;

pub use error::{Error, Result};
pub use exec::Execution;
