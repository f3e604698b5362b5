//! Lagrangian simulation of the modified Camassa–Holm equation
//!
//! ```text
//! m_t + [(u^2 - u_x^2) m]_x = 0,    m = u - u_xx,    u = G * m,    G(x) = e^{-|x|} / 2
//! ```
//!
//! The solver tracks characteristics `X(ξ, t)` and their label derivative `X_ξ` for
//! compactly supported initial momenta, detects the collision of characteristics that
//! marks finite-time blow-up, extracts the peakons formed at the blow-up time, and
//! continues solutions in the measure class with a mollified particle scheme.
//!
//! Module map:
//! * [`kernel`]: the Green kernel `G`, mollifiers and tabulated `G^ε`.
//! * [`momentum`]: initial momenta (densities plus atoms) and label grids.
//! * [`flow`]: the classical characteristic solver with O(N) velocity summation.
//! * [`blowup`]: lifespan bounds, blow-up detection, collapse and limit measures.
//! * [`eulerian`]: reconstruction of `u`, `u_x`, `m`, total variation, weak residuals.
//! * [`regularized`]: the mollified particle scheme and its consistency sweep.

pub mod blowup;
pub mod error;
pub mod eulerian;
pub mod flow;
pub mod kernel;
pub mod momentum;
pub mod quad;
pub mod regularized;

pub use error::{Error, Result};
