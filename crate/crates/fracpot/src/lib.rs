//! Fractional potential theory toolkit.
//!
//! The crate implements the numerical machinery around the fractional
//! mean-value identity for `s`-harmonic functions: a function with
//! `(-Δ)^s u = 0` in a domain recovers its value at the center of any ball
//! contained in the domain by averaging its *exterior* values against the
//! mean-value measure
//!
//! ```text
//! dμ_r(y) = c(n,s) · r^{2s} / ((|y|² - r²)^s |y|^n) dy      on  |y| > r.
//! ```
//!
//! On top of that identity sit:
//!
//! * [`kernels`] — the measure density, ball Poisson kernels and the
//!   Poisson-like boundary weight, with the normalizing constant `c(n,s)`
//!   obtained by numerical calibration;
//! * [`geometry`] — bounded domains (balls, unions, shifted balls, smoothed
//!   slab complements, implicit) with exact signed-distance queries;
//! * [`quadrature`] — singular/heavy-tail exterior integration against `μ_r`;
//! * [`harmonic`] — Poisson extensions, mollified kernel approximants and
//!   mean-value residual checks;
//! * [`wos`] — the fractional walk-on-spheres Monte Carlo solver driven by
//!   the exact ball exit law;
//! * [`gaps`] — the three mean-value gap functionals with witness families
//!   and an LP-optimized bounded witness search;
//! * [`limits`] — boundary limits of Poisson kernels, tangent-ball brackets
//!   and the ball-detection criterion.

pub mod error;
pub mod gaps;
#[cfg(test)]
pub(crate) mod testutil;
pub mod geometry;
pub mod harmonic;
pub mod kernels;
pub mod limits;
pub mod quadrature;
pub mod vecn;
pub mod wos;

pub use error::{Error, Result};
pub use gaps::{GapKind, GapReport, WitnessFamily};
pub use geometry::{Ball, Domain, TangentBalls};
pub use harmonic::{ExteriorData, Mollifier};
pub use kernels::{FracParams, MuMeasure};
pub use quadrature::{ExteriorQuadScheme, MuRegion, QuadResult};
pub use wos::{WosConfig, WosEstimate};
