//! Numerical laboratory for the Mallows measure on permutations and its
//! mean-field scaling limit.
//!
//! The crate is organised around the objects that show up when a Mallows
//! permutation with `q = 1 - β/n` is viewed as a mean-field spin system:
//!
//! - [`qstats`]: q-integers, the Poincaré polynomial `[n]_q!`, the finite and
//!   limiting pressure, and exact moments of the inversion count.
//! - [`sampler`]: permutations, Lehmer codes, exact Mallows sampling,
//!   brute-force enumeration and empirical histograms.
//! - [`limits`]: the limiting density `u(x, y; β)`, its general-marginal
//!   version and the exclusion-process profile `ρ(x; y; β)`.
//! - [`liouville`]: Picard solver for the Cauchy problem of
//!   `∂²ln u/∂x∂y = 2βu` in integral form.
//! - [`meanfield`]: the interaction kernel, the constrained Euler–Lagrange
//!   fixed point and the Gibbs variational functional.
//! - [`asep`]: push-forward of permutations to particle configurations and a
//!   continuous-time exclusion-process simulator.
//! - [`curieweiss`]: exact and Hubbard–Stratonovich Curie–Weiss pressure and the
//!   viscous Burgers structure of the magnetization.
//! - [`validate`]: the acceptance criteria as runnable checks.

pub mod asep;
pub mod curieweiss;
pub mod error;
pub mod grid;
pub mod limits;
pub mod liouville;
pub mod marginal;
pub mod meanfield;
pub mod qstats;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod validate;

pub use error::{LabError, Result};
pub use grid::GridFunction2D;
pub use marginal::MarginalDensity;
pub use qstats::{MallowsParams, PressureValue, QConvention};
pub use sampler::{LehmerCode, Permutation};

/// Version string stamped into every JSON document the crate emits.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
