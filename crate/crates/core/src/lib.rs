//! Kac–Stroock type approximations driven by a single Poisson process.
//!
//! For a kernel `f(t, ·) ∈ L²(ℝ⁺)` and `θ ∈ (0, π) ∪ (π, 2π)` the processes
//!
//! ```text
//! Y_ε(t) = (2/ε) ∫ f(t, s) cos(θ N_{2s/ε²}) ds
//! Ỹ_ε(t) = (2/ε) ∫ f(t, s) sin(θ N_{2s/ε²}) ds
//! ```
//!
//! converge in finite-dimensional law, as `ε → 0`, to two independent
//! Wiener integrals `∫ f(t, s) dW_s`. With the Volterra kernel of fractional
//! Brownian motion, the Lei–Nualart kernel, and their combination, the crate
//! builds approximations of fBm, of `X^H`, and of sub-fractional Brownian
//! motion, and checks them with Monte Carlo statistics against closed-form
//! covariances and an independent quadrature oracle.

pub mod ensemble;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod poisson;
pub mod quadrature;
pub mod registry;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
pub use kernels::{CovModel, Covariance, Kernel, KernelSpec, ThetaParam};
pub use poisson::{PathTag, PoissonPath, PoissonStream, Segment};
