//! Boundary crossing probabilities for Brownian motion and for diffusions that
//! reduce to it.
//!
//! The probability that a standard Brownian motion stays inside a
//! piecewise-linear band is the expectation of an explicit kernel over the
//! Gaussian values at the partition nodes ([`kernel`]). [`mc`] estimates that
//! expectation, and brackets the probability for general boundaries by
//! running the kernel on piecewise-linear envelopes. [`transforms`] maps
//! Ornstein-Uhlenbeck, growth and geometric Brownian motion problems onto
//! Brownian ones.

pub mod boundary;
pub mod error;
pub mod kernel;
pub mod mc;
pub mod normal;
pub mod quad;
pub mod transforms;

pub use boundary::{
    envelopes, GeneralBoundary, NodeSide, Partition, PiecewiseLinearBand, PiecewiseLinearBoundary,
    Side,
};
pub use error::{BcpError, Result};
pub use kernel::{g, h_term, Kernel, NodeSamples, SeriesConfig};
pub use mc::{estimate_bcp, estimate_bcp_bracketed, BcpEstimate, Bracket, McConfig};
pub use transforms::{
    check_reducibility, closed_form_bcp, CatalogCase, DiffusionSpec, Family, GbmParams,
    GrowthParams, OuParams, OuTdParams, Rate, ReducedProblem,
};
