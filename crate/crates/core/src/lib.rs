//! Robust mixture prior (RMP) dynamic borrowing for hybrid-control trials.
//!
//! The crate covers the full analysis pipeline:
//!
//! * [`numerics`] — normal CDF/quantile, quadrature, root finding;
//! * [`rmp`] — two-component normal mixture priors and exact conjugate
//!   posterior updating;
//! * [`borrowing`] — borrowing strength, (weight, variance) level sets and
//!   the equipoise-drift elicitation routine;
//! * [`delta`] — posterior inference for the treatment difference and the
//!   trial success criterion;
//! * [`oc`] — deterministic quadrature of type I error, power, design-prior
//!   averages, sweet spot and estimation diagnostics;
//! * [`mc`] — a reproducible Monte Carlo oracle that cross-checks every
//!   quadrature result;
//! * [`reference`](mod@reference) — the bundled reference trial
//!   configuration;
//! * [`theorems`] — executable property suites for the asymptotic behaviour
//!   of the borrowing machinery.

// validation guards are written as negated comparisons so NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod borrowing;
pub mod delta;
pub mod mc;
pub mod numerics;
pub mod oc;
pub mod reference;
pub mod rmp;
pub mod theorems;

pub use numerics::{QuadScheme, QuadratureSpec};
pub use rmp::{NormalComponent, PosteriorMixture, RobustMixturePrior, SamplingModel};
