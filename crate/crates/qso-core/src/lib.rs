//! Volterra-type quadratic stochastic operator dynamics on probability
//! measures over [0,1).
//!
//! The operator integrates a symmetric two-parent kernel against the product
//! of a measure with itself: parents x < y produce the smaller point with
//! probability p and the larger with q = 1 − p. The crate provides
//!
//! - exact dynamics on finite atomic measures ([`atomic`]), where one step
//!   is the Volterra-style weight update w_k(w_k + 2q·below + 2p·above);
//! - pointwise CDF/density orbits for continuous measures ([`cdf`]), driven
//!   by the interval map G(x) = x(x + 2q(1−x)) and the density-factor
//!   product f(x) = 2px + 2q(1−x);
//! - certificate constants and grid verification for the density bounds
//!   ([`bounds`]);
//! - convergence diagnostics toward the predicted Dirac limits
//!   ([`convergence`]);
//! - an independent Monte Carlo particle oracle ([`particle`]);
//! - the invariant suite behind the CLI `verify` command ([`verify`]).
//!
//! Orientation note: the atomic/particle family sends mass toward the
//! smallest support point when p > 1/2, while the continuous CDF orbit (as
//! written) sends mass toward the right endpoint for the same p. The two
//! families are exact mirror images under p ↦ 1 − p; the particle oracle's
//! [`particle::analytic_cdf_orbit`] bridges them.

pub mod atomic;
pub mod bounds;
pub mod cdf;
pub mod cli;
pub mod convergence;
pub mod error;
pub mod kernel;
pub mod output;
pub mod particle;
pub mod quad;
pub mod rng;
pub mod verify;

pub use atomic::{apply_once, iterate, predict_limit, AtomicMeasure, Trajectory};
pub use bounds::{certificate, min_valid_n, verify_bounds, BoundCertificate, BoundsReport};
pub use cdf::{f_factor, g_map, pushforward_interval, CdfMeasure, DensityOrbit, DensityValue};
pub use convergence::{
    fixed_point_check, run_to_convergence, w1_to_dirac_atomic, w1_to_dirac_cdf, ConvergenceReport,
    InitialMeasure, Metric, PredictedLimit,
};
pub use error::{Error, Result};
pub use kernel::{identity_kernel_measure, kernel_measure, KernelParams, KernelVariant};
pub use particle::{sample_initial, step_generation, ParticleEnsemble};
