//! Means of symmetric positive definite matrices.
//!
//! The crate computes two-variable Kubo-Ando matrix means, extends any
//! symmetric mean to weights `t` in `[0, 1]` through a dyadic binary-search
//! process governed by the multiplicative gauge
//! `R(A,B) = max{ρ(A⁻¹B), ρ(B⁻¹A)}`, and extends any symmetric mean to `n`
//! variables through the Ando-Li-Mathias and Bini-Meini-Poloni
//! symmetrization iterations. A diagnostics layer fits convergence orders
//! from iteration traces, estimates the quadratic coefficient of the
//! weighted-mean generator family, and verifies the order inequalities on
//! sampled inputs.
//!
//! Entry points:
//! - [`spd::SpdMatrix`] and the calculus in [`spd`] (spectral functions,
//!   congruence, metrics, Löwner comparison),
//! - [`kernels::mean2`] with the kernel catalog in [`kernels`],
//! - [`weighted::weighted_mean`] for `M_t(A, B)`,
//! - [`multivariate::alm_mean`] / [`multivariate::bmp_mean`],
//! - [`diagnostics`] for rate fits and inequality reports,
//! - [`io`] / [`cli`] for the matrix file format and the `spdmeans` binary.
//!
//! Every operation is a pure function of its inputs; all types are immutable
//! after construction and safe to share between threads. Runnable
//! demonstrations of each capability live under `examples/`.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kernels;
pub mod multivariate;
pub mod sampling;
pub mod spd;
pub mod weighted;

pub use error::{MeanError, Result};
pub use kernels::{mean2, MeanKernel, PullbackMean};
pub use multivariate::{alm_mean, bmp_mean, MultiMeanConfig, MultiMethod};
pub use spd::{validate_spd, SpdMatrix, SpectralFunction};
pub use weighted::{weighted_mean, WeightedMeanConfig};
