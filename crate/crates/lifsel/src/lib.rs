//! Adaptive estimation of linear functionals of an unknown signal observed
//! in Gaussian noise, by penalized model selection.
//!
//! Given observations `Y(t) = ⟨s, t⟩ + (σ/√n)·L(t)` of an unknown signal `s`
//! (finite-grid regression, a Gaussian sequence, or a white-noise stream),
//! the crate estimates a linear functional `T(s)` — a point value, an
//! interval mean, or an integral `∫ s·g` — without assuming how smooth `s`
//! is. The estimator computes `T(ŝ_m)` on a chain of nested approximation
//! spaces (dyadic wavelet levels, optionally followed by one extra model)
//! and picks the model whose pairwise-deviation criterion
//!
//! ```text
//! crit(m) = sup_{j ≥ m} [ |T(ŝ_m) − T(ŝ_j)| − H(j, m) ]₊ + pen(m)
//! ```
//!
//! is within `1/n` of the minimum, where `pen` and `H` are deviation bounds
//! built from per-model weights and the exact variances of the functional's
//! coefficient representation.
//!
//! Modules:
//! * [`signal`], [`expr`] — test signals and a small formula language.
//! * [`observation`] — the three observation processes and their simulators.
//! * [`basis`], [`transform`] — scaling families (piecewise-constant, a
//!   20-tap orthonormal family, d-dimensional constant boxes), model chains,
//!   coefficient extraction, and the periodized filter-bank transform.
//! * [`functional`] — compiling a functional against a chain: value vectors,
//!   variances, and difference variances (nested shortcut or explicit Gram
//!   form).
//! * [`selector`] — weight schedules, penalties, the selection criterion.
//! * [`comparators`] — reference procedures: unbiased-risk (Cp) selection,
//!   hard thresholding, and the raw empirical functional.
//! * [`harness`] — the Monte Carlo benchmark engine and its CSV/markdown
//!   reports.

pub mod basis;
pub mod comparators;
pub mod error;
pub mod expr;
pub mod functional;
pub mod harness;
pub mod observation;
pub mod quadrature;
pub mod selector;
pub mod signal;
pub mod transform;

pub use error::{Error, Result};
