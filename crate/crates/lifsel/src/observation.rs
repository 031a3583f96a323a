//! Observation models for the Gaussian measurement process
//! Y(t) = ⟨s,t⟩ + (σ/√n)·L(t), with L a centered Gaussian process whose
//! covariance is the inner product (Cov(L(t), L(u)) = ⟨t,u⟩).
//!
//! Three concrete forms are provided:
//!
//! * `FiniteRegression`: y_i = s(i/n) + σ·ε_i at the grid points i/n,
//!   i = 1..n, with Y(t) realized as the grid average (1/n)Σ t(i/n)·y_i.
//! * `GaussianSequence`: direct per-coordinate observations
//!   Y_λ = β_λ + σ·ε_λ/√n of a coefficient vector β.
//! * `WhiteNoise`: the continuous model represented by its scaling
//!   coefficients at one fine level J: Y(φ_{J,k}) ~ N(⟨s, φ_{J,k}⟩, σ²/n),
//!   independent across k (the functions φ_{J,k} are orthonormal).
//!   Coefficients at coarser levels are derived exactly by filtering, so the
//!   cross-level covariance structure of the continuous model is preserved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::signal::Signal;

/// Which concrete realization of the observation process is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    FiniteRegression,
    GaussianSequence,
    WhiteNoise,
}

/// Sample size and noise level of the observation process.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub kind: ModelKind,
    pub n: usize,
    pub sigma: f64,
}

impl NoiseModel {
    /// `n ≥ 1`; `sigma` must be finite and nonnegative (zero gives the
    /// noiseless model, used by exactness tests).
    pub fn new(kind: ModelKind, n: usize, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadSampleSize);
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::BadSigma(sigma));
        }
        Ok(NoiseModel { kind, n, sigma })
    }

    pub fn regression(n: usize, sigma: f64) -> Result<Self> {
        Self::new(ModelKind::FiniteRegression, n, sigma)
    }

    pub fn sequence(n: usize, sigma: f64) -> Result<Self> {
        Self::new(ModelKind::GaussianSequence, n, sigma)
    }

    pub fn white_noise(n: usize, sigma: f64) -> Result<Self> {
        Self::new(ModelKind::WhiteNoise, n, sigma)
    }
}

/// One simulated draw of the observation process.
///
/// `data` holds grid samples (`FiniteRegression`) or a coefficient stream
/// (`GaussianSequence`, `WhiteNoise`). For `WhiteNoise`, `fine_level` is the
/// dyadic level J of the stream (`data.len() == 2^J`).
#[derive(Debug, Clone)]
pub struct ObservationRecord {
    pub model: NoiseModel,
    pub data: Vec<f64>,
    pub fine_level: Option<u32>,
    pub seed: u64,
    pub replicate: u64,
}

/// A replicate-indexed RNG: one master seed, one independent stream per
/// replicate, so parallel runs reproduce the sequential ones exactly.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Draws y_i = s(i/n) + σ·ε_i for i = 1..n.
pub fn simulate_regression(
    signal: &Signal,
    model: NoiseModel,
    seed: u64,
    replicate: u64,
) -> Result<ObservationRecord> {
    if model.kind != ModelKind::FiniteRegression {
        return Err(Error::Config(
            "simulate_regression requires a FiniteRegression model".into(),
        ));
    }
    let mut rng = replicate_rng(seed, replicate);
    let n = model.n;
    let data = (1..=n)
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            signal.eval(i as f64 / n as f64) + model.sigma * z
        })
        .collect();
    Ok(ObservationRecord {
        model,
        data,
        fine_level: None,
        seed,
        replicate,
    })
}

/// Draws the coordinate observations Y_λ = β_λ + σ·ε_λ/√n.
pub fn simulate_sequence(
    betas: &[f64],
    model: NoiseModel,
    seed: u64,
    replicate: u64,
) -> Result<ObservationRecord> {
    if model.kind != ModelKind::GaussianSequence {
        return Err(Error::Config(
            "simulate_sequence requires a GaussianSequence model".into(),
        ));
    }
    let mut rng = replicate_rng(seed, replicate);
    let scale = model.sigma / (model.n as f64).sqrt();
    let data = betas
        .iter()
        .map(|b| {
            let z: f64 = StandardNormal.sample(&mut rng);
            b + scale * z
        })
        .collect();
    Ok(ObservationRecord {
        model,
        data,
        fine_level: None,
        seed,
        replicate,
    })
}

/// Draws y = s(x) + σ·ε over the d-dimensional product grid with side
/// length side = n^{1/d}: sample points run through coordinates
/// (c₁/side, …, c_d/side), cᵢ ∈ 1..=side, with the last coordinate moving
/// fastest — the order the multiresolution coefficient extraction expects.
/// The signal is extended to the cube through its first coordinate.
pub fn simulate_regression_md(
    signal: &Signal,
    model: NoiseModel,
    dimension: usize,
    seed: u64,
    replicate: u64,
) -> Result<ObservationRecord> {
    if model.kind != ModelKind::FiniteRegression {
        return Err(Error::Config(
            "simulate_regression_md requires a FiniteRegression model".into(),
        ));
    }
    let side = crate::basis::side_length(model.n, dimension)?;
    let mut rng = replicate_rng(seed, replicate);
    let mut coords = vec![1usize; dimension];
    let mut point = vec![0.0; dimension];
    let mut data = Vec::with_capacity(model.n);
    for _ in 0..model.n {
        for (p, &c) in point.iter_mut().zip(coords.iter()) {
            *p = c as f64 / side as f64;
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        data.push(signal.eval_axis0(&point) + model.sigma * z);
        for j in (0..dimension).rev() {
            if coords[j] < side {
                coords[j] += 1;
                break;
            }
            coords[j] = 1;
        }
    }
    Ok(ObservationRecord {
        model,
        data,
        fine_level: None,
        seed,
        replicate,
    })
}

/// Draws the level-J scaling coefficients of the continuous model:
/// Y(φ_{J,k}) = ⟨s, φ_{J,k}⟩ + σ·ε_k/√n for k = 0..2^J−1, where the mean is
/// the Haar cell integral 2^{J/2}·∫_{cell k} s (midpoint quadrature at the
/// signal's truth depth).
pub fn simulate_white_noise(
    signal: &Signal,
    model: NoiseModel,
    fine_level: u32,
    seed: u64,
    replicate: u64,
) -> Result<ObservationRecord> {
    if model.kind != ModelKind::WhiteNoise {
        return Err(Error::Config(
            "simulate_white_noise requires a WhiteNoise model".into(),
        ));
    }
    let depth = signal.truth_quadrature_depth.max(fine_level + 2);
    let grid = signal.truth_grid(depth);
    let scale = 2f64.powf(fine_level as f64 / 2.0);
    let mut rng = replicate_rng(seed, replicate);
    let noise_sd = model.sigma / (model.n as f64).sqrt();
    let data = (0..1usize << fine_level)
        .map(|k| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * quadrature::cell_integral(&grid, fine_level, k, depth) + noise_sd * z
        })
        .collect();
    Ok(ObservationRecord {
        model,
        data,
        fine_level: Some(fine_level),
        seed,
        replicate,
    })
}

/// Applies the observation functional Y to a test function `t`.
///
/// For `FiniteRegression`, `t_grid` holds t(i/n) for i = 1..n and the result
/// is the grid average (1/n)Σ t(i/n)·y_i. For the coefficient-stream models,
/// `t_grid` holds the coefficients of t in the stream's orthonormal family
/// and the result is Σ t_λ·Y_λ (a unit coordinate vector reads off one
/// observation).
pub fn observe_coefficient(record: &ObservationRecord, t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() != record.data.len() {
        return Err(Error::GridLengthMismatch {
            got: t_grid.len(),
            want: record.data.len(),
        });
    }
    let dot: f64 = t_grid
        .iter()
        .zip(record.data.iter())
        .map(|(t, y)| t * y)
        .sum();
    match record.model.kind {
        ModelKind::FiniteRegression => Ok(dot / record.model.n as f64),
        ModelKind::GaussianSequence | ModelKind::WhiteNoise => Ok(dot),
    }
}
