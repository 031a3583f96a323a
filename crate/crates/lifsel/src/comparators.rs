//! Reference procedures the selection rule is benchmarked against:
//!
//! * an unbiased-risk (Cp) level selector followed by the same plug-in,
//! * wavelet hard thresholding at the universal level σ·√(2·ln n),
//! * the raw empirical functional of the observations.
//!
//! All three act on finite-regression records and produce their estimate of
//! T(s) by applying the functional to a grid reconstruction (or, for the
//! empirical procedure, to the raw data).

use crate::basis::{self, BasisFamily, BasisKind, ModelChain};
use crate::error::{Error, Result};
use crate::functional::FunctionalSpec;
use crate::observation::{ModelKind, ObservationRecord};
use crate::transform::{decompose, reconstruct, HAAR_FILTER};

/// Applies a linear functional to a grid of values at i/n, i = 1..n:
/// point evaluation reads the grid cell containing the point, interval
/// means average the covered grid points, integrals use the n-point
/// right-endpoint rule.
pub fn apply_on_grid(grid: &[f64], spec: &FunctionalSpec) -> Result<f64> {
    let n = grid.len();
    if n == 0 {
        return Err(Error::BadSampleSize);
    }
    match spec {
        FunctionalSpec::PointEval { x0, r } => {
            if *r != 0 || x0.len() != 1 {
                return Err(Error::UnsupportedFunctional(
                    "grid plug-in supports one-dimensional point evaluation only".into(),
                ));
            }
            let idx = ((x0[0] * n as f64).ceil() as usize).clamp(1, n) - 1;
            Ok(grid[idx])
        }
        FunctionalSpec::IntervalMean { lo, hi } => {
            let h = hi - lo;
            let mut acc = 0.0;
            for (i, v) in grid.iter().enumerate() {
                let x = (i + 1) as f64 / n as f64;
                if x > *lo && x <= *hi {
                    acc += v;
                }
            }
            Ok(acc / (n as f64 * h))
        }
        FunctionalSpec::IntegralAgainstG { g } => {
            let g_obs = g.observation_grid(n)?;
            Ok(grid
                .iter()
                .zip(g_obs.iter())
                .map(|(v, gv)| v * gv)
                .sum::<f64>()
                / n as f64)
        }
        FunctionalSpec::Custom { .. } => Err(Error::UnsupportedFunctional(
            "grid plug-in has no rule for custom functionals".into(),
        )),
    }
}

/// Outcome of the unbiased-risk level selection.
#[derive(Debug, Clone)]
pub struct CpSelection {
    /// Chain position of the minimizing model (ties go to the smallest).
    pub position: usize,
    /// score(m) = γ_n(ŝ_m) + 2·D_m·σ²/n, with γ_n the empirical contrast.
    pub scores: Vec<f64>,
    /// The selected model's reconstruction at the observation grid.
    pub grid: Vec<f64>,
}

/// Unbiased-risk (Cp) selection over the chain: minimizes the empirical
/// contrast γ_n(ŝ_m) = (1/n)·Σ(y_i − ŝ_m(i/n))² plus 2·D_m·σ²/n.
pub fn p2_select(record: &ObservationRecord, chain: &ModelChain) -> Result<CpSelection> {
    let coeffs: Vec<Vec<f64>> = (0..chain.n_models())
        .map(|pos| basis::empirical_coefficients(record, chain, pos))
        .collect::<Result<_>>()?;
    p2_select_with_coefficients(record, chain, &coeffs)
}

/// Same as [`p2_select`] but reuses per-model empirical coefficients the
/// caller already extracted from `record`.
pub fn p2_select_with_coefficients(
    record: &ObservationRecord,
    chain: &ModelChain,
    coeffs: &[Vec<f64>],
) -> Result<CpSelection> {
    if record.model.kind != ModelKind::FiniteRegression {
        return Err(Error::Config(
            "unbiased-risk selection works on finite-regression records".into(),
        ));
    }
    if coeffs.len() != chain.n_models() {
        return Err(Error::Config(
            "coefficient list does not match the model chain".into(),
        ));
    }
    let n = record.model.n;
    let sigma_sq = record.model.sigma * record.model.sigma;
    let mut scores = Vec::with_capacity(chain.n_models());
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for pos in 0..chain.n_models() {
        let grid = basis::reconstruct_on_grid(chain, pos, &coeffs[pos], n)?;
        let residual_sq: f64 = grid
            .iter()
            .zip(record.data.iter())
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            / n as f64;
        let score = residual_sq + 2.0 * chain.dim(pos)? as f64 * sigma_sq / n as f64;
        scores.push(score);
        let better = match &best {
            None => true,
            Some((_, s, _)) => score < *s,
        };
        if better {
            best = Some((pos, score, grid));
        }
    }
    let (position, _, grid) = best.ok_or(Error::EmptyModelList)?;
    Ok(CpSelection {
        position,
        scores,
        grid,
    })
}

/// Hard threshold: coefficients smaller in magnitude than t are set to 0.
pub fn hard_threshold(c: f64, t: f64) -> f64 {
    if c.abs() < t {
        0.0
    } else {
        c
    }
}

/// Wavelet denoising at the universal threshold σ·√(2·ln n): runs the
/// orthonormal filter-bank transform of the family down to
/// `keep_coarse_level`, hard-thresholds every detail coefficient, keeps the
/// remaining smooth coefficients untouched, and reconstructs the grid.
pub fn p3_denoise(
    record: &ObservationRecord,
    family: &BasisFamily,
    keep_coarse_level: u32,
) -> Result<Vec<f64>> {
    if record.model.kind != ModelKind::FiniteRegression {
        return Err(Error::Config(
            "threshold denoising works on finite-regression records".into(),
        ));
    }
    let n = record.model.n;
    if !n.is_power_of_two() {
        return Err(Error::NonDyadicN { n });
    }
    let filter: &[f64] = match family.kind {
        BasisKind::Haar1D => &HAAR_FILTER,
        BasisKind::Daubechies20_1D => &basis::D20_FILTER,
        BasisKind::HaarMultiD => {
            return Err(Error::UnsupportedFunctional(
                "threshold denoising is one-dimensional".into(),
            ))
        }
    };
    let j = n.trailing_zeros();
    let steps = j.saturating_sub(keep_coarse_level);
    let t = record.model.sigma * (2.0 * (n as f64).ln()).sqrt();
    let mut dec = decompose(&record.data, filter, steps);
    for level in dec.details.iter_mut() {
        for c in level.iter_mut() {
            *c = hard_threshold(*c, t);
        }
    }
    Ok(reconstruct(&dec, filter))
}

/// The raw empirical functional of the observations: the functional's
/// grid plug-in applied directly to the data vector, e.g.
/// (1/n)·Σ y_i·g(i/n) for an integral against g.
pub fn p4_empirical(record: &ObservationRecord, spec: &FunctionalSpec) -> Result<f64> {
    if record.model.kind != ModelKind::FiniteRegression {
        return Err(Error::Config(
            "the empirical functional works on finite-regression records".into(),
        ));
    }
    apply_on_grid(&record.data, spec)
}
