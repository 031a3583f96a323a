//! Linear functionals T over a model chain, represented by the per-model
//! value vectors {T(φ_λ)} plus the variance data the selector needs:
//!
//! * σ_m² = Var T(ŝ_m) — the variance of the model-m projection estimate,
//! * σ_{j,m}² = Var(T(ŝ_j) − T(ŝ_m)) — the pairwise difference variance.
//!
//! For an orthonormal within-model family these are (σ²/n)·Σ_λ T(φ_λ)² and,
//! for nested spans, the difference of the two model variances. Non-nested
//! pairs (the indicator extra model) go through an explicit Gram quadratic
//! form.

use crate::basis::{
    self, grid_coefficients, haar_cell_1d, interval_overlap, multid_haar_cell, BasisKind,
    ExtraModel, ModelChain, ModelRef,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::observation::{NoiseModel, ObservationRecord};
use crate::quadrature;
use crate::signal::Signal;

/// The two built-in oscillating weight functions for integral functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedG {
    /// cos(64πx)
    G1,
    /// cos(4πx)
    G2,
}

impl NamedG {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            NamedG::G1 => (64.0 * std::f64::consts::PI * x).cos(),
            NamedG::G2 => (4.0 * std::f64::consts::PI * x).cos(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NamedG::G1 => "g1",
            NamedG::G2 => "g2",
        }
    }
}

/// The weight g of an integral functional ∫ s·g.
#[derive(Debug, Clone)]
pub enum GFunction {
    Named(NamedG),
    Formula(Expr),
    /// Midpoint samples on the dyadic truth grid (power-of-two length).
    Grid(Vec<f64>),
}

impl GFunction {
    /// Midpoint samples at the given dyadic depth.
    pub fn grid_on(&self, depth: u32) -> Vec<f64> {
        match self {
            GFunction::Named(g) => quadrature::midpoint_grid(|x| g.eval(x), depth),
            GFunction::Formula(e) => quadrature::midpoint_grid(|x| e.eval(x), depth),
            GFunction::Grid(v) => v.clone(),
        }
    }

    /// Values at the observation grid points i/n, i = 1..n (used by the
    /// plug-in and empirical-integral procedures).
    pub fn observation_grid(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            GFunction::Named(g) => Ok((1..=n).map(|i| g.eval(i as f64 / n as f64)).collect()),
            GFunction::Formula(e) => Ok((1..=n).map(|i| e.eval(i as f64 / n as f64)).collect()),
            GFunction::Grid(v) => {
                // The grid form stores midpoint samples; resampling them at
                // the observation points would silently shift the quadrature.
                if v.len() == n {
                    Ok(v.clone())
                } else {
                    Err(Error::GridLengthMismatch {
                        got: v.len(),
                        want: n,
                    })
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            GFunction::Named(g) => g.name().to_string(),
            GFunction::Formula(_) => "formula".to_string(),
            GFunction::Grid(_) => "grid".to_string(),
        }
    }
}

/// Which linear functional of the signal is being estimated.
#[derive(Debug, Clone)]
pub enum FunctionalSpec {
    /// T(s) = s^{(r)}(x0). Built-in bases support r = 0 only; higher
    /// derivatives must be supplied through `Custom` value vectors.
    PointEval { x0: Vec<f64>, r: u32 },
    /// T(s) = (1/(hi−lo))·∫_{lo}^{hi} s.
    IntervalMean { lo: f64, hi: f64 },
    /// T(s) = ∫₀¹ s·g.
    IntegralAgainstG { g: GFunction },
    /// Raw per-model value vectors T(φ_λ), one per chain position.
    Custom { values: Vec<Vec<f64>> },
}

impl FunctionalSpec {
    pub fn point(x0: f64) -> FunctionalSpec {
        FunctionalSpec::PointEval { x0: vec![x0], r: 0 }
    }

    pub fn point_md(x0: Vec<f64>) -> FunctionalSpec {
        FunctionalSpec::PointEval { x0, r: 0 }
    }

    pub fn interval_mean(lo: f64, hi: f64) -> Result<FunctionalSpec> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || hi <= lo {
            return Err(Error::BadIntervalLength(hi - lo));
        }
        Ok(FunctionalSpec::IntervalMean { lo, hi })
    }

    pub fn integral(g: GFunction) -> FunctionalSpec {
        FunctionalSpec::IntegralAgainstG { g }
    }

    pub fn dimension(&self) -> usize {
        match self {
            FunctionalSpec::PointEval { x0, .. } => x0.len(),
            _ => 1,
        }
    }

    /// Short functional-kind label for report rows.
    pub fn kind_label(&self) -> &'static str {
        match self {
            FunctionalSpec::PointEval { .. } => "point",
            FunctionalSpec::IntervalMean { .. } => "interval-mean",
            FunctionalSpec::IntegralAgainstG { .. } => "integral",
            FunctionalSpec::Custom { .. } => "custom",
        }
    }

    /// Parameter label (the table column key) for report rows.
    pub fn point_label(&self) -> String {
        match self {
            FunctionalSpec::PointEval { x0, .. } => {
                if x0.len() == 1 {
                    format!("{}", x0[0])
                } else {
                    let coords: Vec<String> = x0.iter().map(|v| v.to_string()).collect();
                    format!("({})", coords.join(","))
                }
            }
            FunctionalSpec::IntervalMean { lo, hi } => format!("H={}", hi - lo),
            FunctionalSpec::IntegralAgainstG { g } => g.label(),
            FunctionalSpec::Custom { .. } => "custom".to_string(),
        }
    }
}

/// The exact value T(s), computed from the signal itself (dyadic midpoint
/// quadrature at the signal's truth depth for the integral kinds).
/// ∫_lo^hi s(x)·w(x) dx at the signal's truth depth, with the quadrature
/// split at the signal's breakpoints so kinks and jumps never sit inside a
/// panel.
fn truth_integral(signal: &Signal, weight: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let depth = signal.truth_quadrature_depth;
    let mut cuts = vec![lo];
    for b in signal.breakpoints() {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.push(hi);
    cuts.windows(2)
        .map(|w| quadrature::midpoint(|x| signal.eval(x) * weight(x), w[0], w[1], depth))
        .sum()
}

pub fn truth_functional(signal: &Signal, spec: &FunctionalSpec) -> Result<f64> {
    match spec {
        FunctionalSpec::PointEval { x0, r } => {
            if *r != 0 {
                return Err(Error::UnsupportedFunctional(
                    "derivative truths require a user-supplied functional".into(),
                ));
            }
            Ok(signal.eval_axis0(x0))
        }
        FunctionalSpec::IntervalMean { lo, hi } => {
            Ok(truth_integral(signal, |_| 1.0, *lo, *hi) / (hi - lo))
        }
        FunctionalSpec::IntegralAgainstG { g } => {
            match g {
                GFunction::Named(gg) => Ok(truth_integral(signal, |x| gg.eval(x), 0.0, 1.0)),
                GFunction::Formula(e) => Ok(truth_integral(signal, |x| e.eval(x), 0.0, 1.0)),
                GFunction::Grid(v) => {
                    if !v.len().is_power_of_two() {
                        return Err(Error::GridLengthMismatch {
                            got: v.len(),
                            want: v.len().next_power_of_two(),
                        });
                    }
                    let d = v.len().trailing_zeros();
                    let s_grid = signal.truth_grid(d);
                    Ok(quadrature::inner_product(&s_grid, v))
                }
            }
        }
        FunctionalSpec::Custom { .. } => Err(Error::NoTruthForCustom),
    }
}

/// Scaling of the variance quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum SigmaScale {
    /// σ_m² carries the noise factor σ²/n (the selector's native scale).
    #[default]
    #[serde(rename = "noise-scaled")]
    NoiseScaled,
    /// σ_m² is the bare projection norm ‖π_{S_m}g‖² (no noise factor); the
    /// alternative convention for integral functionals.
    #[serde(rename = "projection-norm")]
    ProjectionNorm,
}

/// How the pairwise difference variances were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramMode {
    /// All pairs nested: σ_{j,m}² = σ_j² − σ_m².
    Nested,
    /// At least one pair required an explicit Gram quadratic form.
    GeneralGram,
}

/// A functional compiled against a chain: value vectors and variances.
#[derive(Debug, Clone)]
pub struct FunctionalRep {
    /// values[pos][λ] = T(φ_λ) for the model at chain position `pos`.
    pub values: Vec<Vec<f64>>,
    /// sigma_sq[pos] = σ_m².
    pub sigma_sq: Vec<f64>,
    /// Flattened symmetric matrix of σ_{j,m}² (row-major over positions).
    diff_sq: Vec<f64>,
    pub gram_mode: GramMode,
}

impl FunctionalRep {
    /// Assembles a representation from raw parts, e.g. externally computed
    /// value vectors and variances for a custom functional. `diff_sq` must
    /// be a full symmetric matrix with zero diagonal and non-negative
    /// entries.
    pub fn from_parts(
        values: Vec<Vec<f64>>,
        sigma_sq: Vec<f64>,
        diff_sq: Vec<Vec<f64>>,
        gram_mode: GramMode,
    ) -> Result<FunctionalRep> {
        let n = sigma_sq.len();
        if values.len() != n {
            return Err(Error::GridLengthMismatch {
                got: values.len(),
                want: n,
            });
        }
        if diff_sq.len() != n || diff_sq.iter().any(|row| row.len() != n) {
            return Err(Error::GridLengthMismatch {
                got: diff_sq.len(),
                want: n,
            });
        }
        if sigma_sq.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::NonPsdGram(
                sigma_sq.iter().cloned().fold(f64::INFINITY, f64::min),
            ));
        }
        let mut flat = vec![0.0; n * n];
        for a in 0..n {
            if diff_sq[a][a] != 0.0 {
                return Err(Error::Config(
                    "difference-variance matrix must have a zero diagonal".into(),
                ));
            }
            for b in 0..n {
                let d = diff_sq[a][b];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::NonPsdGram(d));
                }
                if diff_sq[b][a] != d {
                    return Err(Error::Config(
                        "difference-variance matrix must be symmetric".into(),
                    ));
                }
                flat[a * n + b] = d;
            }
        }
        Ok(FunctionalRep {
            values,
            sigma_sq,
            diff_sq: flat,
            gram_mode,
        })
    }

    pub fn n_models(&self) -> usize {
        self.sigma_sq.len()
    }

    /// σ_{j,m}² for the (order-insensitive) pair of chain positions.
    pub fn sigma_diff_sq(&self, a: usize, b: usize) -> f64 {
        self.diff_sq[a * self.n_models() + b]
    }
}

/// General difference-variance quadratic form: given the value vectors of
/// two models and the Gram matrix of their concatenated basis lists
/// (model a's functions first), returns Var-factor⁻¹·Var(T(ŝ_a) − T(ŝ_b)) =
/// vᵀGv with v = (+T(φ_λ), λ∈Λ_a; −T(φ_μ), μ∈Λ_b).
///
/// A result below −10⁻¹⁰ indicates a broken Gram matrix and is an error;
/// small negative round-off is clamped to 0.
pub fn sigma_diff_general(values_a: &[f64], values_b: &[f64], gram: &[Vec<f64>]) -> Result<f64> {
    let na = values_a.len();
    let nb = values_b.len();
    if gram.len() != na + nb || gram.iter().any(|row| row.len() != na + nb) {
        return Err(Error::GridLengthMismatch {
            got: gram.len(),
            want: na + nb,
        });
    }
    let v: Vec<f64> = values_a
        .iter()
        .copied()
        .chain(values_b.iter().map(|x| -x))
        .collect();
    let mut acc = 0.0;
    for (i, vi) in v.iter().enumerate() {
        if *vi == 0.0 {
            continue;
        }
        for (j, vj) in v.iter().enumerate() {
            acc += vi * vj * gram[i][j];
        }
    }
    if acc < -1e-10 {
        return Err(Error::NonPsdGram(acc));
    }
    Ok(acc.max(0.0))
}

fn extra_interval(chain: &ModelChain) -> Result<(f64, f64)> {
    match chain.extra {
        Some(ExtraModel::IntervalIndicator { lo, hi }) => Ok((lo, hi)),
        None => Err(Error::Config("chain has no extra model".into())),
    }
}

/// T(φ_λ) values for one chain position.
fn values_for_model(
    spec: &FunctionalSpec,
    chain: &ModelChain,
    pos: usize,
    quad_depth: u32,
) -> Result<Vec<f64>> {
    let model_ref = chain.model(pos)?;
    match spec {
        FunctionalSpec::Custom { values } => {
            let v = values
                .get(pos)
                .ok_or_else(|| Error::Config("custom values missing a model".into()))?;
            if v.len() != chain.dim(pos)? {
                return Err(Error::GridLengthMismatch {
                    got: v.len(),
                    want: chain.dim(pos)?,
                });
            }
            Ok(v.clone())
        }
        FunctionalSpec::PointEval { x0, r } => {
            if *r != 0 {
                return Err(Error::UnsupportedFunctional(
                    "built-in bases support point evaluation of the function itself only; \
                     supply derivative values through a custom functional"
                        .into(),
                ));
            }
            if x0.len() != chain.basis.family.dimension {
                return Err(Error::UnsupportedFunctional(format!(
                    "point has dimension {}, basis has dimension {}",
                    x0.len(),
                    chain.basis.family.dimension
                )));
            }
            match model_ref {
                ModelRef::Extra => {
                    let (lo, hi) = extra_interval(chain)?;
                    let x = x0[0];
                    let inside = (x > lo && x <= hi) || (x == lo && lo == 0.0);
                    Ok(vec![if inside {
                        1.0 / (hi - lo).sqrt()
                    } else {
                        0.0
                    }])
                }
                ModelRef::Level(m) => match chain.basis.family.kind {
                    BasisKind::Haar1D => {
                        let cells = 1usize << m;
                        let mut v = vec![0.0; cells];
                        v[haar_cell_1d(x0[0], m)] = (cells as f64).sqrt();
                        Ok(v)
                    }
                    BasisKind::HaarMultiD => {
                        let d = chain.basis.family.dimension;
                        let per_dim = 1usize << m;
                        let cell = multid_haar_cell(x0, m);
                        let flat = cell.iter().fold(0usize, |acc, &k| acc * per_dim + k);
                        let mut v = vec![0.0; per_dim.pow(d as u32)];
                        v[flat] = (per_dim.pow(d as u32) as f64).sqrt();
                        Ok(v)
                    }
                    BasisKind::Daubechies20_1D => {
                        let cells = 1usize << m;
                        (0..cells)
                            .map(|k| chain.basis.scaling_eval(m, k, x0[0]))
                            .collect()
                    }
                },
            }
        }
        FunctionalSpec::IntervalMean { lo, hi } => {
            let h = hi - lo;
            match model_ref {
                ModelRef::Extra => {
                    let (clo, chi) = extra_interval(chain)?;
                    let ov = interval_overlap(*lo, *hi, clo, chi);
                    Ok(vec![ov / (h * (chi - clo).sqrt())])
                }
                ModelRef::Level(m) => match chain.basis.family.kind {
                    BasisKind::Haar1D => {
                        let cells = 1usize << m;
                        let w = 1.0 / cells as f64;
                        let scale = (cells as f64).sqrt();
                        Ok((0..cells)
                            .map(|k| {
                                let ov =
                                    interval_overlap(*lo, *hi, k as f64 * w, (k + 1) as f64 * w);
                                scale * ov / h
                            })
                            .collect())
                    }
                    BasisKind::Daubechies20_1D => {
                        let cells = 1usize << m;
                        (0..cells)
                            .map(|k| {
                                Ok(quadrature::midpoint(
                                    |x| chain.basis.scaling_eval(m, k, x).unwrap_or(0.0),
                                    *lo,
                                    *hi,
                                    quad_depth,
                                ) / h)
                            })
                            .collect()
                    }
                    BasisKind::HaarMultiD => Err(Error::UnsupportedFunctional(
                        "interval means are one-dimensional".into(),
                    )),
                },
            }
        }
        FunctionalSpec::IntegralAgainstG { g } => {
            if chain.basis.family.dimension != 1 {
                return Err(Error::UnsupportedFunctional(
                    "integral functionals are one-dimensional".into(),
                ));
            }
            let g_grid = g.grid_on(quad_depth);
            grid_coefficients(&g_grid, chain, pos)
        }
    }
}

fn noise_factor(model: &NoiseModel, scale: SigmaScale) -> f64 {
    match scale {
        SigmaScale::NoiseScaled => model.sigma * model.sigma / model.n as f64,
        SigmaScale::ProjectionNorm => 1.0,
    }
}

/// Compiles a functional against a chain with the default (noise-scaled)
/// variance convention.
pub fn build_functional_rep(
    spec: &FunctionalSpec,
    chain: &ModelChain,
    model: &NoiseModel,
) -> Result<FunctionalRep> {
    build_functional_rep_scaled(spec, chain, model, SigmaScale::NoiseScaled)
}

/// Compiles a functional against a chain.
///
/// Value vectors come from closed forms where the basis admits them (all
/// piecewise-constant cases, interval overlaps) and dyadic quadrature
/// otherwise. Variances use Σ_λ T(φ_λ)² per model; difference variances use
/// the nested shortcut σ_j² − σ_m² for level pairs and the explicit Gram
/// quadratic form for pairs involving the indicator model.
pub fn build_functional_rep_scaled(
    spec: &FunctionalSpec,
    chain: &ModelChain,
    model: &NoiseModel,
    scale: SigmaScale,
) -> Result<FunctionalRep> {
    let quad_depth = quadrature::DEFAULT_DEPTH;
    let n_models = chain.n_models();
    let mut values = Vec::with_capacity(n_models);
    for pos in 0..n_models {
        values.push(values_for_model(spec, chain, pos, quad_depth)?);
    }
    let factor = noise_factor(model, scale);
    let sigma_sq: Vec<f64> = values
        .iter()
        .map(|v| factor * v.iter().map(|t| t * t).sum::<f64>())
        .collect();

    let mut diff_sq = vec![0.0; n_models * n_models];
    let mut gram_mode = GramMode::Nested;
    for a in 0..n_models {
        for b in (a + 1)..n_models {
            let d = if chain.is_nested_pair(a, b) {
                let d = sigma_sq[b] - sigma_sq[a];
                if d < -1e-10 * (1.0 + sigma_sq[b]) {
                    return Err(Error::NonPsdGram(d));
                }
                d.max(0.0)
            } else {
                gram_mode = GramMode::GeneralGram;
                let gram = union_gram(chain, a, b, quad_depth)?;
                factor * sigma_diff_general(&values[a], &values[b], &gram)?
            };
            diff_sq[a * n_models + b] = d;
            diff_sq[b * n_models + a] = d;
        }
    }
    Ok(FunctionalRep {
        values,
        sigma_sq,
        diff_sq,
        gram_mode,
    })
}

/// Gram matrix of the concatenated basis lists of two chain positions.
/// Within-model blocks are identities (each model's family is orthonormal);
/// cross blocks use exact overlaps for piecewise-constant/indicator pairs
/// and dyadic quadrature otherwise.
fn union_gram(chain: &ModelChain, a: usize, b: usize, quad_depth: u32) -> Result<Vec<Vec<f64>>> {
    let da = chain.dim(a)?;
    let db = chain.dim(b)?;
    let total = da + db;
    let mut gram = vec![vec![0.0; total]; total];
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for i in 0..da {
        for j in 0..db {
            let g = basis_inner_product(chain, a, i, b, j, quad_depth)?;
            gram[i][da + j] = g;
            gram[da + j][i] = g;
        }
    }
    Ok(gram)
}

/// ⟨φ^{(a)}_i, φ^{(b)}_j⟩ for basis functions of two chain models.
fn basis_inner_product(
    chain: &ModelChain,
    a: usize,
    i: usize,
    b: usize,
    j: usize,
    quad_depth: u32,
) -> Result<f64> {
    let eval_pair = |level_pos: usize, idx: usize, lo: f64, hi: f64| -> Result<f64> {
        // ⟨φ_{m,k}, indicator/√h⟩ for the model at level_pos.
        let ModelRef::Level(m) = chain.model(level_pos)? else {
            return Err(Error::Config("expected a dyadic level".into()));
        };
        let h = hi - lo;
        match chain.basis.family.kind {
            BasisKind::Haar1D => {
                let cells = 1usize << m;
                let w = 1.0 / cells as f64;
                let ov = interval_overlap(lo, hi, idx as f64 * w, (idx + 1) as f64 * w);
                Ok((cells as f64).sqrt() * ov / h.sqrt())
            }
            BasisKind::Daubechies20_1D => Ok(quadrature::midpoint(
                |x| chain.basis.scaling_eval(m, idx, x).unwrap_or(0.0),
                lo,
                hi,
                quad_depth,
            ) / h.sqrt()),
            BasisKind::HaarMultiD => Err(Error::Config(
                "indicator pairs are one-dimensional".into(),
            )),
        }
    };
    match (chain.model(a)?, chain.model(b)?) {
        (ModelRef::Level(ma), ModelRef::Level(mb)) => {
            // Cross-level inner products of one multiresolution family:
            // ⟨φ_{ma,i}, φ_{mb,j}⟩. Only needed off the nested shortcut, so
            // compute by quadrature.
            let len = 1usize << quad_depth;
            let step = 1.0 / len as f64;
            let mut acc = 0.0;
            for t in 0..len {
                let x = (t as f64 + 0.5) * step;
                acc += chain.basis.scaling_eval(ma, i, x)? * chain.basis.scaling_eval(mb, j, x)?;
            }
            Ok(acc * step)
        }
        (ModelRef::Level(_), ModelRef::Extra) => {
            let (lo, hi) = extra_interval(chain)?;
            eval_pair(a, i, lo, hi)
        }
        (ModelRef::Extra, ModelRef::Level(_)) => {
            let (lo, hi) = extra_interval(chain)?;
            eval_pair(b, j, lo, hi)
        }
        (ModelRef::Extra, ModelRef::Extra) => Ok(1.0),
    }
}

/// Variances for an integral functional straight from projection norms:
/// σ_m² = factor·‖π_{S_m}g‖² and σ_{j,m}² = factor·(‖π_{S_j}g‖² − ‖π_{S_m}g‖²),
/// with factor per the scale convention. Requires a pure multiresolution
/// chain (nested spans).
pub fn integral_sigma_from_projections(
    g_grid: &[f64],
    chain: &ModelChain,
    model: &NoiseModel,
    scale: SigmaScale,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if chain.extra.is_some() {
        return Err(Error::Config(
            "projection-norm variances need a pure multiresolution chain".into(),
        ));
    }
    let factor = noise_factor(model, scale);
    let n_models = chain.n_models();
    let norms: Vec<f64> = (0..n_models)
        .map(|pos| basis::projection_norm_sq(g_grid, chain, pos))
        .collect::<Result<_>>()?;
    let sigma_sq: Vec<f64> = norms.iter().map(|p| factor * p).collect();
    let mut diff_sq = vec![0.0; n_models * n_models];
    for a in 0..n_models {
        for b in (a + 1)..n_models {
            let d = (sigma_sq[b] - sigma_sq[a]).max(0.0);
            diff_sq[a * n_models + b] = d;
            diff_sq[b * n_models + a] = d;
        }
    }
    Ok((sigma_sq, diff_sq))
}

/// T(ŝ_m) = Σ_λ Y(φ_λ)·T(φ_λ) for the model at chain position `pos`.
#[allow(non_snake_case)]
pub fn estimate_T(
    record: &ObservationRecord,
    rep: &FunctionalRep,
    chain: &ModelChain,
    pos: usize,
) -> Result<f64> {
    let coeffs = basis::empirical_coefficients(record, chain, pos)?;
    estimate_from_coefficients(rep, pos, &coeffs)
}

/// Same contraction when the coefficients are already available.
pub fn estimate_from_coefficients(
    rep: &FunctionalRep,
    pos: usize,
    coeffs: &[f64],
) -> Result<f64> {
    let v = rep
        .values
        .get(pos)
        .ok_or(Error::LevelNotInChain { m: pos })?;
    if v.len() != coeffs.len() {
        return Err(Error::GridLengthMismatch {
            got: coeffs.len(),
            want: v.len(),
        });
    }
    Ok(v.iter().zip(coeffs.iter()).map(|(t, c)| t * c).sum())
}
