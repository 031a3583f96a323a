//! Multiresolution model collections on [0,1] (and [0,1]^d): periodized
//! piecewise-constant (Haar) and length-20 orthonormal (Daubechies-20)
//! scaling families, basis evaluation, empirical coefficient extraction, and
//! projection norms.
//!
//! Cell conventions (all evaluation is total on the closed cube):
//! * 1-D Haar cells are left-open/right-closed, (k·2⁻ᵐ, (k+1)·2⁻ᵐ], with
//!   x = 0 assigned to cell 0. This matches the grid sampling i/n, i = 1..n,
//!   whose points tile exactly these cells.
//! * d-dimensional Haar cells are left-closed/right-open with x_i = 1 clamped
//!   into the last cell (see `multid_haar_cell`).
//! * The length-20 family is evaluated from its dyadic refinement cascade and
//!   wrapped periodically.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::observation::{ModelKind, ObservationRecord};
use crate::quadrature;
use crate::transform;

/// Orthonormal 20-tap scaling filter (extremal phase): Σh = √2, Σh² = 1.
pub const D20_FILTER: [f64; 20] = [
    0.02667005790055555359,
    0.18817680007769148902,
    0.52720118893172558648,
    0.68845903945360356574,
    0.28117234366057746075,
    -0.24984642432731537942,
    -0.19594627437737704350,
    0.12736934033579326008,
    0.09305736460357235116,
    -0.07139414716639708715,
    -0.02945753682187581286,
    0.03321267405934100174,
    0.00360655356695616965,
    -0.01073317548333057504,
    0.00139535174705290117,
    0.00199240529518505612,
    -0.00068585669495971163,
    -0.00011646685512928545,
    0.00009358867032006959,
    -0.00001326420289452124,
];

/// Support length of the 20-tap scaling function: supp φ = [0, 19].
const D20_SUPPORT: usize = 19;

/// Which scaling family a model chain is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Haar1D,
    Daubechies20_1D,
    HaarMultiD,
}

/// A scaling family together with its evaluation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisFamily {
    pub kind: BasisKind,
    /// Ambient dimension (1 unless `HaarMultiD`).
    pub dimension: usize,
    /// Dyadic refinement depth for pointwise evaluation of the 20-tap
    /// scaling function (ignored by the piecewise-constant families).
    pub cascade_depth: u32,
}

/// Default refinement depth for the 20-tap family.
pub const DEFAULT_CASCADE_DEPTH: u32 = 14;

impl BasisFamily {
    pub fn haar() -> Self {
        BasisFamily {
            kind: BasisKind::Haar1D,
            dimension: 1,
            cascade_depth: 0,
        }
    }

    pub fn daubechies20() -> Self {
        BasisFamily {
            kind: BasisKind::Daubechies20_1D,
            dimension: 1,
            cascade_depth: DEFAULT_CASCADE_DEPTH,
        }
    }

    /// Refinement depth below 10 gives visibly wrong pointwise values and is
    /// rejected.
    pub fn daubechies20_with_depth(depth: u32) -> Result<Self> {
        if depth < 10 {
            return Err(Error::Config(format!(
                "cascade depth {depth} too small (minimum 10)"
            )));
        }
        Ok(BasisFamily {
            kind: BasisKind::Daubechies20_1D,
            dimension: 1,
            cascade_depth: depth,
        })
    }

    pub fn haar_multid(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        Ok(BasisFamily {
            kind: BasisKind::HaarMultiD,
            dimension,
            cascade_depth: 0,
        })
    }
}

/// Values of the 20-tap scaling function φ on its support [0, 19], tabulated
/// at spacing 2^{-depth} by the refinement cascade.
#[derive(Debug)]
pub struct CascadeTable {
    pub depth: u32,
    /// values[i] = φ(i / 2^depth), i = 0 ..= 19·2^depth.
    pub values: Vec<f64>,
}

impl CascadeTable {
    pub fn new(depth: u32) -> CascadeTable {
        let h = &D20_FILTER;
        let sqrt2 = std::f64::consts::SQRT_2;

        // Integer values: the vector (φ(1)..φ(18)) is the fixed point of
        // v_i = √2·Σ_j h_{2i−j}·v_j, an eigenvector with eigenvalue 1 whose
        // entries sum to 1. Power iteration converges geometrically.
        let dim = D20_SUPPORT - 1;
        let mut v = vec![1.0 / dim as f64; dim];
        for _ in 0..256 {
            let mut next = vec![0.0; dim];
            for i in 1..=dim {
                let mut acc = 0.0;
                for j in 1..=dim {
                    let t = 2 * i as i64 - j as i64;
                    if (0..h.len() as i64).contains(&t) {
                        acc += h[t as usize] * v[j - 1];
                    }
                }
                next[i - 1] = sqrt2 * acc;
            }
            let sum: f64 = next.iter().sum();
            for x in &mut next {
                *x /= sum;
            }
            v = next;
        }

        // Dyadic refinement: φ(x) = √2·Σ_k h_k·φ(2x − k) fills each level's
        // odd midpoints from the previous level.
        let scale = 1usize << depth;
        let mut values = vec![0.0; D20_SUPPORT * scale + 1];
        for (i, &vi) in v.iter().enumerate() {
            values[(i + 1) * scale] = vi;
        }
        for level in 1..=depth {
            let step = 1usize << (depth - level);
            let mut i = step;
            while i < D20_SUPPORT * scale {
                if (i / step) % 2 == 1 {
                    let mut acc = 0.0;
                    for (k, &hk) in h.iter().enumerate() {
                        let j = 2 * i as i64 - (k * scale) as i64;
                        if j > 0 && (j as usize) < D20_SUPPORT * scale {
                            acc += hk * values[j as usize];
                        }
                    }
                    values[i] = sqrt2 * acc;
                }
                i += step;
            }
        }
        CascadeTable { depth, values }
    }

    /// φ(t), linearly interpolated between tabulated dyadic nodes; 0 outside
    /// the open support (0, 19).
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= D20_SUPPORT as f64 {
            return 0.0;
        }
        let u = t * (1u64 << self.depth) as f64;
        let i = u.floor() as usize;
        let frac = u - i as f64;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Writes the table as CSV with columns `node,phi` for inspection.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "node,phi")?;
        let step = 1.0 / (1u64 << self.depth) as f64;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(f, "{},{}", i as f64 * step, v)?;
        }
        Ok(())
    }
}

/// A scaling family ready for evaluation (cascade table built once; grid
/// value tables cached per (level, grid size) behind a shared lock).
#[derive(Debug, Clone)]
pub struct Basis {
    pub family: BasisFamily,
    cascade: Option<Arc<CascadeTable>>,
    grid_cache: Arc<RwLock<HashMap<(u32, usize), Arc<Vec<f64>>>>>,
}

impl Basis {
    pub fn new(family: BasisFamily) -> Basis {
        let cascade = match family.kind {
            BasisKind::Daubechies20_1D => Some(Arc::new(CascadeTable::new(family.cascade_depth))),
            _ => None,
        };
        Basis {
            family,
            cascade,
            grid_cache: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    pub fn cascade_table(&self) -> Option<&CascadeTable> {
        self.cascade.as_deref()
    }

    /// Periodized scaling function φ_{m,k}(x) on [0,1] (1-D families).
    ///
    /// Haar: 2^{m/2} on the cell (k·2⁻ᵐ, (k+1)·2⁻ᵐ] (x = 0 belongs to cell
    /// 0). Daubechies-20: 2^{m/2}·Σ_l φ(2^m(x+l) − k) from the cascade table.
    pub fn scaling_eval(&self, m: u32, k: usize, x: f64) -> Result<f64> {
        let cells = 1usize << (m * self.family.dimension as u32);
        if k >= cells {
            return Err(Error::TranslateOutOfRange {
                m,
                k,
                max: cells - 1,
            });
        }
        match self.family.kind {
            BasisKind::Haar1D => {
                let scale = (1u64 << m) as f64;
                let cell = haar_cell_1d(x, m);
                Ok(if cell == k { scale.sqrt() } else { 0.0 })
            }
            BasisKind::HaarMultiD => {
                if self.family.dimension != 1 {
                    return Err(Error::Config(
                        "scalar scaling_eval on a multi-d family requires dimension 1".into(),
                    ));
                }
                let scale = (1u64 << m) as f64;
                let cell = multid_haar_cell(&[x], m)[0];
                Ok(if cell == k { scale.sqrt() } else { 0.0 })
            }
            BasisKind::Daubechies20_1D => {
                let table = self.cascade.as_ref().expect("cascade built at construction");
                let period = (1u64 << m) as f64;
                let u0 = period * x - k as f64;
                // Sum the wrapped copies whose argument lands in (0, 19).
                let l_lo = ((-u0) / period).floor() as i64 - 1;
                let l_hi = ((D20_SUPPORT as f64 - u0) / period).ceil() as i64 + 1;
                let mut acc = 0.0;
                for l in l_lo..=l_hi {
                    let t = u0 + l as f64 * period;
                    if t > 0.0 && t < D20_SUPPORT as f64 {
                        acc += table.eval(t);
                    }
                }
                Ok(period.sqrt() * acc)
            }
        }
    }

    /// φ_{m,0} sampled on the size-n observation grid: w[j] = φ_{m,0}(j/n).
    /// All translates follow by rotation: φ_{m,k}(i/n) = w[(i − k·n/2^m) mod n].
    pub fn grid_values(&self, m: u32, n: usize) -> Result<Arc<Vec<f64>>> {
        if let Some(v) = self.grid_cache.read().unwrap().get(&(m, n)) {
            return Ok(v.clone());
        }
        let mut w = Vec::with_capacity(n);
        for j in 0..n {
            w.push(self.scaling_eval(m, 0, j as f64 / n as f64)?);
        }
        let arc = Arc::new(w);
        self.grid_cache
            .write()
            .unwrap()
            .insert((m, n), arc.clone());
        Ok(arc)
    }
}

/// Index of the 1-D right-closed Haar cell containing x (x = 0 → cell 0).
pub fn haar_cell_1d(x: f64, m: u32) -> usize {
    let cells = 1usize << m;
    let k = (x * cells as f64).ceil() as i64 - 1;
    k.clamp(0, cells as i64 - 1) as usize
}

/// Index vector of the d-dimensional Haar cell containing x0. Cells are
/// right-closed per coordinate, (k·2^{-m}, (k+1)·2^{-m}], matching
/// [`haar_cell_1d`] and the right-edge observation grid; coordinates at 0
/// are clamped into the first cell.
pub fn multid_haar_cell(x0: &[f64], m: u32) -> Vec<usize> {
    x0.iter().map(|&x| haar_cell_1d(x, m)).collect()
}

/// Exact length of the overlap of two intervals.
pub fn interval_overlap(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    (b1.min(b2) - a1.max(a2)).max(0.0)
}

/// An optional terminal model that is not part of the multiresolution ladder.
#[derive(Debug, Clone, Copy)]
pub enum ExtraModel {
    /// One-dimensional space spanned by the normalized indicator
    /// 1_{(lo, hi]} / √(hi − lo).
    IntervalIndicator { lo: f64, hi: f64 },
}

/// Reference to one model in a chain: a dyadic level or the extra model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelRef {
    Level(u32),
    Extra,
}

/// An ordered finite collection of nested approximation spaces S_m (dyadic
/// levels of one scaling family), optionally followed by one extra model.
#[derive(Debug, Clone)]
pub struct ModelChain {
    pub basis: Basis,
    pub levels: Vec<u32>,
    pub extra: Option<ExtraModel>,
}

impl ModelChain {
    pub fn dyadic(family: BasisFamily, levels: Vec<u32>) -> Result<ModelChain> {
        if levels.is_empty() {
            return Err(Error::EmptyModelList);
        }
        if !levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("levels must be strictly increasing".into()));
        }
        let max = *levels.last().unwrap() as u64 * family.dimension as u64;
        if max > 30 {
            return Err(Error::Config(format!(
                "level {} in dimension {} is too fine to index",
                levels.last().unwrap(),
                family.dimension
            )));
        }
        Ok(ModelChain {
            basis: Basis::new(family),
            levels,
            extra: None,
        })
    }

    /// A chain whose final model is the span of the normalized indicator of
    /// (lo, hi].
    pub fn with_interval_indicator(
        family: BasisFamily,
        levels: Vec<u32>,
        lo: f64,
        hi: f64,
    ) -> Result<ModelChain> {
        if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
            return Err(Error::BadIntervalLength(hi - lo));
        }
        let mut chain = ModelChain::dyadic(family, levels)?;
        chain.extra = Some(ExtraModel::IntervalIndicator { lo, hi });
        Ok(chain)
    }

    pub fn n_models(&self) -> usize {
        self.levels.len() + usize::from(self.extra.is_some())
    }

    pub fn model(&self, pos: usize) -> Result<ModelRef> {
        if pos < self.levels.len() {
            Ok(ModelRef::Level(self.levels[pos]))
        } else if pos == self.levels.len() && self.extra.is_some() {
            Ok(ModelRef::Extra)
        } else {
            Err(Error::LevelNotInChain { m: pos })
        }
    }

    /// Dimension of the model at a chain position (2^{m·d} for levels, 1 for
    /// the indicator model).
    pub fn dim(&self, pos: usize) -> Result<usize> {
        Ok(match self.model(pos)? {
            ModelRef::Level(m) => 1usize << (m * self.basis.family.dimension as u32),
            ModelRef::Extra => 1,
        })
    }

    /// Numeric model index used by weight schedules: the level itself for
    /// dyadic models, max level + 1 for the extra model.
    pub fn numeric_index(&self, pos: usize) -> Result<u32> {
        Ok(match self.model(pos)? {
            ModelRef::Level(m) => m,
            ModelRef::Extra => self.levels.last().unwrap() + 1,
        })
    }

    pub fn position_of_level(&self, m: u32) -> Option<usize> {
        self.levels.iter().position(|&l| l == m)
    }

    /// True when the spans at the two positions are nested (both dyadic
    /// levels of the same multiresolution ladder).
    pub fn is_nested_pair(&self, a: usize, b: usize) -> bool {
        a < self.levels.len() && b < self.levels.len()
    }
}

/// Extracts the empirical coefficients Y(φ_λ), λ ∈ Λ_m, for the model at
/// `pos` in the chain.
///
/// * `FiniteRegression`: Y(φ) = (1/n)Σ φ(i/n)·y_i. Haar: exact block sums.
///   20-tap family: grid inner products with the periodized cascade values.
/// * `WhiteNoise`: derived from the fine-level stream by the exact two-scale
///   filtering relation, preserving the model's covariance structure.
/// * `GaussianSequence`: not defined (the stream's basis is abstract); use
///   `observe_coefficient` directly.
pub fn empirical_coefficients(
    record: &ObservationRecord,
    chain: &ModelChain,
    pos: usize,
) -> Result<Vec<f64>> {
    let model_ref = chain.model(pos)?;
    match record.model.kind {
        ModelKind::FiniteRegression => {
            regression_coefficients(record, chain, model_ref)
        }
        ModelKind::WhiteNoise => white_noise_coefficients(record, chain, model_ref),
        ModelKind::GaussianSequence => Err(Error::Config(
            "coefficient extraction from a raw Gaussian sequence record is not defined; \
             use observe_coefficient with explicit coefficient vectors"
                .into(),
        )),
    }
}

fn regression_coefficients(
    record: &ObservationRecord,
    chain: &ModelChain,
    model_ref: ModelRef,
) -> Result<Vec<f64>> {
    let n = record.model.n;
    let y = &record.data;
    match model_ref {
        ModelRef::Extra => {
            let Some(ExtraModel::IntervalIndicator { lo, hi }) = chain.extra else {
                return Err(Error::Config("chain has no extra model".into()));
            };
            let h = hi - lo;
            let mut acc = 0.0;
            for (idx, yi) in y.iter().enumerate() {
                let x = (idx + 1) as f64 / n as f64;
                if x > lo && x <= hi {
                    acc += yi;
                }
            }
            Ok(vec![acc / (n as f64 * h.sqrt())])
        }
        ModelRef::Level(m) => match chain.basis.family.kind {
            BasisKind::Haar1D => {
                let cells = 1usize << m;
                if n % cells != 0 {
                    return Err(Error::NonDyadicN { n });
                }
                let block = n / cells;
                let scale = (cells as f64).sqrt() / n as f64;
                Ok((0..cells)
                    .map(|k| {
                        let sum: f64 = y[k * block..(k + 1) * block].iter().sum();
                        scale * sum
                    })
                    .collect())
            }
            BasisKind::Daubechies20_1D => {
                let cells = 1usize << m;
                if n % cells != 0 {
                    return Err(Error::NonDyadicN { n });
                }
                if cells > n {
                    return Err(Error::LevelTooFine { n, m });
                }
                let block = n / cells;
                let w = chain.basis.grid_values(m, n)?;
                let mut out = Vec::with_capacity(cells);
                for k in 0..cells {
                    let shift = k * block;
                    let mut acc = 0.0;
                    for (idx, yi) in y.iter().enumerate() {
                        // sample i = idx+1 sits at x = i/n; w index (i − kB) mod n
                        let j = (idx + 1 + n - shift) % n;
                        acc += w[j] * yi;
                    }
                    out.push(acc / n as f64);
                }
                Ok(out)
            }
            BasisKind::HaarMultiD => {
                let d = chain.basis.family.dimension;
                let side = side_length(n, d)?;
                let cells_per_dim = 1usize << m;
                if side % cells_per_dim != 0 {
                    return Err(Error::NonDyadicN { n });
                }
                let total_cells = cells_per_dim.pow(d as u32);
                let scale = (total_cells as f64).sqrt() / n as f64;
                let mut sums = vec![0.0; total_cells];
                let mut coords = vec![1usize; d];
                for yi in y.iter() {
                    // Cell of the sample at (coords_1/side, ..., coords_d/side).
                    // Right-closed cells: coordinate c/side lands in cell
                    // ⌈c·2^m/side⌉ − 1, so each cell receives exactly
                    // (side/2^m)^d samples.
                    let mut flat = 0usize;
                    let per_cell = side / cells_per_dim;
                    for &c in coords.iter() {
                        let k = (c + per_cell - 1) / per_cell - 1;
                        flat = flat * cells_per_dim + k;
                    }
                    sums[flat] += yi;
                    // Advance the odometer (last coordinate fastest).
                    for j in (0..d).rev() {
                        if coords[j] < side {
                            coords[j] += 1;
                            break;
                        }
                        coords[j] = 1;
                    }
                }
                Ok(sums.into_iter().map(|s| scale * s).collect())
            }
        },
    }
}

fn white_noise_coefficients(
    record: &ObservationRecord,
    chain: &ModelChain,
    model_ref: ModelRef,
) -> Result<Vec<f64>> {
    let fine = record.fine_level.ok_or_else(|| {
        Error::Config("white-noise record is missing its fine level".into())
    })?;
    match model_ref {
        ModelRef::Level(m) => {
            if m > fine {
                return Err(Error::LevelTooFine {
                    n: record.data.len(),
                    m,
                });
            }
            let filter: &[f64] = match chain.basis.family.kind {
                BasisKind::Haar1D => &transform::HAAR_FILTER,
                BasisKind::Daubechies20_1D => &D20_FILTER,
                BasisKind::HaarMultiD => {
                    return Err(Error::Config(
                        "white-noise streams are one-dimensional".into(),
                    ))
                }
            };
            let mut c = record.data.clone();
            for _ in 0..(fine - m) {
                let (a, _) = transform::analysis_step(&c, filter);
                c = a;
            }
            Ok(c)
        }
        ModelRef::Extra => {
            let Some(ExtraModel::IntervalIndicator { lo, hi }) = chain.extra else {
                return Err(Error::Config("chain has no extra model".into()));
            };
            if chain.basis.family.kind != BasisKind::Haar1D {
                return Err(Error::Config(
                    "the indicator model needs a piecewise-constant fine stream".into(),
                ));
            }
            let cells = 1usize << fine;
            let lo_idx = lo * cells as f64;
            let hi_idx = hi * cells as f64;
            if (lo_idx - lo_idx.round()).abs() > 1e-9 || (hi_idx - hi_idx.round()).abs() > 1e-9 {
                return Err(Error::Config(
                    "indicator interval must align with the fine dyadic grid of the stream".into(),
                ));
            }
            let (a, b) = (lo_idx.round() as usize, hi_idx.round() as usize);
            let h = hi - lo;
            let inner = 2f64.powf(-(fine as f64) / 2.0) / h.sqrt();
            Ok(vec![inner * record.data[a..b].iter().sum::<f64>()])
        }
    }
}

/// Side length of the d-dimensional sampling grid (n = side^d).
pub fn side_length(n: usize, d: usize) -> Result<usize> {
    let side = (n as f64).powf(1.0 / d as f64).round() as usize;
    if side.pow(d as u32) != n {
        return Err(Error::Config(format!(
            "sample size {n} is not a perfect {d}-th power"
        )));
    }
    Ok(side)
}

/// Reconstructs the model-`pos` projection estimate on the observation grid:
/// ŝ(i/n) = Σ_k c_k·φ_{m,k}(i/n) for i = 1..n.
pub fn reconstruct_on_grid(
    chain: &ModelChain,
    pos: usize,
    coeffs: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    match chain.model(pos)? {
        ModelRef::Extra => {
            let Some(ExtraModel::IntervalIndicator { lo, hi }) = chain.extra else {
                return Err(Error::Config("chain has no extra model".into()));
            };
            let v = coeffs[0] / (hi - lo).sqrt();
            Ok((1..=n)
                .map(|i| {
                    let x = i as f64 / n as f64;
                    if x > lo && x <= hi {
                        v
                    } else {
                        0.0
                    }
                })
                .collect())
        }
        ModelRef::Level(m) => match chain.basis.family.kind {
            BasisKind::Haar1D => {
                let cells = 1usize << m;
                if n % cells != 0 {
                    return Err(Error::NonDyadicN { n });
                }
                let block = n / cells;
                let scale = (cells as f64).sqrt();
                let mut out = Vec::with_capacity(n);
                for k in 0..cells {
                    for _ in 0..block {
                        out.push(scale * coeffs[k]);
                    }
                }
                Ok(out)
            }
            BasisKind::Daubechies20_1D => {
                let cells = 1usize << m;
                if n % cells != 0 {
                    return Err(Error::NonDyadicN { n });
                }
                let block = n / cells;
                let w = chain.basis.grid_values(m, n)?;
                let mut out = vec![0.0; n];
                for (k, &ck) in coeffs.iter().enumerate() {
                    let shift = k * block;
                    for i in 1..=n {
                        let j = (i + n - shift) % n;
                        out[i - 1] += ck * w[j];
                    }
                }
                Ok(out)
            }
            BasisKind::HaarMultiD => Err(Error::Config(
                "grid reconstruction is one-dimensional".into(),
            )),
        },
    }
}

/// Inner products ⟨g, φ_λ⟩ for every λ ∈ Λ_m, with g given by its midpoint
/// samples on the dyadic grid of depth log2(len) and integrals by midpoint
/// quadrature (exact for integrands piecewise constant on the grid cells).
pub fn grid_coefficients(g_grid: &[f64], chain: &ModelChain, pos: usize) -> Result<Vec<f64>> {
    let len = g_grid.len();
    if !len.is_power_of_two() {
        return Err(Error::GridLengthMismatch {
            got: len,
            want: len.next_power_of_two(),
        });
    }
    let depth = len.trailing_zeros();
    match chain.model(pos)? {
        ModelRef::Extra => {
            let Some(ExtraModel::IntervalIndicator { lo, hi }) = chain.extra else {
                return Err(Error::Config("chain has no extra model".into()));
            };
            let step = 1.0 / len as f64;
            let mut acc = 0.0;
            for (i, g) in g_grid.iter().enumerate() {
                let x = (i as f64 + 0.5) * step;
                if x > lo && x <= hi {
                    acc += g * step;
                }
            }
            Ok(vec![acc / (hi - lo).sqrt()])
        }
        ModelRef::Level(m) => match chain.basis.family.kind {
            BasisKind::Haar1D => {
                if m > depth {
                    return Err(Error::LevelTooFine { n: len, m });
                }
                let cells = 1usize << m;
                let scale = (cells as f64).sqrt();
                Ok((0..cells)
                    .map(|k| scale * quadrature::cell_integral(g_grid, m, k, depth))
                    .collect())
            }
            BasisKind::Daubechies20_1D => {
                if m > depth {
                    return Err(Error::LevelTooFine { n: len, m });
                }
                let cells = 1usize << m;
                let step = 1.0 / len as f64;
                // φ_{m,0} at the midpoints; translates are rotations by the
                // cell width in grid units.
                let shift = len >> m;
                let mut w = Vec::with_capacity(len);
                for i in 0..len {
                    w.push(chain.basis.scaling_eval(m, 0, (i as f64 + 0.5) * step)?);
                }
                let mut out = Vec::with_capacity(cells);
                for k in 0..cells {
                    let mut c = 0.0;
                    for (i, g) in g_grid.iter().enumerate() {
                        let j = (i + len - (k * shift) % len) % len;
                        c += g * w[j];
                    }
                    out.push(c * step);
                }
                Ok(out)
            }
            BasisKind::HaarMultiD => Err(Error::Config(
                "grid inner products are computed for one-dimensional grids".into(),
            )),
        },
    }
}

/// ‖π_{S_m}(g)‖² = Σ_{λ∈Λ_m} ⟨g, φ_λ⟩² on the model at `pos`.
pub fn projection_norm_sq(g_grid: &[f64], chain: &ModelChain, pos: usize) -> Result<f64> {
    Ok(grid_coefficients(g_grid, chain, pos)?
        .iter()
        .map(|c| c * c)
        .sum())
}
