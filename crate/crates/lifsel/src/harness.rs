//! Monte Carlo benchmark engine: TOML experiment configs, parallel risk
//! estimation for the four estimation procedures, selected-level histograms,
//! risk-vs-sample-size rate fits, and CSV/markdown reporting.
//!
//! Determinism contract: a config fully determines every output byte.
//! Replicates draw from per-replicate RNG streams, run in parallel, and are
//! reduced sequentially in replicate order, so `report.csv` is byte-identical
//! across thread counts.

use crate::basis::{self, BasisFamily, ModelChain};
use crate::comparators::{apply_on_grid, p2_select_with_coefficients, p3_denoise, p4_empirical};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::functional::{
    build_functional_rep_scaled, estimate_from_coefficients, truth_functional, FunctionalRep,
    FunctionalSpec, GFunction, NamedG, SigmaScale,
};
use crate::observation::{
    simulate_regression, simulate_regression_md, NoiseModel, ObservationRecord,
};
use crate::selector::{select_from_estimates, WeightSchedule};
use crate::signal::{Piece, Signal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// The four estimation procedures the benchmark can run side by side.
///
/// * `P1` — penalized model selection over a chain of wavelet models.
/// * `P2` — unbiased-risk (Cp) model selection, plug-in functional.
/// * `P3` — hard thresholding of the full wavelet transform, plug-in
///   functional.
/// * `P4` — the raw empirical functional of the data (no model).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Procedure {
    P1,
    P2,
    P3,
    P4,
}

impl Procedure {
    pub fn label(self) -> &'static str {
        match self {
            Procedure::P1 => "P1",
            Procedure::P2 => "P2",
            Procedure::P3 => "P3",
            Procedure::P4 => "P4",
        }
    }
}

/// One piece of a piecewise-formula signal: `formula` on `[from, to)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceConfig {
    pub from: f64,
    pub to: f64,
    pub formula: String,
}

/// A user-defined signal assembled from formula pieces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomSignalConfig {
    pub id: String,
    pub pieces: Vec<PieceConfig>,
}

/// Point argument of a point-evaluation functional: a scalar in one
/// dimension, a coordinate vector otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// One functional to estimate, as written in a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FunctionalConfig {
    /// `{ kind = "point", x0 = 0.25 }`
    #[serde(rename = "point")]
    Point { x0: PointValue },
    /// `{ kind = "interval-mean", interval = [0.0, 0.25] }`
    #[serde(rename = "interval-mean")]
    IntervalMean { interval: [f64; 2] },
    /// `{ kind = "integral", g = "g1" }` — `g` is a named kernel or a formula.
    #[serde(rename = "integral")]
    Integral { g: String },
}

fn default_p() -> f64 {
    1.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A complete benchmark description, deserialized from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Signal ids: the built-ins `s1`, `s2`, `s3` or ids from
    /// `custom_signals`.
    pub signals: Vec<String>,
    /// Extra piecewise-formula signals referenced by `signals`.
    #[serde(default)]
    pub custom_signals: Vec<CustomSignalConfig>,
    pub functionals: Vec<FunctionalConfig>,
    /// Scaling families: `"haar"` and/or `"d20"`. May be empty when only
    /// `P4` runs.
    #[serde(default)]
    pub bases: Vec<String>,
    pub procedures: Vec<Procedure>,
    /// Sample size of the regression grid.
    pub n: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Monte Carlo replicates per cell.
    pub replicates: u64,
    /// Risk exponent: reported risk is E|T̂ − T(s)|^p. Also feeds the weight
    /// schedule.
    #[serde(default = "default_p")]
    pub p: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub sigma_scale: SigmaScale,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Dyadic levels of the model chain; defaults to `1..=log2(n)`.
    #[serde(default)]
    pub levels: Option<Vec<u32>>,
    /// Coarse levels exempt from thresholding in `P3`.
    #[serde(default)]
    pub keep_coarse_level: u32,
    /// Refinement depth for the 20-tap scaling function tables.
    #[serde(default)]
    pub cascade_depth: Option<u32>,
    /// Sample sizes for the `rates` command (at least three).
    #[serde(default)]
    pub rate_sizes: Vec<usize>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n: must be at least 1".into()));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::Config(
                "sigma: must be a finite number >= 0".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates: must be at least 1".into()));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::Config("p: risk exponent must be >= 1".into()));
        }
        if self.signals.is_empty() {
            return Err(Error::Config("signals: list is empty".into()));
        }
        if self.functionals.is_empty() {
            return Err(Error::Config("functionals: list is empty".into()));
        }
        if self.procedures.is_empty() {
            return Err(Error::Config("procedures: list is empty".into()));
        }
        let needs_basis = self
            .procedures
            .iter()
            .any(|p| *p != Procedure::P4);
        if needs_basis {
            if self.bases.is_empty() {
                return Err(Error::Config(
                    "bases: list is empty but P1/P2/P3 need a scaling family".into(),
                ));
            }
            if !self.n.is_power_of_two() {
                return Err(Error::Config(format!(
                    "n: {} is not a power of two (required by P1/P2/P3)",
                    self.n
                )));
            }
            self.chain_levels()?;
        }
        for label in &self.bases {
            self.resolve_basis(label)?;
        }
        for fc in &self.functionals {
            self.resolve_functional(fc)?;
        }
        self.resolve_signals()?;
        Ok(())
    }

    /// Finest level the grid can resolve: log2(n).
    pub fn max_level(&self) -> u32 {
        self.n.trailing_zeros()
    }

    /// The dyadic levels of the model chain used by P1/P2.
    pub fn chain_levels(&self) -> Result<Vec<u32>> {
        match &self.levels {
            None => Ok((1..=self.max_level()).collect()),
            Some(levels) => {
                if levels.is_empty() {
                    return Err(Error::Config("levels: list is empty".into()));
                }
                if !levels.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Config(
                        "levels: must be strictly increasing".into(),
                    ));
                }
                if *levels.last().unwrap() > self.max_level() {
                    return Err(Error::Config(format!(
                        "levels: finest level {} exceeds log2(n) = {}",
                        levels.last().unwrap(),
                        self.max_level()
                    )));
                }
                Ok(levels.clone())
            }
        }
    }

    pub fn resolve_signals(&self) -> Result<Vec<Signal>> {
        self.signals
            .iter()
            .map(|id| match id.as_str() {
                "s1" | "s2" | "s3" => Signal::from_name(id),
                _ => {
                    let custom = self
                        .custom_signals
                        .iter()
                        .find(|c| &c.id == id)
                        .ok_or_else(|| {
                            Error::Config(format!("signals: unknown signal id '{id}'"))
                        })?;
                    let pieces = custom
                        .pieces
                        .iter()
                        .map(|p| {
                            Ok(Piece {
                                lo: p.from,
                                hi: p.to,
                                expr: Expr::parse(&p.formula).map_err(|e| {
                                    Error::Config(format!(
                                        "custom_signals: signal '{id}': {e}"
                                    ))
                                })?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Signal::piecewise(id, pieces))
                }
            })
            .collect()
    }

    pub fn resolve_basis(&self, label: &str) -> Result<BasisFamily> {
        match label {
            "haar" => Ok(BasisFamily::haar()),
            "d20" => match self.cascade_depth {
                None => Ok(BasisFamily::daubechies20()),
                Some(depth) => BasisFamily::daubechies20_with_depth(depth),
            },
            other => Err(Error::Config(format!(
                "bases: unknown basis '{other}' (expected \"haar\" or \"d20\")"
            ))),
        }
    }

    pub fn resolve_functional(&self, fc: &FunctionalConfig) -> Result<FunctionalSpec> {
        match fc {
            FunctionalConfig::Point { x0 } => match x0 {
                PointValue::Scalar(x) => Ok(FunctionalSpec::point(*x)),
                PointValue::Vector(xs) => {
                    if xs.is_empty() {
                        return Err(Error::Config(
                            "functionals: point x0 vector is empty".into(),
                        ));
                    }
                    Ok(FunctionalSpec::point_md(xs.clone()))
                }
            },
            FunctionalConfig::IntervalMean { interval } => {
                FunctionalSpec::interval_mean(interval[0], interval[1]).map_err(|e| {
                    Error::Config(format!("functionals: interval-mean: {e}"))
                })
            }
            FunctionalConfig::Integral { g } => {
                let g = match g.as_str() {
                    "g1" => GFunction::Named(NamedG::G1),
                    "g2" => GFunction::Named(NamedG::G2),
                    formula => GFunction::Formula(Expr::parse(formula).map_err(|e| {
                        Error::Config(format!("functionals: integral g: {e}"))
                    })?),
                };
                Ok(FunctionalSpec::integral(g))
            }
        }
    }
}

/// One row of the risk report: a (procedure, signal, functional, basis) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub procedure: String,
    pub signal: String,
    /// Functional kind: `point`, `interval-mean`, or `integral`.
    pub functional: String,
    /// `haar`, `d20`, or `none` (P4 uses no basis).
    pub basis: String,
    /// Which functional of its kind: the point, the interval length, or the
    /// kernel name.
    pub point: String,
    /// Monte Carlo estimate of E|T̂ − T(s)|^p.
    pub r_hat: f64,
    /// Standard error of `r_hat`.
    pub se: f64,
    /// Number of replicates behind the row.
    #[serde(rename = "N")]
    pub n_replicates: u64,
    /// Master seed the replicate streams derive from.
    pub seed: u64,
}

/// The full benchmark report: one row per cell in deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub rows: Vec<ReportRow>,
}

/// One histogram bar: how often a selection procedure picked `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub signal: String,
    /// Point label of the functional for the penalized selector; `global`
    /// for the unbiased-risk selector, which picks one model per data set.
    pub point: String,
    pub level: u32,
    pub count: u64,
}

/// Selected-model histograms for all (signal, functional) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCounts {
    pub rows: Vec<LevelRow>,
}

/// Output of a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub report: RiskReport,
    pub levels: LevelCounts,
}

/// Risk at one sample size, for the rate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub r_hat: f64,
    pub se: f64,
}

/// Least-squares fit of ln r̂ against ln(ln n / n).
#[derive(Debug, Clone)]
pub struct RateFit {
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// Worker thread count: an explicit request wins, then the `LIFSEL_THREADS`
/// environment variable; 0 means "one worker per core".
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    if let Some(t) = explicit {
        return t;
    }
    std::env::var("LIFSEL_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn run_pool<T: Send>(threads: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(op))
}

struct PreparedBasis {
    label: String,
    chain: ModelChain,
    weights: WeightSchedule,
}

struct PreparedFunctional {
    spec: FunctionalSpec,
    /// Truth value per signal.
    truths: Vec<f64>,
    /// Compiled representation per basis.
    reps: Vec<FunctionalRep>,
}

#[derive(Debug, Clone, Copy)]
struct RowKey {
    procedure: Procedure,
    signal: usize,
    functional: usize,
    /// `None` for P4 (no basis).
    basis: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
enum LevelKey {
    /// Penalized selector: one histogram per (signal, functional, basis).
    PerFunctional {
        signal: usize,
        functional: usize,
        basis: usize,
    },
    /// Unbiased-risk selector: one histogram per (signal, basis).
    Global { signal: usize, basis: usize },
}

struct Prepared {
    model: NoiseModel,
    signals: Vec<Signal>,
    signal_ids: Vec<String>,
    bases: Vec<PreparedBasis>,
    functionals: Vec<PreparedFunctional>,
    procedures: Vec<Procedure>,
    rows: Vec<RowKey>,
    level_keys: Vec<LevelKey>,
    p: f64,
    keep_coarse_level: u32,
    master_seed: u64,
}

struct ReplicateOutcome {
    /// |T̂ − T(s)|^p per row, aligned with `Prepared::rows`.
    losses: Vec<f64>,
    /// Selected numeric level per histogram cell, aligned with
    /// `Prepared::level_keys`.
    levels: Vec<u32>,
}

impl Prepared {
    fn build(config: &ExperimentConfig) -> Result<Prepared> {
        config.validate()?;
        let model = NoiseModel::regression(config.n, config.sigma)?;
        let signals = config.resolve_signals()?;
        let signal_ids = config.signals.clone();

        let needs_basis = config.procedures.iter().any(|p| *p != Procedure::P4);
        let mut bases = Vec::new();
        if needs_basis {
            let levels = config.chain_levels()?;
            for label in &config.bases {
                let family = config.resolve_basis(label)?;
                let chain = ModelChain::dyadic(family, levels.clone())?;
                let weights = WeightSchedule::log_dim_difference(&chain, config.p, 0.0)?;
                bases.push(PreparedBasis {
                    label: label.clone(),
                    chain,
                    weights,
                });
            }
        }

        let mut functionals = Vec::new();
        for fc in &config.functionals {
            let spec = config.resolve_functional(fc)?;
            let truths = signals
                .iter()
                .map(|s| truth_functional(s, &spec))
                .collect::<Result<Vec<_>>>()?;
            let reps = bases
                .iter()
                .map(|b| {
                    build_functional_rep_scaled(&spec, &b.chain, &model, config.sigma_scale)
                })
                .collect::<Result<Vec<_>>>()?;
            functionals.push(PreparedFunctional { spec, truths, reps });
        }

        let mut rows = Vec::new();
        for &procedure in &config.procedures {
            for signal in 0..signals.len() {
                for functional in 0..functionals.len() {
                    if procedure == Procedure::P4 {
                        rows.push(RowKey {
                            procedure,
                            signal,
                            functional,
                            basis: None,
                        });
                    } else {
                        for basis in 0..bases.len() {
                            rows.push(RowKey {
                                procedure,
                                signal,
                                functional,
                                basis: Some(basis),
                            });
                        }
                    }
                }
            }
        }

        let mut level_keys = Vec::new();
        if config.procedures.contains(&Procedure::P1) {
            for signal in 0..signals.len() {
                for functional in 0..functionals.len() {
                    for basis in 0..bases.len() {
                        level_keys.push(LevelKey::PerFunctional {
                            signal,
                            functional,
                            basis,
                        });
                    }
                }
            }
        }
        if config.procedures.contains(&Procedure::P2) {
            for signal in 0..signals.len() {
                for basis in 0..bases.len() {
                    level_keys.push(LevelKey::Global { signal, basis });
                }
            }
        }

        Ok(Prepared {
            model,
            signals,
            signal_ids,
            bases,
            functionals,
            procedures: config.procedures.clone(),
            rows,
            level_keys,
            p: config.p,
            keep_coarse_level: config.keep_coarse_level,
            master_seed: config.master_seed,
        })
    }

    fn loss(&self, err: f64) -> f64 {
        if self.p == 1.0 {
            err.abs()
        } else {
            err.abs().powf(self.p)
        }
    }

    fn has(&self, p: Procedure) -> bool {
        self.procedures.contains(&p)
    }

    fn run_replicate(&self, replicate: u64) -> Result<ReplicateOutcome> {
        let ns = self.signals.len();
        let nf = self.functionals.len();
        let nb = self.bases.len();
        let n = self.model.n;

        // Per-procedure loss/level scratch, indexed [signal][functional][basis]
        // flattened.
        let mut p1_loss = vec![0.0; ns * nf * nb];
        let mut p1_level = vec![0u32; ns * nf * nb];
        let mut p2_loss = vec![0.0; ns * nf * nb];
        let mut p2_level = vec![0u32; ns * nb];
        let mut p3_loss = vec![0.0; ns * nf * nb];
        let mut p4_loss = vec![0.0; ns * nf];

        for s in 0..ns {
            // One observation record per signal, shared by every procedure,
            // functional, and basis; each (signal, replicate) pair gets its
            // own RNG stream.
            let stream = replicate * ns as u64 + s as u64;
            let record =
                simulate_regression(&self.signals[s], self.model, self.master_seed, stream)?;

            for b in 0..nb {
                let pb = &self.bases[b];
                let coeffs: Option<Vec<Vec<f64>>> =
                    if self.has(Procedure::P1) || self.has(Procedure::P2) {
                        Some(
                            (0..pb.chain.n_models())
                                .map(|pos| basis::empirical_coefficients(&record, &pb.chain, pos))
                                .collect::<Result<_>>()?,
                        )
                    } else {
                        None
                    };

                if self.has(Procedure::P1) {
                    let cs = coeffs.as_ref().unwrap();
                    for f in 0..nf {
                        let rep = &self.functionals[f].reps[b];
                        let estimates = cs
                            .iter()
                            .enumerate()
                            .map(|(pos, c)| estimate_from_coefficients(rep, pos, c))
                            .collect::<Result<Vec<_>>>()?;
                        let sel = select_from_estimates(
                            &estimates,
                            n,
                            &pb.chain,
                            rep,
                            &pb.weights,
                        )?;
                        let idx = (s * nf + f) * nb + b;
                        p1_loss[idx] = self.loss(sel.estimate - self.functionals[f].truths[s]);
                        p1_level[idx] = sel.numeric_index;
                    }
                }

                if self.has(Procedure::P2) {
                    let sel = p2_select_with_coefficients(
                        &record,
                        &pb.chain,
                        coeffs.as_ref().unwrap(),
                    )?;
                    p2_level[s * nb + b] = pb.chain.numeric_index(sel.position)?;
                    for f in 0..nf {
                        let est = apply_on_grid(&sel.grid, &self.functionals[f].spec)?;
                        p2_loss[(s * nf + f) * nb + b] =
                            self.loss(est - self.functionals[f].truths[s]);
                    }
                }

                if self.has(Procedure::P3) {
                    let denoised =
                        p3_denoise(&record, &pb.chain.basis.family, self.keep_coarse_level)?;
                    for f in 0..nf {
                        let est = apply_on_grid(&denoised, &self.functionals[f].spec)?;
                        p3_loss[(s * nf + f) * nb + b] =
                            self.loss(est - self.functionals[f].truths[s]);
                    }
                }
            }

            if self.has(Procedure::P4) {
                for f in 0..nf {
                    let est = p4_empirical(&record, &self.functionals[f].spec)?;
                    p4_loss[s * nf + f] = self.loss(est - self.functionals[f].truths[s]);
                }
            }
        }

        let losses = self
            .rows
            .iter()
            .map(|row| match (row.procedure, row.basis) {
                (Procedure::P1, Some(b)) => p1_loss[(row.signal * nf + row.functional) * nb + b],
                (Procedure::P2, Some(b)) => p2_loss[(row.signal * nf + row.functional) * nb + b],
                (Procedure::P3, Some(b)) => p3_loss[(row.signal * nf + row.functional) * nb + b],
                (Procedure::P4, None) => p4_loss[row.signal * nf + row.functional],
                _ => unreachable!("row key shape fixed at build time"),
            })
            .collect();

        let levels = self
            .level_keys
            .iter()
            .map(|key| match *key {
                LevelKey::PerFunctional {
                    signal,
                    functional,
                    basis,
                } => p1_level[(signal * nf + functional) * nb + basis],
                LevelKey::Global { signal, basis } => p2_level[signal * nb + basis],
            })
            .collect();

        Ok(ReplicateOutcome { losses, levels })
    }
}

/// Runs the full benchmark with the default thread count.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<BenchmarkOutput> {
    run_benchmark_with_threads(config, resolve_threads(None))
}

/// Runs the full benchmark on a dedicated pool of `threads` workers
/// (0 = one per core). The output is independent of `threads`.
pub fn run_benchmark_with_threads(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<BenchmarkOutput> {
    let prepared = Prepared::build(config)?;
    let outcomes: Vec<ReplicateOutcome> = run_pool(threads, || {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| prepared.run_replicate(r))
            .collect::<Result<Vec<_>>>()
    })??;

    // Sequential reduction in replicate order keeps float sums, and hence
    // the emitted bytes, independent of the thread count.
    let n_rows = prepared.rows.len();
    let mut sum = vec![0.0f64; n_rows];
    let mut sum_sq = vec![0.0f64; n_rows];
    let mut counts: Vec<BTreeMap<u32, u64>> = vec![BTreeMap::new(); prepared.level_keys.len()];
    for outcome in &outcomes {
        for (i, l) in outcome.losses.iter().enumerate() {
            sum[i] += l;
            sum_sq[i] += l * l;
        }
        for (i, level) in outcome.levels.iter().enumerate() {
            *counts[i].entry(*level).or_insert(0) += 1;
        }
    }

    let n_rep = config.replicates as f64;
    let rows = prepared
        .rows
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let mean = sum[i] / n_rep;
            let se = if config.replicates > 1 {
                let var = ((sum_sq[i] - n_rep * mean * mean) / (n_rep - 1.0)).max(0.0);
                (var / n_rep).sqrt()
            } else {
                0.0
            };
            let functional = &prepared.functionals[key.functional];
            ReportRow {
                procedure: key.procedure.label().to_string(),
                signal: prepared.signal_ids[key.signal].clone(),
                functional: functional.spec.kind_label().to_string(),
                basis: match key.basis {
                    Some(b) => prepared.bases[b].label.clone(),
                    None => "none".to_string(),
                },
                point: functional.spec.point_label(),
                r_hat: mean,
                se,
                n_replicates: config.replicates,
                seed: config.master_seed,
            }
        })
        .collect();

    let multi_basis = prepared.bases.len() > 1;
    let mut level_rows = Vec::new();
    for (i, key) in prepared.level_keys.iter().enumerate() {
        let (signal, point, basis) = match *key {
            LevelKey::PerFunctional {
                signal,
                functional,
                basis,
            } => (
                signal,
                prepared.functionals[functional].spec.point_label(),
                basis,
            ),
            LevelKey::Global { signal, basis } => (signal, "global".to_string(), basis),
        };
        let point = if multi_basis {
            format!("{point}@{}", prepared.bases[basis].label)
        } else {
            point
        };
        for (&level, &count) in &counts[i] {
            level_rows.push(LevelRow {
                signal: prepared.signal_ids[signal].clone(),
                point: point.clone(),
                level,
                count,
            });
        }
    }

    Ok(BenchmarkOutput {
        report: RiskReport { rows },
        levels: LevelCounts { rows: level_rows },
    })
}

/// Risk of the penalized selector across `rate_sizes`, and the least-squares
/// slope of ln r̂ against ln(ln n / n).
///
/// Uses the first signal and first functional of the config. Multivariate
/// point functionals switch the study to the d-dimensional constant-box
/// family (sample sizes must then be d-th powers of dyadic side lengths).
pub fn run_rates(config: &ExperimentConfig, threads: usize) -> Result<RateFit> {
    if config.rate_sizes.len() < 3 {
        return Err(Error::Config(
            "rate_sizes: need at least three sample sizes for a rate fit".into(),
        ));
    }
    let signal = config
        .resolve_signals()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("signals: list is empty".into()))?;
    let fc = config
        .functionals
        .first()
        .ok_or_else(|| Error::Config("functionals: list is empty".into()))?;
    let spec = config.resolve_functional(fc)?;
    let dimension = spec.dimension();

    let mut points = Vec::new();
    for &n in &config.rate_sizes {
        let model = NoiseModel::regression(n, config.sigma)?;
        let side = basis::side_length(n, dimension)?;
        if !side.is_power_of_two() {
            return Err(Error::Config(format!(
                "rate_sizes: side length {side} of n = {n} is not a power of two"
            )));
        }
        let max_level = side.trailing_zeros();
        let levels: Vec<u32> = (1..=max_level).collect();
        let (chain, weights) = if dimension == 1 {
            let chain = ModelChain::dyadic(BasisFamily::haar(), levels)?;
            let weights = WeightSchedule::log_dim_difference(&chain, config.p, 0.0)?;
            (chain, weights)
        } else {
            let chain = ModelChain::dyadic(BasisFamily::haar_multid(dimension)?, levels)?;
            let weights = WeightSchedule::larger_log_dim(&chain, config.p)?;
            (chain, weights)
        };
        let rep = build_functional_rep_scaled(&spec, &chain, &model, config.sigma_scale)?;
        let truth = truth_functional(&signal, &spec)?;

        let losses: Vec<f64> = run_pool(threads, || {
            (0..config.replicates)
                .into_par_iter()
                .map(|r| -> Result<f64> {
                    let record = if dimension == 1 {
                        simulate_regression(&signal, model, config.master_seed, r)?
                    } else {
                        simulate_regression_md(
                            &signal,
                            model,
                            dimension,
                            config.master_seed,
                            r,
                        )?
                    };
                    let sel = select_with_record(&record, &chain, &rep, &weights)?;
                    Ok((sel - truth).abs())
                })
                .collect::<Result<Vec<_>>>()
        })??;

        let n_rep = losses.len() as f64;
        let mean = losses.iter().sum::<f64>() / n_rep;
        let se = if losses.len() > 1 {
            let var = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>()
                / (n_rep - 1.0);
            (var / n_rep).sqrt()
        } else {
            0.0
        };
        points.push(RatePoint { n, r_hat: mean, se });
    }

    fit_rate(points)
}

/// Penalized-selector estimate for one record (helper shared by the rate and
/// indicator studies).
fn select_with_record(
    record: &ObservationRecord,
    chain: &ModelChain,
    rep: &FunctionalRep,
    weights: &WeightSchedule,
) -> Result<f64> {
    let estimates = (0..chain.n_models())
        .map(|pos| {
            let coeffs = basis::empirical_coefficients(record, chain, pos)?;
            estimate_from_coefficients(rep, pos, &coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    let sel = select_from_estimates(&estimates, record.model.n, chain, rep, weights)?;
    Ok(sel.estimate)
}

fn fit_rate(points: Vec<RatePoint>) -> Result<RateFit> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for p in &points {
        if !(p.r_hat > 0.0) {
            return Err(Error::Config(format!(
                "rate fit needs positive risks, got r_hat = {} at n = {}",
                p.r_hat, p.n
            )));
        }
        let n = p.n as f64;
        xs.push((n.ln() / n).ln());
        ys.push(p.r_hat.ln());
    }
    let k = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / k;
    let y_bar = ys.iter().sum::<f64>() / k;
    let s_xx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let s_xy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    if s_xx <= 0.0 {
        return Err(Error::Config(
            "rate_sizes: sample sizes must not be all equal".into(),
        ));
    }
    let slope = s_xy / s_xx;
    let intercept = y_bar - slope * x_bar;
    let dof = xs.len().saturating_sub(2);
    let slope_se = if dof > 0 {
        let rss: f64 = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| {
                let fitted = intercept + slope * x;
                (y - fitted) * (y - fitted)
            })
            .sum();
        (rss / dof as f64 / s_xx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        points,
        slope,
        slope_se,
        intercept,
    })
}

/// Parameters of an indicator-model selection study: estimate the mean of
/// the signal over (0, h] with a chain of dyadic levels 0..=m_n (where
/// 2^{m_n} ≤ 1/h) plus the normalized-indicator model, under half-index
/// weights, and report how often the indicator model is selected.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorStudy {
    pub n: usize,
    pub sigma: f64,
    /// Interval length h ∈ (0, 1].
    pub h: f64,
    /// Weight scale.
    pub p: f64,
    pub replicates: u64,
    pub master_seed: u64,
}

/// Fraction of replicates in which the penalized selector picks the
/// indicator model rather than a dyadic level.
pub fn indicator_selection_frequency(
    signal: &Signal,
    study: &IndicatorStudy,
    threads: usize,
) -> Result<f64> {
    if !(study.h > 0.0 && study.h <= 1.0) {
        return Err(Error::BadIntervalLength(study.h));
    }
    if !study.n.is_power_of_two() {
        return Err(Error::NonDyadicN { n: study.n });
    }
    let max_level = study.n.trailing_zeros();
    let mut m_n = 0u32;
    while m_n < max_level && ((1u64 << (m_n + 1)) as f64) <= 1.0 / study.h {
        m_n += 1;
    }
    let chain = ModelChain::with_interval_indicator(
        BasisFamily::haar(),
        (0..=m_n).collect(),
        0.0,
        study.h,
    )?;
    let weights = WeightSchedule::half_index_indicator(&chain, study.p)?;
    let model = NoiseModel::regression(study.n, study.sigma)?;
    let spec = FunctionalSpec::interval_mean(0.0, study.h)?;
    let rep = build_functional_rep_scaled(&spec, &chain, &model, SigmaScale::NoiseScaled)?;
    let extra_position = chain.levels.len();

    let hits: u64 = run_pool(threads, || {
        (0..study.replicates)
            .into_par_iter()
            .map(|r| -> Result<u64> {
                let record = simulate_regression(signal, model, study.master_seed, r)?;
                let estimates = (0..chain.n_models())
                    .map(|pos| {
                        let coeffs = basis::empirical_coefficients(&record, &chain, pos)?;
                        estimate_from_coefficients(&rep, pos, &coeffs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sel =
                    select_from_estimates(&estimates, study.n, &chain, &rep, &weights)?;
                Ok(u64::from(sel.position == extra_position))
            })
            .sum::<Result<u64>>()
    })??;
    Ok(hits as f64 / study.replicates as f64)
}

/// Rendering style for [`emit_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    /// Markdown tables of 100·r̂ to one decimal place (`table.md`).
    X100,
    /// Full-precision CSV (`report.csv`).
    RawCsv,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn write_report_csv(report: &RiskReport, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in &report.rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_report_csv(path: &Path) -> Result<RiskReport> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()
        .map_err(csv_err)?;
    Ok(RiskReport { rows })
}

pub fn write_levels_csv(levels: &LevelCounts, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in &levels.rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_rates_csv(fit: &RateFit, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for point in &fit.points {
        writer.serialize(point).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

/// 100·r̂ to one decimal place; tiny values fall back to scientific notation
/// so they do not round to a bare 0.0.
fn format_x100(r_hat: f64) -> String {
    let v = 100.0 * r_hat;
    if v == 0.0 || v.abs() >= 0.05 {
        format!("{v:.1}")
    } else {
        format!("{v:.2e}")
    }
}

/// Renders the report as markdown: one table per (signal, functional kind),
/// rows = basis, columns = (point, procedure). Cells show 100·r̂.
pub fn render_table_markdown(report: &RiskReport) -> String {
    let mut out = String::from("# Monte Carlo risk, 100 × E|T̂ − T(s)|^p\n");

    // Preserve first-appearance order everywhere.
    let mut sections: Vec<(String, String)> = Vec::new();
    for row in &report.rows {
        let key = (row.signal.clone(), row.functional.clone());
        if !sections.contains(&key) {
            sections.push(key);
        }
    }

    for (signal, kind) in &sections {
        let rows: Vec<&ReportRow> = report
            .rows
            .iter()
            .filter(|r| &r.signal == signal && &r.functional == kind)
            .collect();
        let mut points: Vec<String> = Vec::new();
        let mut procedures: Vec<String> = Vec::new();
        let mut bases: Vec<String> = Vec::new();
        for r in &rows {
            if !points.contains(&r.point) {
                points.push(r.point.clone());
            }
            if !procedures.contains(&r.procedure) {
                procedures.push(r.procedure.clone());
            }
            if !bases.contains(&r.basis) {
                bases.push(r.basis.clone());
            }
        }
        // The basis-free empirical functional goes last.
        bases.sort_by_key(|b| b == "none");

        let _ = write!(out, "\n## {signal} — {kind}\n\n| basis |");
        for point in &points {
            for procedure in &procedures {
                let _ = write!(out, " {point} {procedure} |");
            }
        }
        let _ = write!(out, "\n|---|");
        for _ in 0..points.len() * procedures.len() {
            let _ = write!(out, "---|");
        }
        out.push('\n');
        for basis in &bases {
            let label = if basis == "none" { "data" } else { basis };
            let _ = write!(out, "| {label} |");
            for point in &points {
                for procedure in &procedures {
                    let cell = rows
                        .iter()
                        .find(|r| {
                            &r.basis == basis && &r.point == point && &r.procedure == procedure
                        })
                        .map(|r| format_x100(r.r_hat))
                        .unwrap_or_default();
                    let _ = write!(out, " {cell} |");
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Writes the report in the requested style into `out_dir` and returns the
/// path of the file written (`table.md` or `report.csv`).
pub fn emit_table(report: &RiskReport, style: TableStyle, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    match style {
        TableStyle::X100 => {
            let path = out_dir.join("table.md");
            fs::write(&path, render_table_markdown(report))?;
            Ok(path)
        }
        TableStyle::RawCsv => {
            let path = out_dir.join("report.csv");
            write_report_csv(report, &path)?;
            Ok(path)
        }
    }
}
