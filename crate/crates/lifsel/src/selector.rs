//! The penalized model-selection rule.
//!
//! Given per-model estimates T(ŝ_m) of a linear functional over an ordered
//! chain of models, each model gets
//!
//! ```text
//! crit(m) = max_{j ≥ m} [ |T(ŝ_m) − T(ŝ_j)| − √(2·x_{j,m})·σ_{j,m} ] + √(2·x_m)·σ_m
//! ```
//!
//! where the max runs over the models at or after m in the chain and always
//! includes the vacuous j = m term (zero), so crit(m) ≥ pen(m). The selected
//! model is the smallest index whose criterion is within 1/n of the minimum,
//! and the final estimate is that model's T(ŝ_m).

use crate::basis::ModelChain;
use crate::error::{Error, Result};
use crate::functional::{self, FunctionalRep};
use crate::observation::ObservationRecord;

use std::f64::consts::LN_2;

/// How a weight schedule was derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightProvenance {
    /// x_m ∝ m, pair weights from the log of the dimension difference.
    LogDimDifference { p: f64, r: f64 },
    /// x_m = p·m/2 on a contiguous ladder plus an interval-indicator model;
    /// pair weights use the larger numeric index.
    HalfIndexWithIndicator { p: f64 },
    /// Both per-model and pair weights proportional to the log-dimension of
    /// the larger model (any ambient dimension).
    LargerLogDim { p: f64 },
    UserSupplied,
}

/// Per-model weights x_m and pairwise weights x_{j,m} for a chain.
#[derive(Debug, Clone)]
pub struct WeightSchedule {
    pub provenance: WeightProvenance,
    x_model: Vec<f64>,
    /// Flattened symmetric matrix, zero diagonal.
    x_pair: Vec<f64>,
}

fn check_weight(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::NegativeWeight(x));
    }
    Ok(x)
}

fn check_scale(p: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::Config(format!(
            "weight scale parameter must be a positive number, got {p}"
        )));
    }
    Ok(p)
}

impl WeightSchedule {
    pub fn n_models(&self) -> usize {
        self.x_model.len()
    }

    /// x_m for the model at chain position `pos`.
    pub fn x_model(&self, pos: usize) -> f64 {
        self.x_model[pos]
    }

    /// x_{j,m} for the (order-insensitive) pair of chain positions.
    pub fn x_pair(&self, a: usize, b: usize) -> f64 {
        self.x_pair[a * self.n_models() + b]
    }

    /// The default schedule: log-dimension-difference weights with p = 1,
    /// r = 0, i.e. x_m = ½·ln(2^m) and x_{j,m} = ½·ln(2^j − 2^m).
    pub fn default_for(chain: &ModelChain) -> Result<WeightSchedule> {
        WeightSchedule::log_dim_difference(chain, 1.0, 0.0)
    }

    /// x_m = (p/2)·m(1+2r)·ln2 and x_{j,m} = (p/2)·ln(2^{j(1+2r)} − 2^{m(1+2r)})
    /// on a pure dyadic one-dimensional chain. `r ≥ 0` sharpens the pair
    /// weights for smoother targets; `p` is the overall scale.
    pub fn log_dim_difference(chain: &ModelChain, p: f64, r: f64) -> Result<WeightSchedule> {
        check_scale(p)?;
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Config(format!(
                "smoothness parameter must be a non-negative number, got {r}"
            )));
        }
        if chain.extra.is_some() {
            return Err(Error::Config(
                "log-dim-difference weights need a pure multiresolution chain".into(),
            ));
        }
        if chain.basis.family.dimension != 1 {
            return Err(Error::Config(
                "log-dim-difference weights are one-dimensional; use the \
                 larger-log-dim schedule in higher dimension"
                    .into(),
            ));
        }
        let q = 1.0 + 2.0 * r;
        let n = chain.n_models();
        let mut x_model = Vec::with_capacity(n);
        for pos in 0..n {
            let m = chain.numeric_index(pos)? as f64;
            x_model.push(check_weight(0.5 * p * m * q * LN_2)?);
        }
        let mut x_pair = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let ma = chain.numeric_index(a)? as f64;
                let mb = chain.numeric_index(b)? as f64;
                // ln(2^{mb·q} − 2^{ma·q}) computed stably.
                let ln_diff = mb * q * LN_2 + (-(-(mb - ma) * q * LN_2).exp()).ln_1p();
                let x = check_weight(0.5 * p * ln_diff)?;
                x_pair[a * n + b] = x;
                x_pair[b * n + a] = x;
            }
        }
        Ok(WeightSchedule {
            provenance: WeightProvenance::LogDimDifference { p, r },
            x_model,
            x_pair,
        })
    }

    /// For a contiguous ladder of levels 0..=L plus an interval-indicator
    /// model (numeric index L+1): x_m = p·m/2 on the ladder,
    /// x_extra = (p/2)·ln(1/h) with h the indicator interval length, and
    /// x_{j,m} = p·max(j,m)/2 for every pair.
    pub fn half_index_indicator(chain: &ModelChain, p: f64) -> Result<WeightSchedule> {
        check_scale(p)?;
        let Some(crate::basis::ExtraModel::IntervalIndicator { lo, hi }) = chain.extra else {
            return Err(Error::Config(
                "half-index weights need a chain with an interval-indicator model".into(),
            ));
        };
        for (i, &m) in chain.levels.iter().enumerate() {
            if m as usize != i {
                return Err(Error::Config(
                    "half-index weights need contiguous levels starting at 0".into(),
                ));
            }
        }
        let n = chain.n_models();
        let extra_pos = n - 1;
        let mut x_model = Vec::with_capacity(n);
        for pos in 0..n {
            if pos == extra_pos {
                x_model.push(check_weight(0.5 * p * (1.0 / (hi - lo)).ln())?);
            } else {
                x_model.push(check_weight(0.5 * p * chain.numeric_index(pos)? as f64)?);
            }
        }
        let mut x_pair = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let ia = chain.numeric_index(a)? as f64;
                let ib = chain.numeric_index(b)? as f64;
                let x = check_weight(0.5 * p * ia.max(ib))?;
                x_pair[a * n + b] = x;
                x_pair[b * n + a] = x;
            }
        }
        Ok(WeightSchedule {
            provenance: WeightProvenance::HalfIndexWithIndicator { p },
            x_model,
            x_pair,
        })
    }

    /// x_m = (p·d/2)·m·ln2 and x_{j,m} = (p·d/2)·max(j,m)·ln2, i.e. both
    /// weights read off the log-dimension of the larger model. Valid in any
    /// ambient dimension d.
    pub fn larger_log_dim(chain: &ModelChain, p: f64) -> Result<WeightSchedule> {
        check_scale(p)?;
        if chain.extra.is_some() {
            return Err(Error::Config(
                "larger-log-dim weights need a pure multiresolution chain".into(),
            ));
        }
        let d = chain.basis.family.dimension as f64;
        let n = chain.n_models();
        let mut x_model = Vec::with_capacity(n);
        for pos in 0..n {
            let m = chain.numeric_index(pos)? as f64;
            x_model.push(check_weight(0.5 * p * d * m * LN_2)?);
        }
        let mut x_pair = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let ma = chain.numeric_index(a)? as f64;
                let mb = chain.numeric_index(b)? as f64;
                let x = check_weight(0.5 * p * d * ma.max(mb) * LN_2)?;
                x_pair[a * n + b] = x;
                x_pair[b * n + a] = x;
            }
        }
        Ok(WeightSchedule {
            provenance: WeightProvenance::LargerLogDim { p },
            x_model,
            x_pair,
        })
    }

    /// Explicit weights: one x per model and a symmetric pair matrix with
    /// zero diagonal. All weights must be finite and non-negative.
    pub fn user_supplied(
        chain: &ModelChain,
        x_model: Vec<f64>,
        x_pair: Vec<Vec<f64>>,
    ) -> Result<WeightSchedule> {
        let n = chain.n_models();
        if x_model.len() != n {
            return Err(Error::GridLengthMismatch {
                got: x_model.len(),
                want: n,
            });
        }
        if x_pair.len() != n || x_pair.iter().any(|row| row.len() != n) {
            return Err(Error::GridLengthMismatch {
                got: x_pair.len(),
                want: n,
            });
        }
        for &x in &x_model {
            check_weight(x)?;
        }
        let mut flat = vec![0.0; n * n];
        for a in 0..n {
            if x_pair[a][a] != 0.0 {
                return Err(Error::Config(
                    "pair-weight matrix must have a zero diagonal".into(),
                ));
            }
            for b in (a + 1)..n {
                if x_pair[a][b] != x_pair[b][a] {
                    return Err(Error::Config(
                        "pair-weight matrix must be symmetric".into(),
                    ));
                }
                let x = check_weight(x_pair[a][b])?;
                flat[a * n + b] = x;
                flat[b * n + a] = x;
            }
        }
        Ok(WeightSchedule {
            provenance: WeightProvenance::UserSupplied,
            x_model,
            x_pair: flat,
        })
    }
}

/// √(2x)·σ — the deviation allowance for weight x at noise scale σ ≥ 0.
pub fn deviation_bound(x: f64, sigma: f64) -> Result<f64> {
    check_weight(x)?;
    Ok((2.0 * x).sqrt() * sigma)
}

/// The per-model criterion values together with their two components.
#[derive(Debug, Clone)]
pub struct Criteria {
    pub crit: Vec<f64>,
    pub penalties: Vec<f64>,
    pub sup_deviation: Vec<f64>,
}

/// Computes crit(m), pen(m) and the sup-deviation term for every model.
pub fn criteria(
    estimates: &[f64],
    rep: &FunctionalRep,
    weights: &WeightSchedule,
) -> Result<Criteria> {
    let n = estimates.len();
    if n == 0 {
        return Err(Error::EmptyModelList);
    }
    if rep.n_models() != n {
        return Err(Error::GridLengthMismatch {
            got: rep.n_models(),
            want: n,
        });
    }
    if weights.n_models() != n {
        return Err(Error::GridLengthMismatch {
            got: weights.n_models(),
            want: n,
        });
    }
    let mut crit = Vec::with_capacity(n);
    let mut penalties = Vec::with_capacity(n);
    let mut sup_deviation = Vec::with_capacity(n);
    for m in 0..n {
        let pen = deviation_bound(weights.x_model(m), rep.sigma_sq[m].sqrt())?;
        // The j = m term is identically zero, so the sup starts there.
        let mut sup = 0.0f64;
        for j in (m + 1)..n {
            let allow = deviation_bound(weights.x_pair(j, m), rep.sigma_diff_sq(j, m).sqrt())?;
            sup = sup.max((estimates[m] - estimates[j]).abs() - allow);
        }
        crit.push(sup + pen);
        penalties.push(pen);
        sup_deviation.push(sup);
    }
    Ok(Criteria {
        crit,
        penalties,
        sup_deviation,
    })
}

/// Smallest index whose criterion is within `slack` of the minimum.
pub fn select_m_hat(crit: &[f64], slack: f64) -> Result<usize> {
    if crit.is_empty() {
        return Err(Error::EmptyModelList);
    }
    if crit.iter().any(|c| !c.is_finite()) {
        return Err(Error::Config("criterion value is not finite".into()));
    }
    let min = crit.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(crit
        .iter()
        .position(|&c| c <= min + slack)
        .expect("minimum is always within slack of itself"))
}

/// Full outcome of one selection.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// Chain position of the selected model.
    pub position: usize,
    /// Its numeric index (dyadic level, or ladder index of the extra model).
    pub numeric_index: u32,
    /// The selected model's estimate of T(s).
    pub estimate: f64,
    /// Per-model estimates T(ŝ_m).
    pub estimates: Vec<f64>,
    pub crit: Vec<f64>,
    pub penalties: Vec<f64>,
    pub sup_deviation: Vec<f64>,
}

/// Runs the full rule on one observation record.
pub fn select(
    record: &ObservationRecord,
    chain: &ModelChain,
    rep: &FunctionalRep,
    weights: &WeightSchedule,
) -> Result<SelectionResult> {
    let n_models = chain.n_models();
    let mut estimates = Vec::with_capacity(n_models);
    for pos in 0..n_models {
        estimates.push(functional::estimate_T(record, rep, chain, pos)?);
    }
    select_from_estimates(&estimates, record.model.n, chain, rep, weights)
}

/// The selection step when the per-model estimates are already in hand.
/// `n_obs` sets the tie-breaking slack 1/n.
pub fn select_from_estimates(
    estimates: &[f64],
    n_obs: usize,
    chain: &ModelChain,
    rep: &FunctionalRep,
    weights: &WeightSchedule,
) -> Result<SelectionResult> {
    let c = criteria(estimates, rep, weights)?;
    let slack = 1.0 / n_obs as f64;
    let position = select_m_hat(&c.crit, slack)?;
    Ok(SelectionResult {
        position,
        numeric_index: chain.numeric_index(position)?,
        estimate: estimates[position],
        estimates: estimates.to_vec(),
        crit: c.crit,
        penalties: c.penalties,
        sup_deviation: c.sup_deviation,
    })
}

/// Outcome of a selection over several chains at once.
#[derive(Debug, Clone)]
pub struct MultibasisSelection {
    /// Index of the winning chain in the setup list.
    pub chain_index: usize,
    /// Chain position of the winning model within that chain.
    pub position: usize,
    pub estimate: f64,
    /// crit[l][m] for every chain l and model m.
    pub crit: Vec<Vec<f64>>,
}

/// Selects over the union of several chains: the winner is the
/// lexicographically smallest (chain, model) pair whose criterion lies
/// within 1/n of the global minimum. All chains must describe the same
/// observation record.
pub fn select_multibasis(
    record: &ObservationRecord,
    setups: &[(&ModelChain, &FunctionalRep, &WeightSchedule)],
) -> Result<MultibasisSelection> {
    if setups.is_empty() {
        return Err(Error::EmptyModelList);
    }
    let mut crits = Vec::with_capacity(setups.len());
    let mut estimates = Vec::with_capacity(setups.len());
    for (chain, rep, weights) in setups {
        let mut ests = Vec::with_capacity(chain.n_models());
        for pos in 0..chain.n_models() {
            ests.push(functional::estimate_T(record, rep, chain, pos)?);
        }
        let c = criteria(&ests, rep, weights)?;
        crits.push(c.crit);
        estimates.push(ests);
    }
    let global_min = crits
        .iter()
        .flat_map(|c| c.iter().cloned())
        .fold(f64::INFINITY, f64::min);
    let slack = 1.0 / record.model.n as f64;
    for (l, crit) in crits.iter().enumerate() {
        for (pos, &c) in crit.iter().enumerate() {
            if c <= global_min + slack {
                return Ok(MultibasisSelection {
                    chain_index: l,
                    position: pos,
                    estimate: estimates[l][pos],
                    crit: crits.clone(),
                });
            }
        }
    }
    Err(Error::Config("no model within slack of the minimum".into()))
}
