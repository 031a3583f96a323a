//! Periodized orthonormal filter-bank transform (forward and inverse).
//!
//! One analysis step maps a length-2L vector c to approximation and detail
//! halves of length L:
//!
//! ```text
//! a[k] = Σ_t h[t]·c[(2k+t) mod 2L],   d[k] = Σ_t g[t]·c[(2k+t) mod 2L]
//! ```
//!
//! with the quadrature-mirror detail filter g[t] = (−1)^t·h[len−1−t]. For an
//! orthonormal filter h (Σh² = 1, even-shift orthogonality) the step is an
//! orthogonal map, so the inverse is its transpose and squared norms are
//! preserved level by level.

/// Orthonormal two-tap averaging filter (piecewise-constant basis).
pub const HAAR_FILTER: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

fn detail_filter(h: &[f64]) -> Vec<f64> {
    let l = h.len();
    (0..l)
        .map(|t| {
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            sign * h[l - 1 - t]
        })
        .collect()
}

/// One analysis step: (approximation, detail), each half the input length.
/// The input length must be even.
pub fn analysis_step(c: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert!(c.len() % 2 == 0 && !c.is_empty(), "even-length input required");
    let n = c.len();
    let g = detail_filter(h);
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (t, &ht) in h.iter().enumerate() {
            let idx = (2 * k + t) % n;
            a += ht * c[idx];
            d += g[t] * c[idx];
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

/// One synthesis step: exact inverse of `analysis_step` for orthonormal h.
pub fn synthesis_step(approx: &[f64], detail: &[f64], h: &[f64]) -> Vec<f64> {
    assert_eq!(approx.len(), detail.len());
    let half = approx.len();
    let n = 2 * half;
    let g = detail_filter(h);
    let mut c = vec![0.0; n];
    for k in 0..half {
        for (t, &ht) in h.iter().enumerate() {
            let idx = (2 * k + t) % n;
            c[idx] += ht * approx[k] + g[t] * detail[k];
        }
    }
    c
}

/// A full decomposition: the coarsest approximation block plus the detail
/// blocks from coarsest to finest.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub approx: Vec<f64>,
    /// details[0] is the coarsest block (same length as `approx`),
    /// details.last() the finest (half the original length).
    pub details: Vec<Vec<f64>>,
}

/// Decomposes `data` (length divisible by 2^steps) through `steps` analysis
/// steps.
pub fn decompose(data: &[f64], h: &[f64], steps: u32) -> Decomposition {
    let mut approx = data.to_vec();
    let mut details = Vec::new();
    for _ in 0..steps {
        let (a, d) = analysis_step(&approx, h);
        approx = a;
        details.push(d);
    }
    details.reverse();
    Decomposition { approx, details }
}

/// Inverts `decompose`.
pub fn reconstruct(dec: &Decomposition, h: &[f64]) -> Vec<f64> {
    let mut approx = dec.approx.clone();
    for d in &dec.details {
        approx = synthesis_step(&approx, d, h);
    }
    approx
}
