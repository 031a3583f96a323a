//! Test signals on [0,1]: three built-in benchmark functions plus
//! user-defined piecewise-formula signals.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature;

/// One piece of a piecewise-defined signal: `expr` applies on `(lo, hi]`.
///
/// A piece with `lo == 0` also covers `x == 0`, so a family of pieces tiling
/// `[0,1]` yields a total function on the closed interval.
#[derive(Debug, Clone)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub expr: Expr,
}

impl Piece {
    fn covers(&self, x: f64) -> bool {
        (x > self.lo && x <= self.hi) || (x == self.lo && self.lo == 0.0)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// (x^4 - x)·sin(6x)
    PolySine,
    /// exp(-30|x - 3/4|) + exp(-30|x - 1/4|)
    DoubleExpPeak,
    /// x·cos(2πx) on (0, 2/3], x²·cos(15πx) on (2/3, 1]
    CosineSwitch,
    Pieces(Vec<Piece>),
}

/// A signal on [0,1]: the unknown mean function of the observation model.
#[derive(Debug, Clone)]
pub struct Signal {
    id: String,
    kind: Kind,
    /// Dyadic depth used when the signal enters quadrature-based truths.
    pub truth_quadrature_depth: u32,
}

impl Signal {
    /// The three built-in benchmark signals are named `s1`, `s2`, `s3`.
    pub fn from_name(name: &str) -> Result<Signal> {
        let kind = match name {
            "s1" => Kind::PolySine,
            "s2" => Kind::DoubleExpPeak,
            "s3" => Kind::CosineSwitch,
            other => {
                return Err(Error::Config(format!(
                    "unknown signal id `{other}` (built-ins: s1, s2, s3)"
                )))
            }
        };
        Ok(Signal {
            id: name.to_string(),
            kind,
            truth_quadrature_depth: quadrature::TRUTH_DEPTH,
        })
    }

    /// A signal defined by formula pieces on half-open cells of [0,1].
    pub fn piecewise(id: &str, pieces: Vec<Piece>) -> Signal {
        Signal {
            id: id.to_string(),
            kind: Kind::Pieces(pieces),
            truth_quadrature_depth: quadrature::TRUTH_DEPTH,
        }
    }

    /// A signal defined by a single formula valid on all of [0,1].
    pub fn from_formula(id: &str, formula: &str) -> Result<Signal> {
        let expr = Expr::parse(formula)?;
        Ok(Signal::piecewise(
            id,
            vec![Piece {
                lo: 0.0,
                hi: 1.0,
                expr,
            }],
        ))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Evaluates the signal at `x ∈ [0,1]`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::PolySine => (x.powi(4) - x) * (6.0 * x).sin(),
            Kind::DoubleExpPeak => {
                (-30.0 * (x - 0.75).abs()).exp() + (-30.0 * (x - 0.25).abs()).exp()
            }
            Kind::CosineSwitch => {
                if x <= 2.0 / 3.0 {
                    x * (2.0 * std::f64::consts::PI * x).cos()
                } else {
                    x * x * (15.0 * std::f64::consts::PI * x).cos()
                }
            }
            Kind::Pieces(pieces) => pieces
                .iter()
                .find(|p| p.covers(x))
                .map(|p| p.expr.eval(x))
                .unwrap_or(0.0),
        }
    }

    /// Cylinder extension to [0,1]^d: the value depends on the first
    /// coordinate only. Used by the d-dimensional experiments.
    pub fn eval_axis0(&self, x: &[f64]) -> f64 {
        self.eval(x[0])
    }

    /// Interior points where the signal is not smooth (kinks or jumps).
    /// Truth integrals split their quadrature at these points.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::PolySine => Vec::new(),
            Kind::DoubleExpPeak => vec![0.25, 0.75],
            Kind::CosineSwitch => vec![2.0 / 3.0],
            Kind::Pieces(pieces) => {
                let mut pts: Vec<f64> = pieces
                    .iter()
                    .flat_map(|p| [p.lo, p.hi])
                    .filter(|&x| x > 0.0 && x < 1.0)
                    .collect();
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
                pts
            }
        }
    }

    /// Midpoint samples of the signal on the dyadic grid of the given depth.
    pub fn truth_grid(&self, depth: u32) -> Vec<f64> {
        quadrature::midpoint_grid(|x| self.eval(x), depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-12;

    #[test]
    fn s1_reference_values() {
        let s = Signal::from_name("s1").unwrap();
        for (x, want) in [
            (0.125, -0.08503842929002),
            (0.25, -0.24547728185959),
            (1.0 / 3.0, -0.29187324811689),
            (0.5, -0.06174000352619),
            (2.0 / 3.0, 0.35504314594693),
            (0.75, 0.42385094945635),
            (0.875, 0.24807605120207),
            (1.0, 0.0),
        ] {
            assert_abs_diff_eq!(s.eval(x), want, epsilon = TOL);
        }
    }

    #[test]
    fn s2_reference_values() {
        let s = Signal::from_name("s2").unwrap();
        for (x, want) in [
            (0.125, 0.02351775305014),
            (0.25, 1.00000030590232),
            (1.0 / 3.0, 0.08208872527707),
            (0.5, 0.00110616874030),
            (0.75, 1.00000030590232),
            (0.875, 0.02351775305014),
            (1.0, 0.00055308453934),
        ] {
            assert_abs_diff_eq!(s.eval(x), want, epsilon = TOL);
        }
        // Symmetric around 1/2 by construction.
        assert_abs_diff_eq!(s.eval(0.1), s.eval(0.9), epsilon = TOL);
    }

    #[test]
    fn s3_reference_values_and_piece_boundary() {
        let s = Signal::from_name("s3").unwrap();
        for (x, want) in [
            (0.125, 0.08838834764832),
            (0.25, 0.0),
            (1.0 / 3.0, -0.16666666666667),
            (0.5, -0.5),
            (2.0 / 3.0, -0.33333333333333), // boundary belongs to the first piece
            (0.75, -0.39774756441743),
            (0.875, -0.70734526707895),
            (1.0, -1.0),
        ] {
            assert_abs_diff_eq!(s.eval(x), want, epsilon = TOL);
        }
        // Just past the boundary the second branch applies: x²·cos(15πx).
        let x = 2.0 / 3.0 + 1e-9;
        assert_abs_diff_eq!(
            s.eval(x),
            x * x * (15.0 * std::f64::consts::PI * x).cos(),
            epsilon = TOL
        );
    }

    #[test]
    fn formula_signal_matches_builtin() {
        let built = Signal::from_name("s1").unwrap();
        let parsed = Signal::from_formula("user", "(x^4 - x)*sin(6*x)").unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_abs_diff_eq!(parsed.eval(x), built.eval(x), epsilon = TOL);
        }
    }

    #[test]
    fn piecewise_half_open_cells() {
        let pieces = vec![
            Piece {
                lo: 0.0,
                hi: 0.5,
                expr: Expr::parse("1").unwrap(),
            },
            Piece {
                lo: 0.5,
                hi: 1.0,
                expr: Expr::parse("2").unwrap(),
            },
        ];
        let s = Signal::piecewise("step", pieces);
        assert_eq!(s.eval(0.0), 1.0); // lo == 0 also covers the left endpoint
        assert_eq!(s.eval(0.5), 1.0); // boundary belongs to the piece ending there
        assert_eq!(s.eval(0.500000001), 2.0);
        assert_eq!(s.eval(1.0), 2.0);
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(Signal::from_name("s4").is_err());
    }
}
