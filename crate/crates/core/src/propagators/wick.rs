//! Extrapolation of damped-contour values Δt(1 − iδ) to δ = 0.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Starting damping parameters; further points halve the last one.
pub const WICK_DELTAS: [f64; 3] = [4e-3, 2e-3, 1e-3];

const MAX_POINTS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub value: Complex64,
    /// |difference of the last two diagonal Richardson entries|.
    pub error_estimate: f64,
    pub deltas: Vec<f64>,
}

/// Richardson (polynomial in δ) extrapolation of `eval(δ)` to δ = 0. Starts
/// from [`WICK_DELTAS`] and keeps halving δ until two successive diagonal
/// entries agree to `rel_tol`.
pub fn wick_extrapolate(mut eval: impl FnMut(f64) -> Result<Complex64>, rel_tol: f64) -> Result<Extrapolation> {
    let mut deltas: Vec<f64> = Vec::new();
    let mut table: Vec<Vec<Complex64>> = Vec::new();
    let mut best: Option<(Complex64, f64)> = None;
    for i in 0..MAX_POINTS {
        let d = if i < WICK_DELTAS.len() { WICK_DELTAS[i] } else { deltas[i - 1] * 0.5 };
        deltas.push(d);
        let mut row = vec![eval(d)?];
        for j in 1..=i {
            let ratio = deltas[i - j] / d;
            let prev = row[j - 1];
            row.push(prev + (prev - table[i - 1][j - 1]) / (ratio - 1.0));
        }
        table.push(row);
        if i + 1 < WICK_DELTAS.len() {
            continue;
        }
        let value = table[i][i];
        let err = (value - table[i - 1][i - 1]).norm();
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((value, err));
        }
        if err <= rel_tol * value.norm() {
            return Ok(Extrapolation { value, error_estimate: err, deltas });
        }
    }
    let (value, err) = best.expect("at least three points");
    Err(Error::Convergence(format!(
        "wick extrapolation stalled at relative error {:.3e} (value {value})",
        err / value.norm()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_low_degree_polynomials() {
        let f = |d: f64| Ok(Complex64::new(1.0 + 3.0 * d - 40.0 * d * d, 2.0 * d));
        let e = wick_extrapolate(f, 1e-14).unwrap();
        assert!((e.value - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        assert_eq!(e.deltas.len(), 4);
    }

    #[test]
    fn analytic_function() {
        let f = |d: f64| Ok((Complex64::new(0.0, -5.0) * Complex64::new(1.0, -d)).exp());
        let e = wick_extrapolate(f, 1e-10).unwrap();
        assert!((e.value - Complex64::new(0.0, -5.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn reports_stall() {
        let f = |d: f64| Ok(Complex64::new(d.sqrt().sin() * 1e3, 0.0));
        assert!(matches!(wick_extrapolate(f, 1e-12), Err(Error::Convergence(_))));
    }
}
