//! Finite differences on a uniform grid. Interior rows use centered stencils
//! of width 2·HALF+1. Row k < HALF from either end uses the widest centered
//! stencil that fits (half-width k ≥ 2), and the two outermost rows a short
//! one-sided window. Tapering keeps the weights small where sampled modes are
//! multiplied by 1/r², so roundoff near r_min stays under control; the modes
//! are nearly polynomial in r there, which keeps the lower order harmless.
//! Rows are summed as Σ w_j (f_j − f_k), which annihilates constants exactly.
//!
//! Within COARSE_SPAN of the first node the same pattern is laid over every
//! m-th node, m·h ≈ COARSE_SPACING. Modes are power laws of r = e^s there, so
//! the wider spacing costs no accuracy, while the rounding of the samples,
//! amplified by 1/(mh)^d, drops by m^d.

use num_complex::Complex64;

const HALF: usize = 4;
const EDGE: usize = 6;
const COARSE_SPAN: f64 = 4.6;
const COARSE_SPACING: f64 = 0.03;
const MAX_STRIDE: usize = 4;
/// Stride of the fully one-sided first row, whose weights are largest.
const EDGE_STRIDE: usize = 2;

/// Fornberg weights for derivatives 0..=m at x0 over nodes xs.
fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// Weights for derivative `deriv` at node `at` of 0..width.
fn weights(width: usize, at: usize, deriv: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..width).map(|j| j as f64).collect();
    fornberg(at as f64, &xs, deriv).swap_remove(deriv)
}

/// Row weights for a node with `p` nodes of the pattern on its low side:
/// (offset of the first node in units of the stride, weights).
fn pattern(p: usize, table: &[(usize, Vec<f64>)]) -> &(usize, Vec<f64>) {
    &table[p.min(HALF)]
}

fn apply(f: &[Complex64], h: f64, deriv: usize) -> Vec<Complex64> {
    let n = f.len();
    assert!(n >= MIN_SAMPLES, "stencil needs at least {MIN_SAMPLES} samples");
    // table[p]: stencil for a row with p pattern nodes below it, p ≤ HALF
    let table: Vec<(usize, Vec<f64>)> = (0..=HALF)
        .map(|p| match p {
            0 | 1 => (p, weights(EDGE, p, deriv)),
            _ => (p, weights(2 * p + 1, p, deriv)),
        })
        .collect();
    let row = |k: usize, step: usize, (at, w): &(usize, Vec<f64>)| -> Complex64 {
        let start = k - at * step;
        let base = f[k];
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, wj) in w.iter().enumerate() {
            acc += (f[start + j * step] - base) * *wj;
        }
        acc / (h * step as f64).powi(deriv as i32)
    };
    let mut stride = ((COARSE_SPACING / h).floor() as usize).clamp(1, MAX_STRIDE);
    if n < 8 * (2 * HALF + 2) * stride {
        stride = 1;
    }
    let coarse_rows = if stride > 1 { ((COARSE_SPAN / h) as usize).min(n / 2) } else { 0 };
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for (k, dk) in d.iter_mut().enumerate().take(n - HALF) {
        let step = match k {
            _ if k >= coarse_rows => 1,
            0 => EDGE_STRIDE.min(stride),
            _ => stride.min(k / HALF).max(1),
        };
        *dk = row(k, step, pattern(k / step, &table));
    }
    // the high end mirrors the low end with stride 1
    for p in 0..HALF {
        let k = n - 1 - p;
        let (at, w) = &table[p];
        let width = w.len();
        let mirrored = (width - 1 - at, w.iter().rev().map(|x| if deriv % 2 == 1 { -x } else { *x }).collect());
        d[k] = row(k, 1, &mirrored);
    }
    d
}

/// Minimum number of samples accepted by `first` and `second`.
pub(crate) const MIN_SAMPLES: usize = 2 * HALF + 2;

/// df/ds.
pub(crate) fn first(f: &[Complex64], h: f64) -> Vec<Complex64> {
    apply(f, h, 1)
}

/// d²f/ds².
pub(crate) fn second(f: &[Complex64], h: f64) -> Vec<Complex64> {
    apply(f, h, 2)
}
