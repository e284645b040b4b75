//! Time-sliced path integral, one angular-momentum sector at a time.
//!
//! After the angular and momentum integrations each sector is a chain of
//! one-slice radial kernels R^{(ε)}(r′, r), ε = t/N, composed with ∫ dr on a
//! log grid. The default slice keeps the free sector kernel exact (the
//! Bessel function left by the angular integral) and puts the potential at
//! the earlier point, e^{−iεV(r)/ħ}; this is first order in ε.
//!
//! The sectors are assembled as
//! (2π√(r_f r_i))⁻¹ Σ_ℓ e^{i(ℓ+λ)Δθ} R_ℓ · e^{−iλΔθ}.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PropagatorRequest;
use crate::error::{Error, Result};
use crate::hilbert::{GridSpec, RadialGrid};
use crate::models::alpha_abs;
use crate::specfun::bessel_i_scaled_c;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// exp(−80) relative to the peak: kernel entries below this are dropped.
const BAND_CUTOFF: f64 = -80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SliceKernel {
    /// Exact free sector kernel times e^{−iεV(r)/ħ}.
    #[default]
    Bessel,
    /// Short-time Gaussian with the inverse-square term
    /// ħ²(|α|² − ¼ − 2iν)/(2mr²) and the phase e^{−2iν(r′/r − 1)}.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathIntegralOptions {
    pub kernel: SliceKernel,
    /// Quadrature grid; chosen from the request when absent.
    pub grid: Option<GridSpec>,
    /// Largest accepted relative defect of the free two-slice check.
    pub resolution_tol: f64,
    pub max_nodes: usize,
}

impl Default for PathIntegralOptions {
    fn default() -> Self {
        Self { kernel: SliceKernel::Bessel, grid: None, resolution_tol: 1e-6, max_nodes: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathIntegralValue {
    pub value: Complex64,
    pub ell_cutoff: usize,
    /// (ℓ, R_ℓ) in ascending ℓ.
    pub sectors: Vec<(i64, Complex64)>,
    /// Worst relative defect seen by the resolution monitor.
    pub resolution: f64,
    pub grid: GridSpec,
}

fn damped_time(req: &PropagatorRequest, n_slices: usize) -> Result<Complex64> {
    let t = req.time()?;
    if !req.contour.is_damped() {
        return Err(Error::Contour("the sliced path integral needs the euclidean or wick contour".into()));
    }
    if n_slices == 0 {
        return Err(Error::Input("n_slices must be at least 1".into()));
    }
    if req.q_i.r() <= 0.0 || req.q_f.r() <= 0.0 {
        return Err(Error::Domain("propagators are defined on the punctured plane".into()));
    }
    Ok(t)
}

/// Width of |e^{−m d²/(2iħt)}| in d.
fn decay_width(t: Complex64, mass: f64, hbar: f64) -> f64 {
    (hbar * t.norm_sqr() / (mass * -t.im)).sqrt()
}

/// Default quadrature grid: it extends 7 spreads beyond the outer endpoint
/// and resolves the one-slice Gaussian at its outer edge.
pub fn pathintegral_grid(req: &PropagatorRequest, n_slices: usize) -> Result<RadialGrid> {
    let t = damped_time(req, n_slices)?;
    let p = &req.params;
    let mut spread = decay_width(t, p.mass, p.hbar);
    if let Some(len) = p.length_scale() {
        spread = spread.min(len);
    }
    let eps = t / n_slices as f64;
    let sigma = decay_width(eps, p.mass, p.hbar) * (-eps.im / eps.norm());
    let (rf, ri) = (req.q_f.r(), req.q_i.r());
    let r_min = 1e-4 * spread.min(rf).min(ri);
    let r_max = rf.max(ri) + 7.0 * spread;
    let h = 0.8 * sigma / r_max;
    let n = ((r_max / r_min).ln() / h).ceil() as usize + 1;
    RadialGrid::log(r_min, r_max, n.max(64))
}

struct Slice<'a> {
    req: &'a PropagatorRequest,
    eps: Complex64,
    alpha: f64,
    kernel: SliceKernel,
}

impl Slice<'_> {
    fn gauss_exponent(&self, a: f64, b: f64) -> Complex64 {
        let p = &self.req.params;
        -p.mass * (a - b) * (a - b) / (2.0 * I * p.hbar * self.eps)
    }

    /// Exact free sector kernel over one slice, from b to a.
    fn free(&self, a: f64, b: f64, eps: Complex64) -> Complex64 {
        let p = &self.req.params;
        let denom = I * p.hbar * eps;
        let gauss = -p.mass * (a - b) * (a - b) / (2.0 * denom);
        if gauss.re < BAND_CUTOFF {
            return Complex64::new(0.0, 0.0);
        }
        let phase = 2.0 * p.nu * (b / a).ln();
        let zeta = p.mass * a * b / denom;
        p.mass / denom * (a * b).sqrt() * (gauss + I * phase).exp() * bessel_i_scaled_c(self.alpha, zeta)
    }

    fn potential(&self, b: f64) -> Complex64 {
        let p = &self.req.params;
        (-I * self.eps * 0.5 * p.mass * p.omega * p.omega * b * b / p.hbar).exp()
    }

    fn reduced(&self, a: f64, b: f64) -> Complex64 {
        let p = &self.req.params;
        let gauss = self.gauss_exponent(a, b);
        if gauss.re < BAND_CUTOFF {
            return Complex64::new(0.0, 0.0);
        }
        let c = Complex64::new(self.alpha * self.alpha - 0.25, -2.0 * p.nu);
        let inv_square = -I * self.eps * p.hbar * c / (2.0 * p.mass * b * b);
        let pref = (p.mass / (2.0 * PI * I * p.hbar * self.eps)).sqrt();
        pref * (gauss + inv_square - 2.0 * I * p.nu * (a / b - 1.0)).exp() * self.potential(b)
    }

    fn kernel(&self, a: f64, b: f64) -> Complex64 {
        match self.kernel {
            SliceKernel::Bessel => self.free(a, b, self.eps) * self.potential(b),
            SliceKernel::Reduced => self.reduced(a, b),
        }
    }

    /// Defect of ∫ R₀^{(ε)}(a, r) R₀^{(ε)}(r, a) dr against R₀^{(2ε)}(a, a),
    /// relative to the larger of that value and `floor`.
    fn free_defect(&self, grid: &RadialGrid, a: f64, floor: f64) -> f64 {
        let w = grid.line_weights();
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, wk) in grid.nodes().iter().zip(&w) {
            acc += self.free(a, *r, self.eps) * self.free(*r, a, self.eps) * *wk;
        }
        let exact = self.free(a, a, 2.0 * self.eps);
        (acc - exact).norm() / exact.norm().max(floor)
    }
}

/// R_ℓ^{(N)}(r_f, r_i) for one sector, with the resolution-monitor defect.
fn sector(req: &PropagatorRequest, ell: i64, n_slices: usize, opts: &PathIntegralOptions, grid: &RadialGrid) -> Result<(Complex64, f64)> {
    let t = damped_time(req, n_slices)?;
    let eps = t / n_slices as f64;
    let alpha = alpha_abs(ell, req.lambda, req.params.mu);
    let slice = Slice { req, eps, alpha, kernel: opts.kernel };
    if opts.kernel == SliceKernel::Reduced {
        let c = Complex64::new(alpha * alpha - 0.25, -2.0 * req.params.nu);
        let coeff = -I * eps * req.params.hbar * c;
        if coeff.re > 0.0 {
            return Err(Error::Resolution(format!(
                "the reduced slice kernel grows like exp(+c/r²) at the origin for ell={ell} (|alpha| = {alpha:.3} < 1/2)"
            )));
        }
    }
    let (rf, ri) = (req.q_f.r(), req.q_i.r());
    let mid = 0.5 * (grid.r_min() + grid.r_max());
    // High sectors on a complex contour are exponentially small and come out
    // of a cancelling integral, so they are judged against the lowest sector.
    let lowest = Slice { alpha: req.ell_range().map(|l| alpha_abs(l, req.lambda, req.params.mu)).fold(alpha, f64::min), ..slice };
    let defect = [rf, ri, mid]
        .iter()
        .map(|&a| slice.free_defect(grid, a, lowest.free(a, a, 2.0 * eps).norm()))
        .fold(0.0, f64::max);
    if !(defect <= opts.resolution_tol) {
        return Err(Error::Resolution(format!(
            "free two-slice check off by {defect:.3e} (tolerance {:.1e}) on a {}-node grid for ell={ell}",
            opts.resolution_tol,
            grid.len()
        )));
    }
    if n_slices == 1 {
        return Ok((slice.kernel(rf, ri), defect));
    }
    let nodes = grid.nodes();
    let w = grid.line_weights();
    let n = nodes.len();
    let mut v: Vec<Complex64> = nodes.iter().map(|&r| slice.kernel(r, ri)).collect();
    if n_slices > 2 {
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                m[j * n + k] = slice.kernel(nodes[j], nodes[k]) * w[k];
            }
        }
        for _ in 0..n_slices - 2 {
            v = (0..n).map(|j| m[j * n..(j + 1) * n].iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        }
    }
    let value = nodes.iter().zip(&w).zip(&v).map(|((&r, wk), vk)| slice.kernel(rf, r) * *wk * vk).sum();
    Ok((value, defect))
}

/// R_ℓ^{(N)}(r_f, r_i) of one sector, comparable with [`spectral_sector`].
pub fn pathintegral_sector(req: &PropagatorRequest, ell: i64, n_slices: usize, opts: &PathIntegralOptions) -> Result<Complex64> {
    let grid = resolve_grid(req, n_slices, opts)?;
    Ok(sector(req, ell, n_slices, opts, &grid)?.0)
}

fn resolve_grid(req: &PropagatorRequest, n_slices: usize, opts: &PathIntegralOptions) -> Result<RadialGrid> {
    let grid = match opts.grid {
        Some(spec) => RadialGrid::from_spec(spec)?,
        None => pathintegral_grid(req, n_slices)?,
    };
    if grid.len() > opts.max_nodes {
        return Err(Error::Resolution(format!(
            "the slice kernel needs {} grid nodes, more than max_nodes = {}",
            grid.len(),
            opts.max_nodes
        )));
    }
    Ok(grid)
}

/// (2π√(r_f r_i))⁻¹ Σ_ℓ e^{i(ℓ+λ)Δθ} R_ℓ · e^{−iλΔθ}.
pub fn assemble_sectors(sectors: &[(i64, Complex64)], lambda: f64, r_f: f64, r_i: f64, delta_theta: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for &(ell, r) in sectors {
        sum += Complex64::from_polar(1.0, (ell as f64 + lambda) * delta_theta) * r;
    }
    sum * Complex64::from_polar(1.0, -lambda * delta_theta) / (2.0 * PI * (r_f * r_i).sqrt())
}

pub fn propagator_pathintegral(req: &PropagatorRequest, n_slices: usize) -> Result<PathIntegralValue> {
    propagator_pathintegral_with(req, n_slices, &PathIntegralOptions::default())
}

/// Sectors run in parallel and are reduced in ascending ℓ, so the result
/// does not depend on the number of worker threads.
pub fn propagator_pathintegral_with(req: &PropagatorRequest, n_slices: usize, opts: &PathIntegralOptions) -> Result<PathIntegralValue> {
    let grid = resolve_grid(req, n_slices, opts)?;
    let ells: Vec<i64> = req.ell_range().collect();
    let results: Vec<Result<(Complex64, f64)>> = ells.par_iter().map(|&l| sector(req, l, n_slices, opts, &grid)).collect();
    let mut sectors = Vec::with_capacity(ells.len());
    let mut resolution: f64 = 0.0;
    for (&ell, res) in ells.iter().zip(results) {
        let (v, d) = res?;
        sectors.push((ell, v));
        resolution = resolution.max(d);
    }
    let value = assemble_sectors(&sectors, req.lambda, req.q_f.r(), req.q_i.r(), req.delta_theta());
    Ok(PathIntegralValue { value, ell_cutoff: req.ell_cutoff, sectors, resolution, grid: grid.spec() })
}
