//! Closed-form physics of the two worked examples: the free particle with
//! Bessel modes and the harmonic oscillator pierced by a flux line.
//!
//! The radial quantum number is called `n_r` throughout. Free modes with
//! λ ≠ 0 are an extension: they are the regular solutions of the same radial
//! operator with ℓ replaced by ℓ + λ.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HamiltonianParams, RadialGrid, RadialMode};
use crate::specfun::{bessel_j_real, laguerre_unchecked, ln_gamma_pos};

/// |α| = √((ℓ+λ)² + 4μ²).
pub fn alpha_abs(ell: i64, lambda: f64, mu: f64) -> f64 {
    (ell as f64 + lambda).hypot(2.0 * mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorLevel {
    pub n_r: usize,
    pub ell: i64,
    pub energy: f64,
}

fn require_oscillator(params: &HamiltonianParams) -> Result<()> {
    params.validate()?;
    if params.omega == 0.0 {
        return Err(Error::FreeParticle("omega = 0 has a continuous spectrum".into()));
    }
    Ok(())
}

/// ħω(2n_r + 1 + |α|).
pub fn oscillator_energy(n_r: usize, ell: i64, params: &HamiltonianParams, lambda: f64) -> Result<f64> {
    require_oscillator(params)?;
    Ok(level_energy(n_r, ell, params, lambda))
}

fn level_energy(n_r: usize, ell: i64, params: &HamiltonianParams, lambda: f64) -> f64 {
    params.hbar * params.omega * (2.0 * n_r as f64 + 1.0 + alpha_abs(ell, lambda, params.mu))
}

/// Radial factor f(r) of the eigenfunction ψ_{n_r,ℓ} = f(r) e^{iℓθ}:
/// √(mω/πħ) √(n_r!/Γ(|α|+n_r+1)) u^{−2iν} u^{|α|} e^{−u²/2} L^{|α|}_{n_r}(u²),
/// u = r √(mω/ħ). Assumes ω > 0.
pub fn oscillator_amplitude(n_r: usize, ell: i64, params: &HamiltonianParams, lambda: f64, r: f64) -> Complex64 {
    let alpha = alpha_abs(ell, lambda, params.mu);
    let k = params.mass * params.omega / params.hbar;
    let u = r * k.sqrt();
    let n = n_r as f64;
    let ln_u = u.ln();
    let ln_norm = 0.5 * (k / PI).ln() + 0.5 * (ln_gamma_pos(n + 1.0) - ln_gamma_pos(alpha + n + 1.0));
    let radial = (ln_norm + alpha * ln_u - 0.5 * u * u).exp() * laguerre_unchecked(alpha, n_r, u * u);
    Complex64::from_polar(1.0, -2.0 * params.nu * ln_u) * radial
}

/// Samples ψ_{n_r,ℓ} on the grid; fails if the grid misses more than 1e-8
/// of the unit norm.
pub fn oscillator_wavefunction(
    n_r: usize,
    ell: i64,
    params: &HamiltonianParams,
    lambda: f64,
    grid: Arc<RadialGrid>,
) -> Result<RadialMode> {
    require_oscillator(params)?;
    let mode = RadialMode::from_fn(ell, grid, |r| oscillator_amplitude(n_r, ell, params, lambda, r))?;
    let missing = 1.0 - mode.norm().powi(2);
    if missing > 1e-8 {
        return Err(Error::Coverage(format!(
            "grid captures only 1 - {missing:.3e} of the norm of state (n_r={n_r}, ell={ell})"
        )));
    }
    Ok(mode)
}

/// Smallest node in units of the oscillator length. Smaller values lose
/// accuracy to roundoff in the 1/r² terms of H; larger ones cut off norm
/// (about (r_min/L)² for |α| = 0).
pub const R_MIN: f64 = 5e-5;

/// Log grid for oscillator states up to (n_r_max, α_max): r_min = R_MIN·L and
/// r_max where both the ground state and the most extended state of the set
/// have dropped below 1e-14 of the ground-state peak amplitude.
pub fn oscillator_grid(params: &HamiltonianParams, n_r_max: usize, alpha_max: f64, n_nodes: usize) -> Result<RadialGrid> {
    require_oscillator(params)?;
    let len = params.length_scale().expect("omega > 0");
    let unit = HamiltonianParams { mass: 1.0, omega: 1.0, hbar: 1.0, nu: 0.0, mu: 0.0 };
    let peak = 1.0 / PI.sqrt();
    let lambda = alpha_max; // ℓ = 0 with λ = α_max realizes the order α_max
    let turning = (2.0 * (2.0 * n_r_max as f64 + 1.0 + alpha_max)).sqrt();
    let mut u = turning.max(1.0);
    while u < 60.0 {
        let outer = oscillator_amplitude(n_r_max, 0, &unit, lambda, u).norm();
        if outer < 1e-14 * peak && (-0.5 * u * u).exp() < 1e-14 {
            break;
        }
        u += 0.05;
    }
    RadialGrid::log(R_MIN * len, u * len, n_nodes)
}

/// Energy and angular momentum of a free scattering mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringLabel {
    pub energy: f64,
    pub ell: i64,
}

/// Radial factor √(m/2πħ²) (kr)^{−2iν} J_{|α|}(kr), k = √(2mE)/ħ. At E = 0
/// the phase (kr)^{−2iν} is taken as 1.
pub fn free_amplitude(label: &ScatteringLabel, params: &HamiltonianParams, lambda: f64, r: f64) -> Complex64 {
    let alpha = alpha_abs(label.ell, lambda, params.mu);
    let k = (2.0 * params.mass * label.energy).sqrt() / params.hbar;
    let x = k * r;
    let pre = (params.mass / (2.0 * PI)).sqrt() / params.hbar;
    let phase = if x > 0.0 { Complex64::from_polar(1.0, -2.0 * params.nu * x.ln()) } else { Complex64::new(1.0, 0.0) };
    phase * pre * bessel_j_real(alpha, x)
}

/// Samples the free mode of the given label; the potential in `params` is ignored.
pub fn free_wavefunction(
    label: &ScatteringLabel,
    params: &HamiltonianParams,
    lambda: f64,
    grid: Arc<RadialGrid>,
) -> Result<RadialMode> {
    params.validate()?;
    if !(label.energy >= 0.0) || !label.energy.is_finite() {
        return Err(Error::Domain(format!("scattering energy must be finite and >= 0, got {}", label.energy)));
    }
    RadialMode::from_fn(label.ell, grid, |r| free_amplitude(label, params, lambda, r))
}

/// Σ_{|ℓ|≤ℓ_max} i^{|ℓ|} e^{iℓ(θ−φ)} J_{|ℓ|}(rp/ħ), which tends to e^{i(x p_x + y p_y)/ħ}.
pub fn plane_wave_expansion(x: f64, y: f64, p_x: f64, p_y: f64, hbar: f64, ell_max: usize) -> Complex64 {
    let r = x.hypot(y);
    let p = p_x.hypot(p_y);
    let z = r * p / hbar;
    let delta = y.atan2(x) - p_y.atan2(p_x);
    let mut sum = Complex64::new(bessel_j_real(0.0, z), 0.0);
    for ell in 1..=ell_max {
        let j = bessel_j_real(ell as f64, z);
        // ℓ and −ℓ together: i^ℓ J_ℓ (e^{iℓδ} + e^{−iℓδ})
        let i_pow = match ell % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        sum += i_pow * (2.0 * j * (ell as f64 * delta).cos());
    }
    sum
}

/// Range of (n_r, ℓ) used to enumerate levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelWindow {
    pub n_r_max: usize,
    pub ell_min: i64,
    pub ell_max: i64,
}

impl LevelWindow {
    pub fn symmetric(n_r_max: usize, ell_max: i64) -> Self {
        Self { n_r_max, ell_min: -ell_max, ell_max }
    }
}

impl Default for LevelWindow {
    fn default() -> Self {
        Self::symmetric(12, 20)
    }
}

/// Sorted levels at one value of λ. Every level of the full spectrum with
/// energy strictly below `complete_below` is present: window truncation
/// only removes levels at or above it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralFlowRow {
    pub lambda: f64,
    pub levels: Vec<OscillatorLevel>,
    pub complete_below: f64,
}

impl SpectralFlowRow {
    /// Energies strictly below `cut`.
    pub fn energies_below(&self, cut: f64) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).filter(|&e| e < cut).collect()
    }
}

/// Lowest energy of any level outside the window.
fn completeness_cut(params: &HamiltonianParams, lambda: f64, w: &LevelWindow) -> f64 {
    let nearest = (lambda - lambda.round()).abs();
    let alpha_min = nearest.hypot(2.0 * params.mu);
    let e = params.hbar * params.omega;
    let above = e * (1.0 + alpha_abs(w.ell_max + 1, lambda, params.mu));
    let below = e * (1.0 + alpha_abs(w.ell_min - 1, lambda, params.mu));
    let radial = e * (2.0 * (w.n_r_max as f64 + 1.0) + 1.0 + alpha_min);
    above.min(below).min(radial)
}

pub fn spectral_flow(lambdas: &[f64], params: &HamiltonianParams, window: &LevelWindow) -> Result<Vec<SpectralFlowRow>> {
    require_oscillator(params)?;
    if window.ell_min > window.ell_max {
        return Err(Error::Input(format!("empty angular-momentum window [{}, {}]", window.ell_min, window.ell_max)));
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::Input("lambda values must be finite".into()));
    }
    Ok(lambdas
        .par_iter()
        .map(|&lambda| {
            let mut levels = Vec::new();
            for ell in window.ell_min..=window.ell_max {
                for n_r in 0..=window.n_r_max {
                    levels.push(OscillatorLevel { n_r, ell, energy: level_energy(n_r, ell, params, lambda) });
                }
            }
            levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.ell.cmp(&b.ell)).then(a.n_r.cmp(&b.n_r)));
            SpectralFlowRow { lambda, levels, complete_below: completeness_cut(params, lambda, window) }
        })
        .collect())
}

/// max |E_k(λ) − E_k(λ+1)| over the levels that are complete in both
/// windows; +∞ if the two interior multisets differ in size.
pub fn periodicity_defect(params: &HamiltonianParams, lambda: f64, window: &LevelWindow) -> Result<f64> {
    let rows = spectral_flow(&[lambda, lambda + 1.0], params, window)?;
    let cut = rows[0].complete_below.min(rows[1].complete_below) - 1e-9 * params.hbar * params.omega;
    let (a, b) = (rows[0].energies_below(cut), rows[1].energies_below(cut));
    if a.len() != b.len() {
        return Ok(f64::INFINITY);
    }
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
