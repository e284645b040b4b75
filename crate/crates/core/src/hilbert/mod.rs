//! The configuration-space representation on the plane in polar coordinates:
//! radial grids, angular-momentum modes ψ = f(r) e^{iℓθ}, the √g-weighted
//! inner product and the operators of the H_{μ,ν} family.
//!
//! Derivatives are taken in s = ln r on the logarithmic grid:
//! f′ = f_s / r and f″ = (f_ss − f_s) / r².

mod grid;
mod stencil;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use grid::{GridSpec, RadialGrid, Spacing};

use crate::bundle::{holonomy, DiscretePath, FlatConnection, PolarPoint};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Parameters of H_{μ,ν} with the potential ½mω²r².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonianParams {
    pub mass: f64,
    pub omega: f64,
    pub mu: f64,
    pub nu: f64,
    pub hbar: f64,
}

impl Default for HamiltonianParams {
    fn default() -> Self {
        Self { mass: 1.0, omega: 1.0, mu: 0.0, nu: 0.0, hbar: 1.0 }
    }
}

impl HamiltonianParams {
    pub fn new(mass: f64, omega: f64, mu: f64, nu: f64, hbar: f64) -> Result<Self> {
        let p = Self { mass, omega, mu, nu, hbar };
        p.validate()?;
        Ok(p)
    }

    /// Oscillator with unit mass and ħ.
    pub fn oscillator(omega: f64, mu: f64, nu: f64) -> Self {
        Self { omega, mu, nu, ..Self::default() }
    }

    /// Free particle with unit mass and ħ.
    pub fn free(mu: f64, nu: f64) -> Self {
        Self { omega: 0.0, mu, nu, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.mass, self.omega, self.mu, self.nu, self.hbar].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Input("Hamiltonian parameters must be finite".into()));
        }
        if self.mass <= 0.0 || self.hbar <= 0.0 || self.omega < 0.0 {
            return Err(Error::Input(format!(
                "need mass > 0, hbar > 0, omega >= 0 (got mass={}, hbar={}, omega={})",
                self.mass, self.hbar, self.omega
            )));
        }
        Ok(())
    }

    /// Oscillator length √(ħ/mω); `None` for the free particle.
    pub fn length_scale(&self) -> Option<f64> {
        (self.omega > 0.0).then(|| (self.hbar / (self.mass * self.omega)).sqrt())
    }
}

/// One angular-momentum sector ψ(r, θ) = f(r) e^{iℓθ} sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMode {
    ell: i64,
    samples: Vec<Complex64>,
    grid: Arc<RadialGrid>,
}

impl RadialMode {
    pub fn new(ell: i64, grid: Arc<RadialGrid>, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Input(format!("{} samples for a grid of {} nodes", samples.len(), grid.len())));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("mode samples must be finite".into()));
        }
        Ok(Self { ell, samples, grid })
    }

    /// Samples f at every node.
    pub fn from_fn(ell: i64, grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(ell, grid, samples)
    }

    pub fn ell(&self) -> i64 {
        self.ell
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// ‖ψ‖ under the inner product.
    pub fn norm(&self) -> f64 {
        let s: f64 = self.samples.iter().zip(self.grid.weights()).map(|(f, w)| w * f.norm_sqr()).sum();
        (2.0 * PI * s).sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.with_samples(self.samples.iter().map(|f| f * c).collect())
    }

    /// self − other on the same grid and sector.
    pub fn minus(&self, other: &RadialMode) -> Result<Self> {
        self.check_compatible(other)?;
        if self.ell != other.ell {
            return Err(Error::Input("cannot subtract modes of different angular momentum".into()));
        }
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect()))
    }

    /// max_k |f_k|
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self { ell: self.ell, samples, grid: self.grid.clone() }
    }

    fn check_compatible(&self, other: &RadialMode) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Input("modes live on different grids".into()))
        }
    }

    fn require_nodes(&self, n: usize) -> Result<()> {
        if self.grid.len() < n {
            return Err(Error::Input(format!("differentiation needs at least {n} grid nodes, got {}", self.grid.len())));
        }
        Ok(())
    }

    /// CSV with header `r,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,re,im\n");
        for (r, f) in self.grid.nodes().iter().zip(&self.samples) {
            out.push_str(&format!("{r:.16e},{:.16e},{:.16e}\n", f.re, f.im));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "ell": self.ell,
            "grid": self.grid.spec(),
            "r": self.grid.nodes(),
            "re": self.samples.iter().map(|z| z.re).collect::<Vec<_>>(),
            "im": self.samples.iter().map(|z| z.im).collect::<Vec<_>>(),
        })
    }
}

/// 2π δ_{ℓψ ℓφ} Σ_k w_k ψ*_k φ_k.
pub fn inner_product(psi: &RadialMode, phi: &RadialMode) -> Result<Complex64> {
    psi.check_compatible(phi)?;
    if psi.ell != phi.ell {
        return Ok(ZERO);
    }
    let s: Complex64 = psi
        .samples
        .iter()
        .zip(&phi.samples)
        .zip(psi.grid.weights())
        .map(|((a, b), w)| a.conj() * b * w)
        .sum();
    Ok(2.0 * PI * s)
}

/// p_r ψ = −iħ r^{−1/2} ∂_r (r^{1/2} f) e^{iℓθ} = −iħ (f_s + f/2)/r.
pub fn apply_p_r(psi: &RadialMode, hbar: f64) -> Result<RadialMode> {
    psi.require_nodes(stencil::MIN_SAMPLES)?;
    let h = psi.grid.log_step();
    let fs = stencil::first(&psi.samples, h);
    let k = Complex64::new(0.0, -hbar);
    let out = psi
        .samples
        .iter()
        .zip(&fs)
        .zip(psi.grid.nodes())
        .map(|((f, d), r)| k * (d + 0.5 * f) / r)
        .collect();
    Ok(psi.with_samples(out))
}

fn require_flux_gauge(conn: &FlatConnection) -> Result<()> {
    if conn.has_pure_gauge() {
        return Err(Error::UnsupportedRepresentation(
            "mode operators need the connection in the ħλ dθ gauge (no pure-gauge part)".into(),
        ));
    }
    Ok(())
}

/// p_θ ψ = −iħ(∂_θ + iλ)ψ = ħ(ℓ + λ)ψ.
pub fn apply_p_theta(psi: &RadialMode, conn: &FlatConnection, hbar: f64) -> Result<RadialMode> {
    require_flux_gauge(conn)?;
    Ok(psi.scaled(Complex64::new(hbar * (psi.ell as f64 + conn.lambda()), 0.0)))
}

/// H_{μ,ν} ψ for the flux connection ħλ dθ:
/// −ħ²/(2m r²) [f_ss + 4iν f_s − (4μ² + 4ν² + (ℓ+λ)²) f] + ½mω²r² f.
pub fn apply_hamiltonian(params: &HamiltonianParams, conn: &FlatConnection, psi: &RadialMode) -> Result<RadialMode> {
    params.validate()?;
    require_flux_gauge(conn)?;
    psi.require_nodes(stencil::MIN_SAMPLES)?;
    let h = psi.grid.log_step();
    let fs = stencil::first(&psi.samples, h);
    let fss = stencil::second(&psi.samples, h);
    let kin = -params.hbar * params.hbar / (2.0 * params.mass);
    let l = psi.ell as f64 + conn.lambda();
    let centrifugal = 4.0 * params.mu * params.mu + 4.0 * params.nu * params.nu + l * l;
    let drift = Complex64::new(0.0, 4.0 * params.nu);
    let pot = 0.5 * params.mass * params.omega * params.omega;
    let out = (0..psi.samples.len())
        .map(|k| {
            let r = psi.grid.nodes()[k];
            let f = psi.samples[k];
            kin / (r * r) * (fss[k] + drift * fs[k] - centrifugal * f) + pot * r * r * f
        })
        .collect();
    Ok(psi.with_samples(out))
}

/// Δ_{μ,ν} ψ for g = r²: the three terms of the quantum correction,
/// (ħ²/2m)(4μ²/r²) f + (ħ²ν²/2m)(4/r²) f + (ħν/2m)[w p_r + p_r w] ψ with
/// w = g⁻¹ ∂_r g = 2/r. The product p_r(wψ) is expanded as w p_rψ − iħ w′ψ,
/// w being known in closed form.
pub fn quantum_correction(params: &HamiltonianParams, psi: &RadialMode) -> Result<RadialMode> {
    params.validate()?;
    let pr = apply_p_r(psi, params.hbar)?;
    let (hb, m, mu, nu) = (params.hbar, params.mass, params.mu, params.nu);
    let out = (0..psi.samples.len())
        .map(|k| {
            let r = psi.grid.nodes()[k];
            let f = psi.samples[k];
            let w = 2.0 / r;
            let dw = -2.0 / (r * r);
            let metric = hb * hb / (2.0 * m) * 4.0 * mu * mu / (r * r) * f;
            let log_metric = hb * hb * nu * nu / (2.0 * m) * 4.0 / (r * r) * f;
            let symmetrized = hb * nu / (2.0 * m) * (2.0 * w * pr.samples[k] + Complex64::new(0.0, -hb) * dw * f);
            metric + log_metric + symmetrized
        })
        .collect();
    Ok(psi.with_samples(out))
}

/// Boundary values of r|f|²: the r → 0 limit estimated from the local power
/// law r|f|² ≈ A r^p of the two innermost nodes (0 if p > 0, the value
/// itself if p ≈ 0, +∞ if p < 0), and the value at r_max.
pub fn surface_term(psi: &RadialMode) -> (f64, f64) {
    let r = psi.grid.nodes();
    let n = r.len();
    let flux = |k: usize| r[k] * psi.samples[k].norm_sqr();
    let at_infinity = flux(n - 1);
    let (f0, f1) = (flux(0), flux(1.min(n - 1)));
    let at_origin = if f0 == 0.0 {
        0.0
    } else if n < 2 || f1 == 0.0 {
        f0
    } else {
        let p = (f1 / f0).ln() / (r[1] / r[0]).ln();
        if p > 1e-3 {
            0.0
        } else if p < -1e-3 {
            f64::INFINITY
        } else {
            f0
        }
    };
    (at_origin, at_infinity)
}

/// Covariant probability current of a mode; both components are independent
/// of θ and stored as real samples with ℓ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityCurrent {
    /// J_r = (ħ/m)[Im(f* f′) + 2ν|f|²/r]
    pub radial: RadialMode,
    /// J_θ = (ħ/m)(ℓ + λ)|f|²
    pub angular: RadialMode,
}

pub fn probability_current(psi: &RadialMode, params: &HamiltonianParams, conn: &FlatConnection) -> Result<ProbabilityCurrent> {
    params.validate()?;
    require_flux_gauge(conn)?;
    psi.require_nodes(stencil::MIN_SAMPLES)?;
    // Im(f* f_s) + 2ν|f|² = Im(g* g_s) with g = r^{2iν} f, which avoids
    // cancelling two O(|f|²) terms when f carries the phase r^{−2iν}.
    let r = psi.grid.nodes();
    let g: Vec<Complex64> = psi.samples.iter().zip(r).map(|(f, r)| f * Complex64::from_polar(1.0, 2.0 * params.nu * r.ln())).collect();
    let gs = stencil::first(&g, psi.grid.log_step());
    let c = params.hbar / params.mass;
    let l = psi.ell as f64 + conn.lambda();
    let mut jr = Vec::with_capacity(gs.len());
    let mut jt = Vec::with_capacity(gs.len());
    for k in 0..gs.len() {
        jr.push(Complex64::new(c * (g[k].conj() * gs[k]).im / r[k], 0.0));
        jt.push(Complex64::new(c * l * psi.samples[k].norm_sqr(), 0.0));
    }
    Ok(ProbabilityCurrent {
        radial: RadialMode { ell: 0, samples: jr, grid: psi.grid.clone() },
        angular: RadialMode { ell: 0, samples: jt, grid: psi.grid.clone() },
    })
}

/// Covariant divergence (1/r)∂_r(r J_r) + (1/r²)∂_θ J_θ; the angular term
/// vanishes because the current does not depend on θ.
pub fn current_divergence(current: &ProbabilityCurrent) -> Vec<f64> {
    let grid = current.radial.grid();
    let flux: Vec<Complex64> = current.radial.samples.iter().zip(grid.nodes()).map(|(j, r)| j * r).collect();
    let d = stencil::first(&flux, grid.log_step());
    d.iter().zip(grid.nodes()).map(|(v, r)| v.re / (r * r)).collect()
}

/// ⟨q|p⟩ = (2πħ)⁻¹ r^{−1/2} Ω[P(q₀→q)] e^{i q·p/ħ}, with h(p) = 1 and the base
/// phase fixed to e^{i q₀·p/ħ}.
pub fn momentum_wavefunction(
    q: &PolarPoint,
    p: (f64, f64),
    conn: &FlatConnection,
    base: &PolarPoint,
    path: &DiscretePath,
    hbar: f64,
) -> Result<Complex64> {
    if path.start() != *base || path.end() != *q {
        return Err(Error::Input("path must run from the base point to q".into()));
    }
    if !(hbar > 0.0) {
        return Err(Error::Input(format!("hbar must be > 0, got {hbar}")));
    }
    let (x, y) = q.to_cartesian();
    let plane = Complex64::cis((x * p.0 + y * p.1) / hbar);
    Ok(holonomy(conn, path) * plane / (2.0 * PI * hbar * q.r().sqrt()))
}
