//! Propagators ⟨r_f,θ_f| e^{−iΔt H_{μ,ν}/ħ} |r_i,θ_i⟩ by spectral summation,
//! by composing time-sliced radial kernels, and by the closed forms available
//! at λ = μ = ν = 0.
//!
//! Times are complex. A [`TimeContour`] maps the real interval Δt to the time
//! actually used: Δt itself, −iτ, or the damped Δt − i|Δt|δ. Every series
//! and integral converges absolutely once Im t < 0.

mod pathint;
mod spectral;
mod wick;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use pathint::{
    assemble_sectors, pathintegral_grid, pathintegral_sector, propagator_pathintegral, propagator_pathintegral_with,
    PathIntegralOptions, PathIntegralValue, SliceKernel,
};
pub use spectral::{
    h_matrix_elements, propagator_closed_free, propagator_closed_oscillator, propagator_direct_sum_oscillator,
    propagator_spectral_free, propagator_spectral_oscillator, spectral_sector,
};
pub use wick::{wick_extrapolate, Extrapolation, WICK_DELTAS};

use crate::bundle::PolarPoint;
use crate::error::{Error, Result};
use crate::hilbert::HamiltonianParams;

/// Smallest |sin ωΔt| accepted on the real contour.
pub const CAUSTIC_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContourKind {
    Real,
    Euclidean,
    Wick,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeContour {
    pub kind: ContourKind,
    #[serde(default)]
    pub delta: f64,
}

impl TimeContour {
    pub fn real() -> Self {
        Self { kind: ContourKind::Real, delta: 0.0 }
    }

    /// Δt is read as the imaginary time τ > 0.
    pub fn euclidean() -> Self {
        Self { kind: ContourKind::Euclidean, delta: 0.0 }
    }

    pub fn wick(delta: f64) -> Result<Self> {
        let c = Self { kind: ContourKind::Wick, delta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ContourKind::Wick if !(self.delta > 0.0 && self.delta.is_finite()) => {
                Err(Error::Input(format!("wick contour needs delta > 0, got {}", self.delta)))
            }
            _ => Ok(()),
        }
    }

    /// Complex time for the interval `delta_t`.
    pub fn apply(&self, delta_t: f64) -> Result<Complex64> {
        self.validate()?;
        if !delta_t.is_finite() || delta_t == 0.0 {
            return Err(Error::Domain(format!("time interval must be finite and nonzero, got {delta_t}")));
        }
        Ok(match self.kind {
            ContourKind::Real => Complex64::new(delta_t, 0.0),
            ContourKind::Euclidean => {
                if delta_t < 0.0 {
                    return Err(Error::Domain(format!("euclidean time must be positive, got {delta_t}")));
                }
                Complex64::new(0.0, -delta_t)
            }
            ContourKind::Wick => Complex64::new(delta_t, -delta_t.abs() * self.delta),
        })
    }

    pub fn is_damped(&self) -> bool {
        self.kind != ContourKind::Real
    }
}

fn default_ell_cutoff() -> usize {
    40
}

/// One propagator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorRequest {
    pub q_i: PolarPoint,
    pub q_f: PolarPoint,
    /// Δt, or τ on the euclidean contour.
    pub delta_t: f64,
    #[serde(default)]
    pub params: HamiltonianParams,
    #[serde(default)]
    pub lambda: f64,
    pub contour: TimeContour,
    #[serde(default = "default_ell_cutoff")]
    pub ell_cutoff: usize,
}

impl PropagatorRequest {
    pub fn new(q_i: PolarPoint, q_f: PolarPoint, delta_t: f64, params: HamiltonianParams, lambda: f64, contour: TimeContour) -> Self {
        Self { q_i, q_f, delta_t, params, lambda, contour, ell_cutoff: default_ell_cutoff() }
    }

    pub fn with_contour(&self, contour: TimeContour) -> Self {
        Self { contour, ..*self }
    }

    pub fn with_ell_cutoff(&self, ell_cutoff: usize) -> Self {
        Self { ell_cutoff, ..*self }
    }

    pub fn time(&self) -> Result<Complex64> {
        self.params.validate()?;
        if !self.lambda.is_finite() {
            return Err(Error::Input("lambda must be finite".into()));
        }
        self.contour.apply(self.delta_t)
    }

    /// θ_f − θ_i.
    pub fn delta_theta(&self) -> f64 {
        self.q_f.theta() - self.q_i.theta()
    }

    /// Angular momenta summed over: |ℓ + round(λ)| ≤ ell_cutoff. Centering on
    /// −round(λ) keeps the window aligned with the spectrum, so λ and λ + 1
    /// use relabeled copies of the same sectors.
    pub fn ell_range(&self) -> std::ops::RangeInclusive<i64> {
        let c = self.lambda.round() as i64;
        let l = self.ell_cutoff as i64;
        -l - c..=l - c
    }
}

/// A propagator value with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorValue {
    pub value: Complex64,
    pub ell_cutoff: usize,
    /// Bound (or estimate, for the direct sum) on the omitted terms.
    pub tail_bound: f64,
}

/// Output record `{request, value_re, value_im, ell_cutoff, tail_bound, contour}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorRecord {
    pub request: PropagatorRequest,
    pub value_re: f64,
    pub value_im: f64,
    pub ell_cutoff: usize,
    pub tail_bound: f64,
    pub contour: TimeContour,
}

impl PropagatorRecord {
    pub fn new(request: &PropagatorRequest, value: &PropagatorValue) -> Self {
        Self {
            request: *request,
            value_re: value.value.re,
            value_im: value.value.im,
            ell_cutoff: value.ell_cutoff,
            tail_bound: value.tail_bound,
            contour: request.contour,
        }
    }
}

/// Parses a JSON-lines batch; blank lines are skipped.
pub fn parse_request_batch(text: &str) -> Result<Vec<PropagatorRequest>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Input(format!("request on line {}: {e}", i + 1)))
        })
        .collect()
}
