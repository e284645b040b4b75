//! Spectral sums and closed forms.
//!
//! The oscillator ℓ-sector is the Hille–Hardy resummation of the Laguerre
//! eigen-sum. With x = u_f², y = u_i², z = e^{−2iωt} and
//! ζ = 2u_f u_i e^{−iωt}/(1−z) = u_f u_i/(i sin ωt) it reads
//!
//!   (mω/πħ)(u_i/u_f)^{2iν} e^{−iωt(1+α)} (u_f u_i)^α (1−z)^{−1−α}
//!     · exp(−(x+y)/2 − (x+y)z/(1−z)) · (ζ/2)^{−α} I_α(ζ).
//!
//! (ζ/2)^{−α} I_α(ζ) is even in ζ, so ζ is taken in the right half-plane and
//! I_α enters only through the scaled e^{−ζ} I_α(ζ). On the real contour this
//! is the familiar e^{−iπα/2} J_α(u_f u_i / sin ωt) form.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{PropagatorRequest, PropagatorValue, TimeContour, CAUSTIC_GUARD};
use crate::bundle::PolarPoint;
use crate::error::{Error, Result};
use crate::hilbert::HamiltonianParams;
use crate::models::{alpha_abs, oscillator_amplitude};
use crate::specfun::{bessel_i_scaled_c, ln_gamma_pos};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// 1 − e^{w} without cancellation for small w.
fn one_minus_exp(w: Complex64) -> Complex64 {
    let (a, b) = (w.re, w.im);
    let half = (0.5 * b).sin();
    let em1 = a.exp_m1() * b.cos() - 2.0 * half * half;
    -Complex64::new(em1, a.exp() * b.sin())
}

/// Upper bound on Σ_{j≥0} 2 A ρ^{a0+j}/Γ(a0+j+1), the two ℓ-tails beyond the
/// cutoff when every omitted order is at least a0 and each term is bounded
/// by A ρ^α/Γ(α+1).
fn tail_bound(a: f64, rho: f64, a0: f64) -> f64 {
    if a == 0.0 || rho == 0.0 {
        return 0.0;
    }
    let q = rho / (a0 + 1.0);
    if q >= 1.0 || !a.is_finite() {
        return f64::INFINITY;
    }
    2.0 * a * (a0 * rho.ln() - ln_gamma_pos(a0 + 1.0)).exp() / (1.0 - q)
}

/// Smallest order left out by the window of `req`.
fn first_omitted_order(req: &PropagatorRequest) -> f64 {
    req.ell_cutoff as f64 + 1.0 - (req.lambda - req.lambda.round()).abs()
}

fn require_off_origin(req: &PropagatorRequest) -> Result<()> {
    if req.q_i.r() <= 0.0 || req.q_f.r() <= 0.0 {
        return Err(Error::Domain("propagators are defined on the punctured plane".into()));
    }
    Ok(())
}

/// The per-sector ingredients: term(α) = exp(base + α·slope) · e^{−ζ}I_α(ζ).
struct SectorSeries {
    base: Complex64,
    slope: Complex64,
    zeta: Complex64,
    /// Bound prefactor A with |term(α)| ≤ A (|ζ|/2)^α / Γ(α+1).
    bound: f64,
}

impl SectorSeries {
    fn term(&self, alpha: f64) -> Complex64 {
        (self.base + alpha * self.slope).exp() * bessel_i_scaled_c(alpha, self.zeta)
    }

    fn sum(&self, req: &PropagatorRequest) -> PropagatorValue {
        let p = &req.params;
        let dtheta = req.delta_theta();
        let mut value = Complex64::new(0.0, 0.0);
        for ell in req.ell_range() {
            let alpha = alpha_abs(ell, req.lambda, p.mu);
            value += Complex64::from_polar(1.0, ell as f64 * dtheta) * self.term(alpha);
        }
        let tail = tail_bound(self.bound, 0.5 * self.zeta.norm(), first_omitted_order(req));
        PropagatorValue { value, ell_cutoff: req.ell_cutoff, tail_bound: tail }
    }
}

fn oscillator_series(req: &PropagatorRequest) -> Result<SectorSeries> {
    let t = req.time()?;
    require_off_origin(req)?;
    let p = &req.params;
    if p.omega == 0.0 {
        return Err(Error::FreeParticle("the oscillator sum needs omega > 0".into()));
    }
    let wt = p.omega * t;
    if req.contour.kind == super::ContourKind::Real {
        let s = wt.re.sin().abs();
        if s < CAUSTIC_GUARD {
            return Err(Error::Caustic { value: s, guard: CAUSTIC_GUARD });
        }
    }
    let one_minus_z = one_minus_exp(-2.0 * I * wt);
    if one_minus_z.norm() == 0.0 {
        return Err(Error::Caustic { value: 0.0, guard: CAUSTIC_GUARD });
    }
    let k = p.mass * p.omega / p.hbar;
    let (uf, ui) = (req.q_f.r() * k.sqrt(), req.q_i.r() * k.sqrt());
    let (x, y) = (uf * uf, ui * ui);
    let log_1mz = one_minus_z.ln();
    let z = Complex64::new(1.0, 0.0) - one_minus_z;
    let mut zeta = 2.0 * uf * ui * (-I * wt).exp() / one_minus_z;
    if zeta.re < 0.0 {
        zeta = -zeta;
    }
    let e = -I * wt - log_1mz - (x + y) * (0.5 + z / one_minus_z);
    let phase = 2.0 * p.nu * (ui / uf).ln();
    let base = (k / PI).ln() + I * phase + e + zeta;
    let slope = (2.0 * uf * ui).ln() - log_1mz - zeta.ln() - I * wt;
    let bound = k / PI * e.re.exp() * zeta.re.abs().exp();
    Ok(SectorSeries { base, slope, zeta, bound })
}

fn require_damped(req: &PropagatorRequest, what: &str) -> Result<()> {
    if !req.contour.is_damped() {
        return Err(Error::Contour(format!(
            "{what} does not converge absolutely on the real contour; use the euclidean or wick contour"
        )));
    }
    Ok(())
}

fn free_series(req: &PropagatorRequest) -> Result<SectorSeries> {
    let t = req.time()?;
    require_off_origin(req)?;
    require_damped(req, "the free spectral integral")?;
    let p = &req.params;
    if p.omega != 0.0 {
        return Err(Error::Input("the free spectral form needs omega = 0".into()));
    }
    let (rf, ri) = (req.q_f.r(), req.q_i.r());
    let denom = I * p.hbar * t;
    let zeta = p.mass * rf * ri / denom;
    let pref = p.mass / (2.0 * PI * denom);
    let gauss = -p.mass * (rf - ri) * (rf - ri) / (2.0 * denom);
    let phase = 2.0 * p.nu * (ri / rf).ln();
    let base = pref.ln() + gauss + I * phase;
    // |e^{−ζ} I_α(ζ)| ≤ (|ζ|/2)^α / Γ(α+1) for Re ζ ≥ 0
    let bound = pref.norm() * gauss.re.exp();
    Ok(SectorSeries { base, slope: Complex64::new(0.0, 0.0), zeta, bound })
}

/// Sum of the resummed oscillator sectors over the window of `req`, with the
/// certified bound on the omitted sectors.
pub fn propagator_spectral_oscillator(req: &PropagatorRequest) -> Result<PropagatorValue> {
    Ok(oscillator_series(req)?.sum(req))
}

/// Free-particle propagator as an ℓ-sum of the Gaussian–Bessel integral
/// ∫ p dp e^{−ip²t/2mħ} J_α(r_f p/ħ) J_α(r_i p/ħ) = (mħ/it) e^{−m(r_f²+r_i²)/2iħt} I_α(m r_f r_i/iħt).
pub fn propagator_spectral_free(req: &PropagatorRequest) -> Result<PropagatorValue> {
    Ok(free_series(req)?.sum(req))
}

/// Radial kernel R_ℓ = 2π√(r_f r_i) K_ℓ of one angular-momentum sector, for
/// the oscillator or (ω = 0, damped contour) the free particle. These
/// compose under ∫ dr.
pub fn spectral_sector(req: &PropagatorRequest, ell: i64) -> Result<Complex64> {
    let series = if req.params.omega > 0.0 { oscillator_series(req)? } else { free_series(req)? };
    let alpha = alpha_abs(ell, req.lambda, req.params.mu);
    Ok(2.0 * PI * (req.q_f.r() * req.q_i.r()).sqrt() * series.term(alpha))
}

/// Σ_{n_r ≤ n_r_cutoff, ℓ in window} e^{−iE t/ħ} ψ(q_f) ψ*(q_i), with a
/// geometric estimate of the omitted shells.
pub fn propagator_direct_sum_oscillator(req: &PropagatorRequest, n_r_cutoff: usize) -> Result<PropagatorValue> {
    let t = req.time()?;
    require_off_origin(req)?;
    require_damped(req, "the eigenstate double sum")?;
    let p = &req.params;
    if p.omega == 0.0 {
        return Err(Error::FreeParticle("the eigenstate sum needs omega > 0".into()));
    }
    let (rf, ri) = (req.q_f.r(), req.q_i.r());
    let dtheta = req.delta_theta();
    let q = (2.0 * p.omega * t.im).exp();
    let mut value = Complex64::new(0.0, 0.0);
    let mut last_shell = 0.0;
    let mut edge = 0.0;
    let range = req.ell_range();
    let (lo, hi) = (*range.start(), *range.end());
    for ell in range {
        let angular = Complex64::from_polar(1.0, ell as f64 * dtheta);
        for n in 0..=n_r_cutoff {
            let alpha = alpha_abs(ell, req.lambda, p.mu);
            let energy = p.hbar * p.omega * (2.0 * n as f64 + 1.0 + alpha);
            let term = (-I * energy * t / p.hbar).exp()
                * oscillator_amplitude(n, ell, p, req.lambda, rf)
                * oscillator_amplitude(n, ell, p, req.lambda, ri).conj()
                * angular;
            value += term;
            if n == n_r_cutoff {
                last_shell += term.norm();
            }
            if ell == lo || ell == hi {
                edge += term.norm();
            }
        }
    }
    let sq = q.sqrt();
    let tail = last_shell * q / (1.0 - q) + edge * sq / (1.0 - sq);
    Ok(PropagatorValue { value, ell_cutoff: req.ell_cutoff, tail_bound: tail })
}

/// Mehler kernel (mω/2iπħ sin ωt) exp{(imω/2ħ sin ωt)[cos ωt (r_f²+r_i²) − 2 r_f r_i cos(θ_f−θ_i)]},
/// valid at λ = μ = ν = 0.
pub fn propagator_closed_oscillator(
    q_f: &PolarPoint,
    q_i: &PolarPoint,
    delta_t: f64,
    contour: TimeContour,
    params: &HamiltonianParams,
) -> Result<Complex64> {
    params.validate()?;
    if params.omega == 0.0 {
        return Err(Error::FreeParticle("the Mehler kernel needs omega > 0".into()));
    }
    if params.mu != 0.0 || params.nu != 0.0 {
        return Err(Error::Input("the closed oscillator form holds only at mu = nu = 0".into()));
    }
    let wt = params.omega * contour.apply(delta_t)?;
    let s = wt.sin();
    let guard = if contour.is_damped() { 0.0 } else { CAUSTIC_GUARD };
    if s.norm() <= guard || s.norm() == 0.0 {
        return Err(Error::Caustic { value: s.norm(), guard: CAUSTIC_GUARD });
    }
    let (rf, ri) = (q_f.r(), q_i.r());
    let c = params.mass * params.omega / params.hbar;
    let quad = wt.cos() * (rf * rf + ri * ri) - 2.0 * rf * ri * (q_f.theta() - q_i.theta()).cos();
    Ok(c / (2.0 * I * PI * s) * (I * c * quad / (2.0 * s)).exp())
}

/// m/(2iπħt) · exp(−m|x_f − x_i|²/(2iħt)).
pub fn propagator_closed_free(
    q_f: &PolarPoint,
    q_i: &PolarPoint,
    delta_t: f64,
    contour: TimeContour,
    params: &HamiltonianParams,
) -> Result<Complex64> {
    params.validate()?;
    let t = contour.apply(delta_t)?;
    let (rf, ri) = (q_f.r(), q_i.r());
    let d2 = rf * rf + ri * ri - 2.0 * rf * ri * (q_f.theta() - q_i.theta()).cos();
    let denom = I * params.hbar * t;
    Ok(params.mass / (2.0 * PI * denom) * (-params.mass * d2 / (2.0 * denom)).exp())
}

/// h(p, r) = (1/2m)[p² + 4ħνp/r + (ħ²/r²)((ℓ+λ)² − ¼ + 4(μ²+ν²) − 2iν)] + ½mω²r².
pub fn h_matrix_elements(p: f64, ell: i64, r: f64, params: &HamiltonianParams, lambda: f64) -> Complex64 {
    let HamiltonianParams { mass, omega, mu, nu, hbar } = *params;
    let l = ell as f64 + lambda;
    let centrifugal = Complex64::new(l * l - 0.25 + 4.0 * (mu * mu + nu * nu), -2.0 * nu) * (hbar * hbar / (r * r));
    (centrifugal + p * p + 4.0 * hbar * nu * p / r) / (2.0 * mass) + 0.5 * mass * omega * omega * r * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_j_real;

    fn pt(r: f64, th: f64) -> PolarPoint {
        PolarPoint::new(r, th).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn one_minus_exp_small_argument() {
        let w = Complex64::new(1e-12, -3e-12);
        let d = one_minus_exp(w) + w;
        assert!(d.norm() < 1e-23);
    }

    #[test]
    fn real_contour_matches_bessel_j_form() {
        let p = HamiltonianParams::oscillator(1.3, 0.2, 0.1);
        let (lam, t) = (0.4, 0.9);
        let req = PropagatorRequest::new(pt(0.8, 0.3), pt(1.1, 2.0), t, p, lam, TimeContour::real()).with_ell_cutoff(30);
        let got = propagator_spectral_oscillator(&req).unwrap();
        let k = p.mass * p.omega / p.hbar;
        let (uf, ui) = (1.1 * k.sqrt(), 0.8 * k.sqrt());
        let wt = p.omega * t;
        let pref = k / (2.0 * I * PI * wt.sin())
            * Complex64::from_polar(1.0, 2.0 * p.nu * (ui / uf).ln())
            * (0.5 * I * (uf * uf + ui * ui) / wt.tan()).exp();
        let mut want = Complex64::new(0.0, 0.0);
        for ell in req.ell_range() {
            let a = alpha_abs(ell, lam, p.mu);
            want += Complex64::from_polar(1.0, ell as f64 * req.delta_theta() - 0.5 * PI * a)
                * bessel_j_real(a, uf * ui / wt.sin());
        }
        want *= pref;
        assert!(rel(got.value, want) < 1e-11, "{} vs {}", got.value, want);
        assert!(got.tail_bound < 1e-12);
    }

    #[test]
    fn mehler_agreement_on_euclidean_contour() {
        let p = HamiltonianParams::oscillator(0.8, 0.0, 0.0);
        for &(tau, rf, ri, dth) in &[(0.3, 1.0, 0.5, 0.7), (1.5, 2.0, 1.2, 3.0), (4.0, 0.3, 0.9, 5.5)] {
            let (qf, qi) = (pt(rf, dth), pt(ri, 0.0));
            let req = PropagatorRequest::new(qi, qf, tau, p, 0.0, TimeContour::euclidean());
            let got = propagator_spectral_oscillator(&req).unwrap();
            let want = propagator_closed_oscillator(&qf, &qi, tau, TimeContour::euclidean(), &p).unwrap();
            assert!(rel(got.value, want) < 1e-12, "tau {tau}: {} vs {want}", got.value);
            assert!(want.im.abs() < 1e-14 * want.re.abs());
        }
    }

    #[test]
    fn direct_sum_matches_resummation() {
        let p = HamiltonianParams::oscillator(1.0, 0.2, 0.1);
        let req = PropagatorRequest::new(pt(0.7, 0.2), pt(1.2, 1.5), 1.0, p, 0.4, TimeContour::euclidean()).with_ell_cutoff(30);
        let a = propagator_spectral_oscillator(&req).unwrap();
        let b = propagator_direct_sum_oscillator(&req, 60).unwrap();
        assert!(rel(b.value, a.value) < 1e-10, "{} vs {}", b.value, a.value);
        assert!(b.tail_bound < 1e-10 * a.value.norm());
        assert!(matches!(
            propagator_direct_sum_oscillator(&req.with_contour(TimeContour::real()), 10),
            Err(Error::Contour(_))
        ));
    }

    #[test]
    fn caustic_guard() {
        let p = HamiltonianParams::oscillator(1.0, 0.0, 0.0);
        let q = pt(1.0, 0.0);
        let req = PropagatorRequest::new(q, q, PI + 1e-4, p, 0.0, TimeContour::real());
        assert!(matches!(propagator_spectral_oscillator(&req), Err(Error::Caustic { .. })));
        assert!(propagator_spectral_oscillator(&req.with_contour(TimeContour::wick(1e-2).unwrap())).is_ok());
        assert!(matches!(propagator_closed_oscillator(&q, &q, PI, TimeContour::real(), &p), Err(Error::Caustic { .. })));
    }

    #[test]
    fn free_heat_kernel_diagonal() {
        let p = HamiltonianParams::free(0.0, 0.0);
        let q = pt(1.3, 2.0);
        let req = PropagatorRequest::new(q, q, 0.4, p, 0.0, TimeContour::euclidean()).with_ell_cutoff(60);
        let got = propagator_spectral_free(&req).unwrap();
        let want = p.mass / (2.0 * PI * p.hbar * 0.4);
        assert!((got.value - want).norm() < 1e-12 * want, "{}", got.value);
        assert!(got.tail_bound < 1e-10);
    }

    #[test]
    fn free_sum_matches_gaussian_on_wick_contour() {
        let p = HamiltonianParams::free(0.0, 0.0);
        let (qf, qi) = (pt(0.9, 1.0), pt(0.5, 0.2));
        let c = TimeContour::wick(0.3).unwrap();
        let req = PropagatorRequest::new(qi, qf, 0.8, p, 0.0, c).with_ell_cutoff(60);
        let got = propagator_spectral_free(&req).unwrap();
        let want = propagator_closed_free(&qf, &qi, 0.8, c, &p).unwrap();
        assert!(rel(got.value, want) < 1e-12);
    }

    #[test]
    fn doubling_cutoff_stays_within_bound() {
        let p = HamiltonianParams::oscillator(1.0, 0.3, 0.2);
        let req = PropagatorRequest::new(pt(1.5, 0.0), pt(2.0, 1.0), 0.6, p, 0.7, TimeContour::wick(0.01).unwrap())
            .with_ell_cutoff(6);
        let a = propagator_spectral_oscillator(&req).unwrap();
        let b = propagator_spectral_oscillator(&req.with_ell_cutoff(12)).unwrap();
        assert!(a.tail_bound.is_finite());
        assert!((a.value - b.value).norm() <= a.tail_bound);
    }

    #[test]
    fn h_elements() {
        let p = HamiltonianParams::default();
        let h = h_matrix_elements(0.7, 0, 1.3, &p, 0.0);
        let want = (0.49 - 0.25 / 1.69) / 2.0 + 0.5 * 1.69;
        assert!((h - want).norm() < 1e-15);
        let free = HamiltonianParams::free(0.2, 0.3);
        let far = h_matrix_elements(1.1, 2, 1e8, &free, 0.5);
        assert!((far - 0.605).norm() < 1e-8);
        // imaginary part: −ħ²ν/(m r²)
        let q = HamiltonianParams::oscillator(1.0, 0.1, 0.3);
        let h = h_matrix_elements(0.4, 1, 0.5, &q, 0.2);
        assert!((h.im + 0.3 / 0.25).abs() < 1e-14);
    }
}
