//! Special functions: Γ, Bessel J of real order, the exponentially scaled
//! modified Bessel function of complex argument, and generalized Laguerre
//! polynomials.
//!
//! Everything here is a pure function of its arguments.

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A Bessel order: finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RealOrder(f64);

impl RealOrder {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Domain(format!("Bessel order must be finite and >= 0, got {value}")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RealOrder {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

fn lanczos_sum(z: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

/// Γ(x) for x > 0, relative error around 1e-15.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_fn needs a finite x > 0, got {x}")));
    }
    Ok(gamma_pos(x))
}

pub(crate) fn gamma_pos(x: f64) -> f64 {
    if x.fract() == 0.0 && x <= 24.0 {
        // exact factorial while (x-1)! still fits the mantissa
        return (1..x as u64).fold(1.0, |acc, k| acc * k as f64);
    }
    if x < 0.5 {
        return gamma_pos(x + 1.0) / x;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power so that t^(z+1/2) does not overflow before Γ does
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * std::f64::consts::PI).sqrt() * half * ((-t).exp() * half) * lanczos_sum(z)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma needs a finite x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_pos(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Bessel function of the first kind J_order(x) for x ≥ 0.
pub fn bessel_j(order: RealOrder, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("bessel_j needs a finite x >= 0, got {x}")));
    }
    Ok(bessel_j_real(order.0, x))
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub(crate) fn bessel_j_real(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= 4.0 || 0.25 * x * x <= nu + 1.0 {
        j_series(nu, x)
    } else {
        j_miller(nu, x)
    }
}

fn j_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut acc = Compensated::default();
    acc.add(term);
    let mut k = 1.0;
    loop {
        term *= q / (k * (nu + k));
        acc.add(term);
        if term.abs() <= 1e-17 * acc.value().abs() || k > 500.0 {
            break;
        }
        k += 1.0;
    }
    let pre = if nu == 0.0 { 1.0 } else { (nu * (0.5 * x).ln() - ln_gamma_pos(nu + 1.0)).exp() };
    pre * acc.value()
}

/// Starting order for backward recurrence: past the turning point by enough
/// that the Airy-type decay there is far below double precision.
fn start_order(nu: f64, x: f64) -> usize {
    (nu.max(x) + 30.0 + 15.0 * x.cbrt()).ceil() as usize
}

/// Backward recurrence J_{m-1} = (2m/x) J_m − J_{m+1}, normalized with the
/// Neumann sum (x/2)^{ν0} = Σ_k c_k J_{ν0+2k}(x), ν0 = frac(ν).
fn j_miller(nu: f64, x: f64) -> f64 {
    let n = nu.floor();
    let nu0 = nu - n;
    let n = n as usize;
    let top = start_order(nu, x);

    // c_k for the Neumann sum: c_0 = Γ(ν0+1), c_k = (ν0+2k) Γ(ν0+k)/k!
    let g0 = gamma_pos(nu0 + 1.0);
    let coeff = |k: usize, g: f64| if k == 0 { g0 } else { (nu0 + 2.0 * k as f64) * g };

    // Γ(ν0+k)/k! for k = top/2 computed up front via logs, then walked down.
    let kmax = top / 2;
    let mut g = if kmax == 0 {
        0.0
    } else {
        (ln_gamma_pos(nu0 + kmax as f64) - ln_gamma_pos(kmax as f64 + 1.0)).exp()
    };

    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut sum = 0.0;
    let mut wanted = 0.0;
    let mut m = top;
    loop {
        if m % 2 == 0 {
            let k = m / 2;
            sum += coeff(k, g) * j_cur;
            if k >= 2 {
                // Γ(ν0+k-1)/(k-1)! = Γ(ν0+k)/k! · k/(ν0+k-1)
                g *= k as f64 / (nu0 + k as f64 - 1.0);
            }
        }
        if m == n {
            wanted = j_cur;
        }
        if m == 0 {
            break;
        }
        let j_prev = 2.0 * (nu0 + m as f64) / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        m -= 1;
        if j_cur.abs() > 1e200 {
            j_cur *= 1e-200;
            j_next *= 1e-200;
            sum *= 1e-200;
            wanted *= 1e-200;
        }
    }
    wanted * (0.5 * x).powf(nu0) / sum
}

/// Exponentially scaled modified Bessel function e^{−z} I_ν(z) for ν ≥ 0 and
/// Re z ≥ 0, principal branch.
pub fn bessel_i_scaled(order: RealOrder, z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() || z.re < 0.0 {
        return Err(Error::Domain(format!("bessel_i_scaled needs Re z >= 0, got {z}")));
    }
    Ok(bessel_i_scaled_c(order.0, z))
}

pub(crate) fn bessel_i_scaled_c(nu: f64, z: Complex64) -> Complex64 {
    let az = z.norm();
    if az == 0.0 {
        return if nu == 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    if az <= 2.0 || 0.25 * az * az <= nu + 1.0 {
        i_series(nu, z)
    } else if az >= (nu * nu).max(35.0) {
        i_asymptotic(nu, z)
    } else {
        i_miller(nu, z)
    }
}

fn i_series(nu: f64, z: Complex64) -> Complex64 {
    let q = 0.25 * z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut comp = Complex64::new(0.0, 0.0);
    let mut k = 1.0;
    loop {
        term *= q / (k * (nu + k));
        let t = sum + term;
        // Neumaier compensation, componentwise
        comp.re += if sum.re.abs() >= term.re.abs() { (sum.re - t.re) + term.re } else { (term.re - t.re) + sum.re };
        comp.im += if sum.im.abs() >= term.im.abs() { (sum.im - t.im) + term.im } else { (term.im - t.im) + sum.im };
        sum = t;
        if term.norm() <= 1e-17 * sum.norm() || k > 1000.0 {
            break;
        }
        k += 1.0;
    }
    let log_pre = if nu == 0.0 {
        -z
    } else {
        nu * (0.5 * z).ln() - ln_gamma_pos(nu + 1.0) - z
    };
    log_pre.exp() * (sum + comp)
}

fn i_asymptotic(nu: f64, z: Complex64) -> Complex64 {
    let mu4 = 4.0 * nu * nu;
    let mut term = Complex64::new(1.0, 0.0);
    let mut alt = term; // Σ (−1)^k a_k / z^k
    let mut plain = term; // Σ a_k / z^k
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu4 - odd * odd) / (8.0 * kf * z);
        let size = term.norm();
        if size > last {
            break;
        }
        last = size;
        if k % 2 == 1 {
            alt -= term;
        } else {
            alt += term;
        }
        plain += term;
        if size < 1e-17 {
            break;
        }
    }
    let root = (2.0 * std::f64::consts::PI * z).sqrt();
    let i = Complex64::new(0.0, 1.0);
    let sign = if z.im >= 0.0 { 1.0 } else { -1.0 };
    let reflected = sign * i * (sign * i * std::f64::consts::PI * nu).exp() * (-2.0 * z).exp() * plain;
    (alt + reflected) / root
}

/// Backward recurrence I_{m-1} = (2m/z) I_m + I_{m+1}, normalized with
/// e^z (z/2)^{ν0} = Σ_k c_k I_{ν0+k}(z).
fn i_miller(nu: f64, z: Complex64) -> Complex64 {
    let n = nu.floor();
    let nu0 = nu - n;
    let n = n as usize;
    let top = start_order(nu, z.norm());

    // c_0 = Γ(ν0+1); c_k = 2 Γ(ν0+1) (ν0+k) e_k with e_1 = 1,
    // e_{k+1} = e_k (2ν0+k)/(k+1), i.e. e_k = Γ(2ν0+k)/(k! Γ(2ν0+1)).
    let g0 = gamma_pos(nu0 + 1.0);
    let ln_e_top = if nu0 == 0.0 {
        -(top as f64).ln()
    } else {
        ln_gamma_pos(2.0 * nu0 + top as f64) - ln_gamma_pos(top as f64 + 1.0) - ln_gamma_pos(2.0 * nu0 + 1.0)
    };
    let mut e = ln_e_top.exp();

    let mut i_next = Complex64::new(0.0, 0.0);
    let mut i_cur = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut wanted = Complex64::new(0.0, 0.0);
    let mut m = top;
    loop {
        let c = if m == 0 { g0 } else { 2.0 * g0 * (nu0 + m as f64) * e };
        sum += c * i_cur;
        if m >= 2 {
            // e_{m-1} = e_m · m / (2ν0 + m − 1)
            e *= m as f64 / (2.0 * nu0 + m as f64 - 1.0);
        }
        if m == n {
            wanted = i_cur;
        }
        if m == 0 {
            break;
        }
        let i_prev = 2.0 * (nu0 + m as f64) / z * i_cur + i_next;
        i_next = i_cur;
        i_cur = i_prev;
        m -= 1;
        if i_cur.norm() > 1e200 {
            i_cur *= 1e-200;
            i_next *= 1e-200;
            sum *= 1e-200;
            wanted *= 1e-200;
        }
    }
    let pow = if nu0 == 0.0 { Complex64::new(1.0, 0.0) } else { (nu0 * (0.5 * z).ln()).exp() };
    // num-complex divides through |sum|², so bring both to unit scale first
    let scale = sum.norm();
    (wanted / scale) * pow / (sum / scale)
}

/// Generalized Laguerre polynomial L^α_n(x) by the three-term recurrence.
pub fn laguerre(alpha: f64, n: usize, x: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= -1.0 {
        return Err(Error::Domain(format!("laguerre needs alpha > -1, got {alpha}")));
    }
    Ok(laguerre_unchecked(alpha, n, x))
}

pub(crate) fn laguerre_unchecked(alpha: f64, n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(nu: f64, x: f64) -> f64 {
        bessel_j(RealOrder::new(nu).unwrap(), x).unwrap()
    }

    #[test]
    fn gamma_reference_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((gamma_fn(0.5).unwrap() / sqrt_pi - 1.0).abs() < 1e-14);
        // 40-digit reference: Γ(3.7) = 4.17065178379660316539...
        assert!((gamma_fn(3.7).unwrap() / 4.170_651_783_796_603_2 - 1.0).abs() < 1e-13);
        assert!((gamma_fn(11.0).unwrap() - 3_628_800.0).abs() < 1e-8);
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(-2.5), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn bessel_reference_values() {
        assert_eq!(j(0.0, 0.0), 1.0);
        assert_eq!(j(2.0, 0.0), 0.0);
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!((j(0.5, half_pi) - 2.0 / std::f64::consts::PI).abs() < 1e-14);
        // 40-digit references
        assert!((j(1.0, 2.0) - 0.576_724_807_756_873_4).abs() < 1e-14);
        assert!((j(2.5, 7.3) + 0.300_849_431_587_499_8).abs() < 1e-13);
        assert!((j(60.0, 50.0) - 0.001_048_519_599_531_418_1).abs() < 1e-13);
        assert!((j(0.3, 45.0) - 0.115_510_074_053_207_22).abs() < 1e-13);
    }

    #[test]
    fn bessel_rejects_bad_arguments() {
        assert!(RealOrder::new(-0.1).is_err());
        assert!(bessel_j(RealOrder::new(1.0).unwrap(), -1.0).is_err());
    }

    #[test]
    fn laguerre_reference_values() {
        assert_eq!(laguerre(0.7, 0, 3.0).unwrap(), 1.0);
        assert_eq!(laguerre(0.7, 1, 3.0).unwrap(), 1.0 + 0.7 - 3.0);
        // exact rational: L^2_3(3/2) = 1/16
        assert!((laguerre(2.0, 3, 1.5).unwrap() - 0.0625).abs() < 1e-15);
        assert!(laguerre(-1.0, 2, 0.5).is_err());
    }

    #[test]
    fn scaled_i_matches_real_bessel_on_imaginary_axis() {
        // I_ν(iy) = i^ν J_ν(y)
        for &(nu, y) in &[(0.0, 3.0), (0.4, 7.5), (2.3, 20.0), (1.0, 60.0), (0.7, 120.0)] {
            let z = Complex64::new(0.0, y);
            let got = bessel_i_scaled_c(nu, z) * z.exp();
            let want = Complex64::new(0.0, 0.5 * std::f64::consts::PI * nu).exp() * j(nu, y);
            assert!((got - want).norm() < 1e-12, "nu={nu} y={y}: {got} vs {want}");
        }
    }

    #[test]
    fn scaled_i_real_axis() {
        // e^{-x} I_{1/2}(x) = (1 - e^{-2x}) / sqrt(2 π x)
        for &x in &[0.3, 3.0, 12.0, 40.0, 300.0] {
            let got = bessel_i_scaled_c(0.5, Complex64::new(x, 0.0));
            let want = (1.0 - (-2.0 * x).exp()) / (2.0 * std::f64::consts::PI * x).sqrt();
            assert!((got.re / want - 1.0).abs() < 1e-12 && got.im.abs() < 1e-15, "x={x}");
        }
    }
}
