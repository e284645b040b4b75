//! The invariant-check suite run by `heisenrep check`.
//!
//! Each check returns a nonnegative residual that passes when strictly below
//! its tolerance. Random samples come from a generator seeded with
//! `seed + index`, where `index` is the check's position in [`CHECKS`], so
//! selecting a subset with `only` does not change any value.
//!
//! `inject_fault` names one check whose oracle side is evaluated at −λ
//! instead of λ; it exists to test that failures are reported.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bundle::{
    flatness_residual, gauge_transform_expr, holonomy, DiscretePath, Expr, FlatConnection, PolarGrid,
    PolarPoint,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    apply_hamiltonian, apply_p_r, current_divergence, inner_product, momentum_wavefunction, probability_current,
    quantum_correction, surface_term, HamiltonianParams, RadialGrid, RadialMode,
};
use crate::models::{
    alpha_abs, oscillator_amplitude, oscillator_energy, oscillator_grid, oscillator_wavefunction, periodicity_defect,
    plane_wave_expansion, spectral_flow, LevelWindow,
};
use crate::propagators::{
    assemble_sectors, pathintegral_sector, propagator_closed_free, propagator_closed_oscillator,
    propagator_direct_sum_oscillator, propagator_pathintegral, propagator_spectral_free, propagator_spectral_oscillator,
    spectral_sector, wick_extrapolate, PathIntegralOptions, PropagatorRequest, TimeContour,
};
use crate::specfun::{bessel_j, gamma_fn, laguerre, RealOrder};

/// Rows dropped at each end of the grid for the continuity check.
pub const EDGE_ROWS: usize = 8;

/// The parameter sets (μ, ν, λ) of the eigenmode checks.
pub const MODE_SETS: [(f64, f64, f64); 3] = [(0.0, 0.0, 0.0), (0.25, 0.0, 0.3), (0.2, 0.15, 0.5)];

struct Ctx<'a> {
    cfg: &'a CheckConfig,
    rng: StdRng,
    /// −1 when the fault is injected into this check.
    sign: f64,
}

type CheckFn = fn(&mut Ctx) -> Result<f64>;

struct Check {
    name: &'static str,
    tolerance: f64,
    uses_lambda: bool,
    run: CheckFn,
}

const CHECKS: &[Check] = &[
    Check { name: "gamma_recursion", tolerance: 1e-12, uses_lambda: false, run: gamma_recursion },
    Check { name: "laguerre_recurrence", tolerance: 1e-10, uses_lambda: false, run: laguerre_recurrence },
    Check { name: "bessel_small_argument_bound", tolerance: 1e-12, uses_lambda: false, run: bessel_bound },
    Check { name: "bessel_half_integer_orders", tolerance: 1e-12, uses_lambda: false, run: bessel_half_orders },
    Check { name: "holonomy", tolerance: 1e-12, uses_lambda: true, run: holonomy_check },
    Check { name: "gauge_invariance", tolerance: 1e-10, uses_lambda: false, run: gauge_invariance },
    Check { name: "flatness", tolerance: 1e-10, uses_lambda: false, run: flatness },
    Check { name: "momentum_winding_phase", tolerance: 1e-12, uses_lambda: true, run: momentum_winding },
    Check { name: "spectrum_formula", tolerance: 1e-15, uses_lambda: false, run: spectrum_formula },
    Check { name: "spectral_flow_periodicity", tolerance: 1e-12, uses_lambda: false, run: flow_periodicity },
    Check { name: "flow_monotonicity", tolerance: 1e-6, uses_lambda: true, run: flow_monotonicity },
    Check { name: "orthonormality", tolerance: 1e-8, uses_lambda: false, run: orthonormality },
    Check { name: "eigen_residual", tolerance: 1e-6, uses_lambda: true, run: eigen_residual },
    Check { name: "hamiltonian_symmetry", tolerance: 1e-7, uses_lambda: false, run: hamiltonian_symmetry },
    Check { name: "momentum_symmetry", tolerance: 1e-8, uses_lambda: false, run: momentum_symmetry },
    Check { name: "operator_difference", tolerance: 1e-6, uses_lambda: false, run: operator_difference },
    Check { name: "surface_terms", tolerance: 1e-10, uses_lambda: false, run: surface_terms },
    Check { name: "current_divergence", tolerance: 1e-7, uses_lambda: false, run: divergence },
    Check { name: "plane_wave_expansion", tolerance: 1e-8, uses_lambda: false, run: plane_wave },
    Check { name: "mehler_closed_form", tolerance: 1e-6, uses_lambda: false, run: mehler },
    Check { name: "resummation_identity", tolerance: 1e-6, uses_lambda: true, run: resummation },
    Check { name: "free_propagator", tolerance: 1e-4, uses_lambda: false, run: free_propagator },
    Check { name: "semigroup", tolerance: 1e-5, uses_lambda: false, run: semigroup },
    Check { name: "hermiticity", tolerance: 1e-10, uses_lambda: true, run: hermiticity },
    Check { name: "single_valuedness", tolerance: 1e-12, uses_lambda: true, run: single_valuedness },
    Check { name: "lambda_periodicity", tolerance: 1e-12, uses_lambda: true, run: lambda_periodicity },
    Check { name: "tail_bound", tolerance: 1.0, uses_lambda: false, run: tail_bound },
    Check { name: "pathint_order", tolerance: 0.25, uses_lambda: false, run: pathint_order },
    Check { name: "pathint_agreement", tolerance: 1e-3, uses_lambda: true, run: pathint_agreement },
];

/// Names of all checks in run order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub seed: u64,
    /// Run only these checks.
    pub only: Option<Vec<String>>,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
    /// Evaluate the oracle of this check at −λ.
    pub inject_fault: Option<String>,
    /// Nodes of the radial grids used by the mode checks.
    pub n_nodes: usize,
    /// Random sample points per propagator check.
    pub random_points: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { seed: 2024, only: None, tolerances: BTreeMap::new(), inject_fault: None, n_nodes: 2000, random_points: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn known(name: &str) -> Result<&'static Check> {
    CHECKS
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::Input(format!("unknown check {name:?}; known: {}", check_names().join(", "))))
}

pub fn run_checks(cfg: &CheckConfig) -> Result<CheckReport> {
    if let Some(only) = &cfg.only {
        for n in only {
            known(n)?;
        }
    }
    for (n, &t) in &cfg.tolerances {
        known(n)?;
        if !(t >= 0.0) {
            return Err(Error::Input(format!("tolerance for {n} must be >= 0")));
        }
    }
    if let Some(n) = &cfg.inject_fault {
        if !known(n)?.uses_lambda {
            return Err(Error::Input(format!("check {n} does not depend on lambda; no fault to inject")));
        }
    }
    if cfg.n_nodes < 200 || cfg.random_points == 0 {
        return Err(Error::Input("need n_nodes >= 200 and random_points >= 1".into()));
    }
    let mut checks = Vec::new();
    for (index, check) in CHECKS.iter().enumerate() {
        if cfg.only.as_ref().is_some_and(|o| !o.iter().any(|n| n == check.name)) {
            continue;
        }
        let tolerance = cfg.tolerances.get(check.name).copied().unwrap_or(check.tolerance);
        let faulted = cfg.inject_fault.as_deref() == Some(check.name);
        let mut ctx = Ctx {
            cfg,
            rng: StdRng::seed_from_u64(cfg.seed.wrapping_add(index as u64)),
            sign: if faulted { -1.0 } else { 1.0 },
        };
        let (residual, error) = match (check.run)(&mut ctx) {
            Ok(r) => (r, None),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        checks.push(CheckResult { name: check.name.into(), residual, tolerance, passed: residual < tolerance, error });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(CheckReport { seed: cfg.seed, passed, checks })
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn point(rng: &mut StdRng, r: (f64, f64)) -> PolarPoint {
    PolarPoint::new(rng.gen_range(r.0..r.1), rng.gen_range(-PI..PI)).expect("positive radius")
}

fn gamma_recursion(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x: f64 = ctx.rng.gen_range(1e-3..30.0);
        let (a, b) = (gamma_fn(x + 1.0)?, x * gamma_fn(x)?);
        worst = worst.max((a - b).abs() / a.abs());
    }
    Ok(worst)
}

fn laguerre_recurrence(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let alpha: f64 = ctx.rng.gen_range(0.0..10.0);
        let n: usize = ctx.rng.gen_range(1..20);
        let x: f64 = ctx.rng.gen_range(0.0..30.0);
        let nf = n as f64;
        let (l0, l1, l2) = (laguerre(alpha, n - 1, x)?, laguerre(alpha, n, x)?, laguerre(alpha, n + 1, x)?);
        let terms = [(nf + 1.0) * l2, (2.0 * nf + 1.0 + alpha - x) * l1, (nf + alpha) * l0];
        let scale = terms.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        worst = worst.max((terms[0] - terms[1] + terms[2]).abs() / scale);
    }
    Ok(worst)
}

/// Excess of |J_ν(x)| over (x/2)^ν/Γ(ν+1) on x ≤ 1, relative to the bound.
fn bessel_bound(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let nu: f64 = ctx.rng.gen_range(0.0..20.0);
        let x: f64 = ctx.rng.gen_range(1e-6..1.0);
        let bound = (x / 2.0).powf(nu) / gamma_fn(nu + 1.0)?;
        let j = bessel_j(RealOrder::new(nu)?, x)?;
        worst = worst.max(j.abs() / bound - 1.0);
    }
    Ok(worst.max(0.0))
}

fn bessel_half_orders(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x: f64 = ctx.rng.gen_range(1e-3..30.0);
        let pre = (2.0 / (PI * x)).sqrt();
        let half = pre * x.sin();
        let three_halves = pre * (x.sin() / x - x.cos());
        worst = worst
            .max((bessel_j(RealOrder::new(0.5)?, x)? - half).abs())
            .max((bessel_j(RealOrder::new(1.5)?, x)? - three_halves).abs());
    }
    Ok(worst)
}

fn holonomy_check(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let lambda: f64 = ctx.rng.gen_range(-2.0..2.0);
        let conn = gauge_transform_expr(&FlatConnection::new(lambda), Expr::parse("0.3*r*sin(theta) + r^2")?);
        let r: f64 = ctx.rng.gen_range(0.2..3.0);
        let theta0: f64 = ctx.rng.gen_range(-PI..PI);
        for turns in [-3i64, -1, 1, 2] {
            let path = DiscretePath::circle(r, theta0, turns, 24)?;
            let want = Complex64::cis(-TAU * ctx.sign * lambda * turns as f64);
            worst = worst.max((holonomy(&conn, &path) - want).norm());
        }
    }
    Ok(worst)
}

fn random_closed_path(rng: &mut StdRng) -> Result<DiscretePath> {
    let (x0, y0) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let radius: f64 = rng.gen_range(0.3..2.5);
    let n = 40;
    let mut v = Vec::with_capacity(n + 1);
    for k in 0..n {
        let a = TAU * k as f64 / n as f64;
        v.push(PolarPoint::from_cartesian(x0 + radius * a.cos(), y0 + radius * a.sin())?);
    }
    v.push(v[0]);
    DiscretePath::new(v, true)
}

fn gauge_invariance(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for chi in ["r*cos(theta)", "sin(2*theta)*exp(-r)", "pow(r, 3) - theta"] {
        let conn = FlatConnection::new(ctx.rng.gen_range(-1.0..1.0));
        let moved = gauge_transform_expr(&conn, Expr::parse(chi)?);
        for _ in 0..10 {
            let path = match random_closed_path(&mut ctx.rng) {
                Ok(p) => p,
                Err(_) => continue, // a vertex landed on the origin
            };
            worst = worst.max((holonomy(&moved, &path) - holonomy(&conn, &path)).norm());
        }
    }
    Ok(worst)
}

fn flatness(ctx: &mut Ctx) -> Result<f64> {
    let grid = PolarGrid::uniform((0.3, 3.0), 40, (-PI, PI), 64)?;
    let mut worst: f64 = 0.0;
    for chi in ["r*cos(theta)", "exp(-r^2)*sin(3*theta)", "theta*r"] {
        let conn = gauge_transform_expr(&FlatConnection::new(ctx.rng.gen_range(-1.0..1.0)), Expr::parse(chi)?);
        worst = worst.max(flatness_residual(&conn, &grid));
    }
    Ok(worst)
}

/// A loop around the origin appended to the standard path multiplies ⟨q|p⟩ by e^{−2πiλ}.
fn momentum_winding(ctx: &mut Ctx) -> Result<f64> {
    let base = PolarPoint::new(1.0, 0.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let lambda: f64 = ctx.rng.gen_range(-1.5..1.5);
        let conn = FlatConnection::new(lambda);
        let q = point(&mut ctx.rng, (0.2, 3.0));
        let p = (ctx.rng.gen_range(-2.0..2.0), ctx.rng.gen_range(-2.0..2.0));
        let direct = DiscretePath::standard_to(&q)?;
        for turns in [-2i64, 1, 3] {
            let wound = direct.concat(&DiscretePath::circle(q.r(), q.theta(), turns, 16)?)?;
            let a = momentum_wavefunction(&q, p, &conn, &base, &direct, 1.0)?;
            let b = momentum_wavefunction(&q, p, &conn, &base, &wound, 1.0)?;
            worst = worst.max((b - a * Complex64::cis(-TAU * ctx.sign * lambda * turns as f64)).norm() / a.norm());
        }
    }
    Ok(worst)
}

/// Deviation from ħω(2n_r + 1 + |ℓ|) at λ = μ = 0 plus the number of wrong
/// degeneracies of the levels ħω(n + 1), n ≤ 10.
fn spectrum_formula(_ctx: &mut Ctx) -> Result<f64> {
    let params = HamiltonianParams::default();
    let window = LevelWindow::symmetric(12, 12);
    let row = &spectral_flow(&[0.0], &params, &window)?[0];
    let mut residual: f64 = 0.0;
    for l in &row.levels {
        let want = params.hbar * params.omega * (2.0 * l.n_r as f64 + 1.0 + l.ell.unsigned_abs() as f64);
        residual = residual.max((l.energy - want).abs());
    }
    for n in 0..=10usize {
        let e = (n + 1) as f64;
        let count = row.levels.iter().filter(|l| l.energy == e).count();
        if count != n + 1 {
            residual += 1.0;
        }
    }
    Ok(residual)
}

fn flow_periodicity(_ctx: &mut Ctx) -> Result<f64> {
    let params = HamiltonianParams::default();
    let window = LevelWindow::symmetric(12, 20);
    let mut worst: f64 = 0.0;
    for lambda in [0.17, 0.5, 0.83] {
        worst = worst.max(periodicity_defect(&params, lambda, &window)?);
    }
    Ok(worst)
}

/// dE/dλ = ħω sign(ℓ + λ) at μ = 0, by central differences.
fn flow_monotonicity(ctx: &mut Ctx) -> Result<f64> {
    let params = HamiltonianParams::oscillator(1.3, 0.0, 0.1);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let lambda: f64 = ctx.rng.gen_range(-2.0..2.0);
        let ell: i64 = ctx.rng.gen_range(-5..=5);
        let n_r: usize = ctx.rng.gen_range(0..4);
        if (ell as f64 + lambda).abs() < 10.0 * h {
            continue;
        }
        let slope = (oscillator_energy(n_r, ell, &params, lambda + h)? - oscillator_energy(n_r, ell, &params, lambda - h)?)
            / (2.0 * h);
        let want = params.hbar * params.omega * (ell as f64 + ctx.sign * lambda).signum();
        worst = worst.max((slope - want).abs());
    }
    Ok(worst)
}

/// Eigenmodes n_r ≤ 6, |ℓ| ≤ 6 of one parameter set on its grid.
fn mode_family(cfg: &CheckConfig, (mu, nu, lambda): (f64, f64, f64)) -> Result<(HamiltonianParams, Vec<Vec<RadialMode>>)> {
    let params = HamiltonianParams::oscillator(1.0, mu, nu);
    let alpha_max = (-6..=6).map(|l| alpha_abs(l, lambda, mu)).fold(0.0, f64::max);
    let grid = Arc::new(oscillator_grid(&params, 6, alpha_max, cfg.n_nodes)?);
    let mut family = Vec::new();
    for ell in -6..=6i64 {
        let modes: Result<Vec<RadialMode>> =
            (0..=6).map(|n| oscillator_wavefunction(n, ell, &params, lambda, grid.clone())).collect();
        family.push(modes?);
    }
    Ok((params, family))
}

fn orthonormality(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for set in MODE_SETS {
        let (_, family) = mode_family(ctx.cfg, set)?;
        for modes in &family {
            for (i, a) in modes.iter().enumerate() {
                for (j, b) in modes.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((inner_product(a, b)? - want).norm());
                }
            }
        }
    }
    Ok(worst)
}

fn eigen_residual(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for set in MODE_SETS {
        let (params, family) = mode_family(ctx.cfg, set)?;
        let conn = FlatConnection::with_hbar(set.2, params.hbar)?;
        for modes in &family {
            for (n_r, psi) in modes.iter().enumerate() {
                let e = oscillator_energy(n_r, psi.ell(), &params, ctx.sign * set.2)?;
                let h = apply_hamiltonian(&params, &conn, psi)?;
                worst = worst.max(h.minus(&psi.scaled(c(e)))?.norm() / psi.norm());
            }
        }
    }
    Ok(worst)
}

fn hamiltonian_symmetry(ctx: &mut Ctx) -> Result<f64> {
    let lambda = 0.3;
    let mut worst: f64 = 0.0;
    for (mu, nu) in [(0.0, 0.0), (0.25, 0.0), (0.0, 0.2), (0.3, -0.1)] {
        let params = HamiltonianParams::oscillator(1.0, mu, nu);
        let conn = FlatConnection::new(lambda);
        let grid = Arc::new(oscillator_grid(&params, 4, 3.0, ctx.cfg.n_nodes)?);
        for ell in [-2i64, 0, 1] {
            let modes: Result<Vec<RadialMode>> =
                (0..=4).map(|n| oscillator_wavefunction(n, ell, &params, lambda, grid.clone())).collect();
            let modes = modes?;
            let h: Result<Vec<RadialMode>> = modes.iter().map(|m| apply_hamiltonian(&params, &conn, m)).collect();
            let h = h?;
            for i in 0..modes.len() {
                for j in 0..modes.len() {
                    let d = inner_product(&h[i], &modes[j])? - inner_product(&modes[i], &h[j])?;
                    worst = worst.max(d.norm());
                }
            }
        }
    }
    Ok(worst)
}

/// ⟨p_r ψ, φ⟩ − ⟨ψ, p_r φ⟩ over eigenmode pairs whose surface terms vanish.
/// The grid reaches down to 1e-10 L: the omitted boundary term 2πr_min f*g
/// is what limits the symmetry on coarser-cut grids.
fn momentum_symmetry(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (mu, nu, lambda) in MODE_SETS {
        let params = HamiltonianParams::oscillator(1.0, mu, nu);
        let outer = oscillator_grid(&params, 6, 6.0 + lambda + 2.0 * mu, ctx.cfg.n_nodes)?;
        let len = params.length_scale().expect("oscillator");
        let grid = Arc::new(RadialGrid::log(1e-10 * len, outer.r_max(), ctx.cfg.n_nodes * 3 / 2)?);
        for ell in [-3i64, -1, 0, 2] {
            let modes: Vec<RadialMode> = (0..=4)
                .map(|n| RadialMode::from_fn(ell, grid.clone(), |r| oscillator_amplitude(n, ell, &params, lambda, r)))
                .collect::<Result<_>>()?;
            let vanishing: Vec<&RadialMode> = modes
                .iter()
                .filter(|m| {
                    let (a, b) = surface_term(m);
                    a < 1e-10 && b < 1e-10
                })
                .collect();
            let p: Vec<RadialMode> = vanishing.iter().map(|m| apply_p_r(m, params.hbar)).collect::<Result<_>>()?;
            for i in 0..vanishing.len() {
                for j in 0..vanishing.len() {
                    let d = inner_product(&p[i], vanishing[j])? - inner_product(vanishing[i], &p[j])?;
                    worst = worst.max(d.norm());
                }
            }
        }
    }
    Ok(worst)
}

/// Smooth test modes vanishing at the origin.
fn test_modes(grid: &Arc<RadialGrid>) -> Result<Vec<RadialMode>> {
    let a = Complex64::new(0.5, 0.3);
    [0i64, 1, -2, 3, 0]
        .iter()
        .enumerate()
        .map(|(k, &ell)| {
            let power = ell.unsigned_abs().max(1) as i32;
            let width = a * (1.0 + 0.2 * k as f64);
            RadialMode::from_fn(ell, grid.clone(), |r| {
                r.powi(power) * (-width * r * r).exp() + Complex64::new(0.0, 0.3) * r * r * (-r * r).exp()
            })
        })
        .collect()
}

fn operator_difference(ctx: &mut Ctx) -> Result<f64> {
    let lambda = 0.3;
    let plain = HamiltonianParams::oscillator(1.0, 0.0, 0.0);
    let grid = Arc::new(oscillator_grid(&plain, 6, 6.0, ctx.cfg.n_nodes)?);
    let conn = FlatConnection::new(lambda);
    let mut worst: f64 = 0.0;
    for (mu, nu) in [(0.25, 0.0), (0.0, 0.2), (0.3, -0.1)] {
        let params = HamiltonianParams::oscillator(1.0, mu, nu);
        for psi in test_modes(&grid)? {
            let d = apply_hamiltonian(&params, &conn, &psi)?
                .minus(&apply_hamiltonian(&plain, &conn, &psi)?)?
                .minus(&quantum_correction(&params, &psi)?)?;
            worst = worst.max(d.sup_norm());
        }
    }
    Ok(worst)
}

fn surface_terms(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for set in MODE_SETS {
        let (_, family) = mode_family(ctx.cfg, set)?;
        for psi in family.iter().flatten() {
            let (a, b) = surface_term(psi);
            worst = worst.max(a).max(b);
        }
    }
    Ok(worst)
}

fn divergence(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for set in MODE_SETS {
        let (params, family) = mode_family(ctx.cfg, set)?;
        let conn = FlatConnection::with_hbar(set.2, params.hbar)?;
        for psi in family.iter().flatten() {
            let div = current_divergence(&probability_current(psi, &params, &conn)?);
            let interior = &div[EDGE_ROWS..div.len() - EDGE_ROWS];
            worst = interior.iter().fold(worst, |m, d| m.max(d.abs()));
        }
    }
    Ok(worst)
}

fn plane_wave(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (rho, phi): (f64, f64) = (ctx.rng.gen_range(0.0..3.0), ctx.rng.gen_range(-PI..PI));
        let p_max = 10.0 / rho.max(1e-3);
        let (p, chi) = (ctx.rng.gen_range(0.0..p_max.min(5.0)), ctx.rng.gen_range(-PI..PI));
        let (x, y, px, py) = (rho * phi.cos(), rho * phi.sin(), p * chi.cos(), p * chi.sin());
        let want = Complex64::cis(x * px + y * py);
        worst = worst.max((plane_wave_expansion(x, y, px, py, 1.0, 40) - want).norm());
    }
    Ok(worst)
}

/// Real time with |sin ωt| ≥ 0.1.
fn real_time(rng: &mut StdRng, range: (f64, f64)) -> f64 {
    loop {
        let t: f64 = rng.gen_range(range.0..range.1);
        if t.sin().abs() >= 0.1 {
            return t;
        }
    }
}

fn mehler(ctx: &mut Ctx) -> Result<f64> {
    let params = HamiltonianParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.cfg.random_points {
        let (qi, qf) = (point(&mut ctx.rng, (0.2, 2.0)), point(&mut ctx.rng, (0.2, 2.0)));
        let t = real_time(&mut ctx.rng, (0.1, 6.0));
        let req = PropagatorRequest::new(qi, qf, t, params, 0.0, TimeContour::real()).with_ell_cutoff(80);
        let ext = wick_extrapolate(
            |d| Ok(propagator_spectral_oscillator(&req.with_contour(TimeContour::wick(d)?))?.value),
            1e-9,
        )?;
        let want = propagator_closed_oscillator(&qf, &qi, t, TimeContour::real(), &params)?;
        worst = worst.max(rel(ext.value, want));
    }
    Ok(worst)
}

fn resummation(ctx: &mut Ctx) -> Result<f64> {
    let params = HamiltonianParams::oscillator(1.0, 0.2, 0.1);
    let lambda = 0.4;
    let mut worst: f64 = 0.0;
    for tau in [0.5, 1.0, 2.0] {
        for _ in 0..3 {
            let (qi, qf) = (point(&mut ctx.rng, (0.2, 2.0)), point(&mut ctx.rng, (0.2, 2.0)));
            let req = PropagatorRequest::new(qi, qf, tau, params, lambda, TimeContour::euclidean());
            let spectral = propagator_spectral_oscillator(&req)?.value;
            let direct = PropagatorRequest { lambda: ctx.sign * lambda, ..req };
            let want = propagator_direct_sum_oscillator(&direct, 120)?.value;
            worst = worst.max(rel(spectral, want));
        }
    }
    Ok(worst)
}

fn free_propagator(ctx: &mut Ctx) -> Result<f64> {
    let params = HamiltonianParams::free(0.0, 0.0);
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.cfg.random_points {
        let (qi, qf) = (point(&mut ctx.rng, (0.2, 2.0)), point(&mut ctx.rng, (0.2, 2.0)));
        let t: f64 = ctx.rng.gen_range(0.1..3.0);
        let req = PropagatorRequest::new(qi, qf, t, params, 0.0, TimeContour::real()).with_ell_cutoff(100);
        let ext = wick_extrapolate(
            |d| Ok(propagator_spectral_free(&req.with_contour(TimeContour::wick(d)?))?.value),
            1e-9,
        )?;
        let want = propagator_closed_free(&qf, &qi, t, TimeContour::real(), &params)?;
        worst = worst.max(rel(ext.value, want));
    }
    Ok(worst)
}

/// ∫ K(q_f, q; τ₁) K(q, q_i; τ₂) r dr dθ = K(q_f, q_i; τ₁ + τ₂). The angular
/// integral pairs equal ℓ, leaving ∫ R_ℓ(r_f, r) R_ℓ(r, r_i) dr per sector
/// for the reduced kernels R_ℓ = 2π√(r r′) K_ℓ.
fn semigroup(ctx: &mut Ctx) -> Result<f64> {
    let lambda = 0.4;
    let mut worst: f64 = 0.0;
    for params in [HamiltonianParams::oscillator(1.0, 0.2, 0.1), HamiltonianParams::free(0.2, 0.1)] {
        let (qi, qf) = (point(&mut ctx.rng, (0.4, 1.5)), point(&mut ctx.rng, (0.4, 1.5)));
        let (t1, t2) = (0.3, 0.5);
        let grid = RadialGrid::log(1e-4, 9.0, 900)?;
        let w = grid.line_weights();
        let ells: Vec<i64> = (-12..=12).collect();
        let mut composed = Vec::new();
        let mut direct = Vec::new();
        for &ell in &ells {
            let mut sum = c(0.0);
            for (r, wk) in grid.nodes().iter().zip(&w) {
                let q = PolarPoint::new(*r, 0.0)?;
                let a = PropagatorRequest::new(q, qf, t1, params, lambda, TimeContour::euclidean());
                let b = PropagatorRequest::new(qi, q, t2, params, lambda, TimeContour::euclidean());
                sum += spectral_sector(&a, ell)? * spectral_sector(&b, ell)? * *wk;
            }
            composed.push((ell, sum));
            let whole = PropagatorRequest::new(qi, qf, t1 + t2, params, lambda, TimeContour::euclidean());
            direct.push((ell, spectral_sector(&whole, ell)?));
        }
        let dth = qf.theta() - qi.theta();
        let lhs = assemble_sectors(&composed, lambda, qf.r(), qi.r(), dth);
        let rhs = assemble_sectors(&direct, lambda, qf.r(), qi.r(), dth);
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(worst)
}

fn hermiticity(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for params in [HamiltonianParams::oscillator(1.0, 0.2, 0.1), HamiltonianParams::free(0.2, 0.1)] {
        for _ in 0..5 {
            let lambda: f64 = ctx.rng.gen_range(-1.0..1.0);
            let (qi, qf) = (point(&mut ctx.rng, (0.2, 2.0)), point(&mut ctx.rng, (0.2, 2.0)));
            let t: f64 = ctx.rng.gen_range(0.2..3.0);
            let contour = TimeContour::wick(0.05)?;
            let eval = |req: &PropagatorRequest| {
                if params.omega > 0.0 {
                    propagator_spectral_oscillator(req)
                } else {
                    propagator_spectral_free(req)
                }
            };
            let fwd = eval(&PropagatorRequest::new(qi, qf, t, params, lambda, contour))?.value;
            let back = eval(&PropagatorRequest::new(qf, qi, -t, params, ctx.sign * lambda, contour))?.value;
            worst = worst.max(rel(fwd.conj(), back));
        }
    }
    Ok(worst)
}

fn shifted(q: &PolarPoint, turns: f64) -> Result<PolarPoint> {
    PolarPoint::new(q.r(), q.theta() + TAU * turns)
}

fn single_valuedness(ctx: &mut Ctx) -> Result<f64> {
    let params = HamiltonianParams::oscillator(1.0, 0.2, 0.1);
    let lambda = 0.37;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (qi, qf) = (point(&mut ctx.rng, (0.2, 2.0)), point(&mut ctx.rng, (0.2, 2.0)));
        let tau: f64 = ctx.rng.gen_range(0.3..2.0);
        let base = PropagatorRequest::new(qi, qf, tau, params, ctx.sign * lambda, TimeContour::euclidean());
        let k = propagator_spectral_oscillator(&base)?.value;
        for (a, b) in [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)] {
            let req = PropagatorRequest { q_i: shifted(&qi, a)?, q_f: shifted(&qf, b)?, lambda, ..base };
            worst = worst.max(rel(propagator_spectral_oscillator(&req)?.value, k));
        }
    }
    Ok(worst)
}

/// K at λ + 1 equals e^{−iΔθ} K at λ for truncation-matched ℓ windows. The
/// error is taken relative to |K| at Δθ = 0, since near-opposite points
/// cancel to far below the size of the individual terms.
fn lambda_periodicity(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for params in [HamiltonianParams::oscillator(1.0, 0.2, 0.1), HamiltonianParams::free(0.2, 0.1)] {
        for _ in 0..5 {
            let lambda: f64 = ctx.rng.gen_range(-1.0..1.0);
            let (qi, qf) = (point(&mut ctx.rng, (0.2, 2.0)), point(&mut ctx.rng, (0.2, 2.0)));
            let tau: f64 = ctx.rng.gen_range(0.3..2.0);
            let eval = |l: f64, qf: PolarPoint| {
                let req = PropagatorRequest::new(qi, qf, tau, params, l, TimeContour::euclidean());
                if params.omega > 0.0 {
                    propagator_spectral_oscillator(&req)
                } else {
                    propagator_spectral_free(&req)
                }
            };
            let gauge = Complex64::cis(-(qf.theta() - qi.theta()));
            let up = eval(lambda + 1.0, qf)?.value;
            let here = eval(ctx.sign * lambda, qf)?.value;
            let scale = eval(lambda, PolarPoint::new(qf.r(), qi.theta())?)?.value.norm();
            worst = worst.max((up - gauge * here).norm() / scale);
        }
    }
    Ok(worst)
}

/// |K(2L) − K(L)| relative to the reported bound at cutoff L.
fn tail_bound(ctx: &mut Ctx) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for params in [HamiltonianParams::oscillator(1.0, 0.2, 0.1), HamiltonianParams::free(0.2, 0.1)] {
        for _ in 0..5 {
            let (qi, qf) = (point(&mut ctx.rng, (0.5, 2.0)), point(&mut ctx.rng, (0.5, 2.0)));
            let t: f64 = ctx.rng.gen_range(0.5..3.0);
            let req = PropagatorRequest::new(qi, qf, t, params, 0.3, TimeContour::wick(0.01)?).with_ell_cutoff(8);
            let eval = |r: &PropagatorRequest| {
                if params.omega > 0.0 {
                    propagator_spectral_oscillator(r)
                } else {
                    propagator_spectral_free(r)
                }
            };
            let coarse = eval(&req)?;
            let fine = eval(&req.with_ell_cutoff(16))?;
            let change = (fine.value - coarse.value).norm();
            if coarse.tail_bound.is_finite() && coarse.tail_bound > 0.0 {
                worst = worst.max(change / coarse.tail_bound);
            } else if change > 0.0 && coarse.tail_bound == 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(worst)
}

/// Largest distance of the per-sector orders log₂(err_N/err_2N), N ∈ {4, 8},
/// from 1.05; the accepted band [0.8, 1.3] is a distance of 0.25.
fn pathint_order(_ctx: &mut Ctx) -> Result<f64> {
    let req = pathint_request(0.4)?;
    let opts = PathIntegralOptions::default();
    let mut worst: f64 = 0.0;
    for ell in -2..=2 {
        let exact = spectral_sector(&req, ell)?;
        let errs: Vec<f64> = [4usize, 8, 16]
            .iter()
            .map(|&n| Ok((pathintegral_sector(&req, ell, n, &opts)? - exact).norm()))
            .collect::<Result<_>>()?;
        for w in errs.windows(2) {
            worst = worst.max(((w[0] / w[1]).log2() - 1.05).abs());
        }
    }
    Ok(worst)
}

/// Shared by the two path-integral checks. The O(1/N) error is about
/// ε|V(r_f) − V(r_i)|/2ħ; at r_i = r_f it cancels and the sweep turns second
/// order, while far-apart radii or long τ push the N = 32 error above 1e-3.
fn pathint_request(lambda: f64) -> Result<PropagatorRequest> {
    let params = HamiltonianParams::oscillator(1.0, 0.2, 0.1);
    let q_i = PolarPoint::new(0.9, 0.0)?;
    let q_f = PolarPoint::new(1.1, 2.0)?;
    Ok(PropagatorRequest::new(q_i, q_f, 0.3, params, lambda, TimeContour::euclidean()).with_ell_cutoff(12))
}

fn pathint_agreement(ctx: &mut Ctx) -> Result<f64> {
    let lambda = 0.4;
    let req = pathint_request(lambda)?;
    let composed = propagator_pathintegral(&req, 32)?.value;
    let spectral = propagator_spectral_oscillator(&PropagatorRequest { lambda: ctx.sign * lambda, ..req })?.value;
    Ok(rel(composed, spectral))
}
