//! Acceptance suite: one line per criterion with its residual, tolerance and
//! wall time. Exits nonzero if any criterion misses its tolerance or time limit.
//!
//! Closed-form oracles (Mehler kernel, free Gaussian, level energies) are
//! written out here rather than taken from the library, and random points
//! come from a generator independent of the `check` command's.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use heisenrep::bundle::{
    flatness_residual, gauge_transform_expr, holonomy, holonomy_class, winding_number, DiscretePath, Expr,
    FlatConnection, PolarGrid, PolarPoint,
};
use heisenrep::hilbert::{
    apply_hamiltonian, apply_p_r, current_divergence, inner_product, probability_current, quantum_correction,
    surface_term, HamiltonianParams, RadialGrid, RadialMode,
};
use heisenrep::models::{
    oscillator_amplitude, oscillator_grid, oscillator_wavefunction, periodicity_defect, plane_wave_expansion,
    spectral_flow, LevelWindow,
};
use heisenrep::propagators::{
    pathintegral_sector, propagator_direct_sum_oscillator, propagator_pathintegral, propagator_spectral_free,
    propagator_spectral_oscillator, spectral_sector, wick_extrapolate, PathIntegralOptions, PropagatorRequest,
    TimeContour,
};
use heisenrep::Result;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const I: Complex64 = Complex64::new(0.0, 1.0);
const MODE_SETS: [(f64, f64, f64); 3] = [(0.0, 0.0, 0.0), (0.25, 0.0, 0.3), (0.2, 0.15, 0.5)];
const N_NODES: usize = 2000;
const EDGE_ROWS: usize = 8;

/// Measured residuals with their tolerances; all must hold.
struct Outcome {
    parts: Vec<(&'static str, f64, f64)>,
}

impl Outcome {
    fn one(name: &'static str, residual: f64, tol: f64) -> Self {
        Self { parts: vec![(name, residual, tol)] }
    }

    fn passed(&self) -> bool {
        self.parts.iter().all(|&(_, r, t)| r <= t)
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Result<Outcome>,
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn rng(id: u64) -> StdRng {
    StdRng::seed_from_u64(0x5eed_0000 + id)
}

fn point(rng: &mut StdRng, lo: f64, hi: f64) -> PolarPoint {
    PolarPoint::new(rng.gen_range(lo..hi), rng.gen_range(-PI..PI)).unwrap()
}

fn energy(n_r: usize, ell: i64, p: &HamiltonianParams, lambda: f64) -> f64 {
    let alpha = ((ell as f64 + lambda).powi(2) + 4.0 * p.mu * p.mu).sqrt();
    p.hbar * p.omega * (2.0 * n_r as f64 + 1.0 + alpha)
}

fn mehler(q_f: &PolarPoint, q_i: &PolarPoint, t: f64, p: &HamiltonianParams) -> Complex64 {
    let (xf, yf) = q_f.to_cartesian();
    let (xi, yi) = q_i.to_cartesian();
    let k = p.mass * p.omega / p.hbar;
    let (s, c) = ((p.omega * t).sin(), (p.omega * t).cos());
    let quad = c * (xf * xf + yf * yf + xi * xi + yi * yi) - 2.0 * (xf * xi + yf * yi);
    k / (2.0 * PI * I * s) * (I * k * quad / (2.0 * s)).exp()
}

fn free_gaussian(q_f: &PolarPoint, q_i: &PolarPoint, t: f64, p: &HamiltonianParams) -> Complex64 {
    let (xf, yf) = q_f.to_cartesian();
    let (xi, yi) = q_i.to_cartesian();
    let d2 = (xf - xi).powi(2) + (yf - yi).powi(2);
    p.mass / (2.0 * PI * I * p.hbar * t) * (I * p.mass * d2 / (2.0 * p.hbar * t)).exp()
}

fn spectrum_formula() -> Result<Outcome> {
    let p = HamiltonianParams::default();
    let row = &spectral_flow(&[0.0], &p, &LevelWindow::symmetric(12, 12))?[0];
    let mut mismatch: f64 = 0.0;
    for l in &row.levels {
        let want = p.hbar * p.omega * ((2 * l.n_r + 1) as f64 + l.ell.unsigned_abs() as f64);
        if l.energy != want {
            mismatch = mismatch.max((l.energy - want).abs().max(f64::MIN_POSITIVE));
        }
    }
    let mut wrong = 0.0;
    for n in 0..=10usize {
        let count = row.levels.iter().filter(|l| l.energy == (n + 1) as f64).count();
        if count != n + 1 {
            wrong += 1.0;
        }
    }
    Ok(Outcome { parts: vec![("energy_mismatch", mismatch, 0.0), ("wrong_degeneracies", wrong, 0.0)] })
}

/// Sorted levels strictly below `cut` over the window n_r ≤ 12, |ℓ| ≤ 20.
fn levels_below(p: &HamiltonianParams, lambda: f64, cut: f64) -> Vec<f64> {
    let mut e: Vec<f64> = (-20..=20i64)
        .flat_map(|ell| (0..=12).map(move |n| energy(n, ell, p, lambda)))
        .filter(|&e| e < cut)
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

fn flow_periodicity() -> Result<Outcome> {
    let p = HamiltonianParams::default();
    let window = LevelWindow::symmetric(12, 20);
    // ℓ = ±21 and n_r = 13 start at 20.17 and 27, so below 20 both windows are complete
    let cut = 20.0;
    let (mut library, mut local): (f64, f64) = (0.0, 0.0);
    for lambda in [0.17, 0.5, 0.83] {
        library = library.max(periodicity_defect(&p, lambda, &window)?);
        let (a, b) = (levels_below(&p, lambda, cut), levels_below(&p, lambda + 1.0, cut));
        if a.len() != b.len() {
            local = f64::INFINITY;
            continue;
        }
        local = a.iter().zip(&b).fold(local, |m, (x, y)| m.max((x - y).abs()));
    }
    Ok(Outcome { parts: vec![("library_defect", library, 1e-12), ("window_defect", local, 1e-12)] })
}

/// Eigenmodes n_r ≤ 6, |ℓ| ≤ 6 of one parameter set on a 2000-node log grid.
fn family((mu, nu, lambda): (f64, f64, f64)) -> Result<(HamiltonianParams, Vec<(usize, RadialMode)>)> {
    let p = HamiltonianParams::oscillator(1.0, mu, nu);
    let alpha_max = (6.0 + lambda).hypot(2.0 * mu);
    let grid = Arc::new(oscillator_grid(&p, 6, alpha_max, N_NODES)?);
    let mut out = Vec::new();
    for ell in -6..=6i64 {
        for n in 0..=6 {
            out.push((n, oscillator_wavefunction(n, ell, &p, lambda, grid.clone())?));
        }
    }
    Ok((p, out))
}

fn orthonormality() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for set in MODE_SETS {
        let (_, modes) = family(set)?;
        for (n, a) in &modes {
            for (m, b) in modes.iter().filter(|(_, b)| b.ell() == a.ell()) {
                let want = if n == m { 1.0 } else { 0.0 };
                worst = worst.max((inner_product(a, b)? - want).norm());
            }
        }
    }
    Ok(Outcome::one("max_gram_error", worst, 1e-8))
}

fn eigen_residuals() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for set in MODE_SETS {
        let (p, modes) = family(set)?;
        let conn = FlatConnection::with_hbar(set.2, p.hbar)?;
        for (n, psi) in &modes {
            let e = energy(*n, psi.ell(), &p, set.2);
            let r = apply_hamiltonian(&p, &conn, psi)?.minus(&psi.scaled(Complex64::new(e, 0.0)))?;
            worst = worst.max(r.norm() / psi.norm());
        }
    }
    Ok(Outcome::one("max_relative_residual", worst, 1e-6))
}

fn plane_wave() -> Result<Outcome> {
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho: f64 = rng.gen_range(0.0..4.0);
        let p: f64 = rng.gen_range(0.0..(10.0 / rho.max(1e-9)).min(8.0));
        let (phi, chi): (f64, f64) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
        let (x, y, px, py) = (rho * phi.cos(), rho * phi.sin(), p * chi.cos(), p * chi.sin());
        let got = plane_wave_expansion(x, y, px, py, 1.0, 40);
        worst = worst.max((got - Complex64::cis(x * px + y * py)).norm());
    }
    Ok(Outcome::one("max_abs_error", worst, 1e-8))
}

fn real_time(rng: &mut StdRng) -> f64 {
    loop {
        let t: f64 = rng.gen_range(0.05..6.2);
        if t.sin().abs() >= 0.1 {
            return t;
        }
    }
}

fn mehler_closed_form() -> Result<Outcome> {
    let mut rng = rng(6);
    let p = HamiltonianParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (qi, qf) = (point(&mut rng, 0.1, 2.5), point(&mut rng, 0.1, 2.5));
        let t = real_time(&mut rng);
        let req = PropagatorRequest::new(qi, qf, t, p, 0.0, TimeContour::real()).with_ell_cutoff(80);
        let ext = wick_extrapolate(|d| Ok(propagator_spectral_oscillator(&req.with_contour(TimeContour::wick(d)?))?.value), 1e-9)?;
        worst = worst.max(rel(ext.value, mehler(&qf, &qi, t, &p)));
    }
    Ok(Outcome::one("max_relative_error", worst, 1e-6))
}

fn resummation() -> Result<Outcome> {
    let mut rng = rng(7);
    let p = HamiltonianParams::oscillator(1.0, 0.2, 0.1);
    let mut worst: f64 = 0.0;
    for tau in [0.5, 1.0, 2.0] {
        for _ in 0..4 {
            let (qi, qf) = (point(&mut rng, 0.1, 2.5), point(&mut rng, 0.1, 2.5));
            let req = PropagatorRequest::new(qi, qf, tau, p, 0.4, TimeContour::euclidean());
            let spectral = propagator_spectral_oscillator(&req)?.value;
            let direct = propagator_direct_sum_oscillator(&req, 120)?.value;
            worst = worst.max(rel(spectral, direct));
        }
    }
    Ok(Outcome::one("max_relative_error", worst, 1e-6))
}

fn pathint() -> Result<Outcome> {
    let p = HamiltonianParams::oscillator(1.0, 0.2, 0.1);
    // the O(1/N) error is dominated by ε(V(r_f) − V(r_i))/2ħ, so nearby radii and a short τ
    // keep it below 1e-3 at N = 32 while staying first order
    let q_i = PolarPoint::new(0.9, 0.0)?;
    let q_f = PolarPoint::new(1.1, 2.0)?;
    let req = PropagatorRequest::new(q_i, q_f, 0.3, p, 0.4, TimeContour::euclidean()).with_ell_cutoff(12);
    let opts = PathIntegralOptions::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for ell in -2..=2 {
        let exact = spectral_sector(&req, ell)?;
        let errs: Vec<f64> = [4usize, 8, 16]
            .iter()
            .map(|&n| Ok((pathintegral_sector(&req, ell, n, &opts)? - exact).norm()))
            .collect::<Result<_>>()?;
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            lo = lo.min(order);
            hi = hi.max(order);
        }
    }
    let agreement = rel(propagator_pathintegral(&req, 32)?.value, propagator_spectral_oscillator(&req)?.value);
    Ok(Outcome {
        parts: vec![
            ("order_below_0.8", (0.8 - lo).max(0.0), 0.0),
            ("order_above_1.3", (hi - 1.3).max(0.0), 0.0),
            ("n32_relative_error", agreement, 1e-3),
        ],
    })
}

fn free_propagator() -> Result<Outcome> {
    let mut rng = rng(9);
    let p = HamiltonianParams::free(0.0, 0.0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (qi, qf) = (point(&mut rng, 0.1, 2.5), point(&mut rng, 0.1, 2.5));
        let t: f64 = rng.gen_range(0.2..3.0);
        let req = PropagatorRequest::new(qi, qf, t, p, 0.0, TimeContour::real()).with_ell_cutoff(100);
        let ext = wick_extrapolate(|d| Ok(propagator_spectral_free(&req.with_contour(TimeContour::wick(d)?))?.value), 1e-9)?;
        worst = worst.max(rel(ext.value, free_gaussian(&qf, &qi, t, &p)));
    }
    Ok(Outcome::one("max_relative_error", worst, 1e-4))
}

fn holonomy_flatness() -> Result<Outcome> {
    let mut rng = rng(10);
    let (mut loops, mut winding_err, mut flat, mut gauge): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let grid = PolarGrid::uniform((0.2, 4.0), 30, (-PI, PI), 48)?;
    for chi in ["0", "r*sin(theta)", "exp(-r)*cos(2*theta)", "theta + r^2"] {
        let lambda: f64 = rng.gen_range(-2.5..2.5);
        let base = FlatConnection::new(lambda);
        let conn = gauge_transform_expr(&base, Expr::parse(chi)?);
        flat = flat.max(flatness_residual(&conn, &grid));
        gauge = gauge.max((holonomy_class(&conn) - holonomy_class(&base)).abs());
        for turns in [-3i64, -1, 0, 1, 2, 4] {
            let (r, theta0) = (rng.gen_range(0.1..3.0), rng.gen_range(-PI..PI));
            let path = if turns == 0 {
                // out and back along a ray: a closed loop that does not enclose the origin
                let a = PolarPoint::new(r, theta0)?;
                let b = PolarPoint::new(2.0 * r, theta0 + 0.4)?;
                DiscretePath::new(vec![a, b, a], true)?
            } else {
                DiscretePath::circle(r, theta0, turns, 20)?
            };
            if winding_number(&path)? != turns {
                winding_err += 1.0;
            }
            let want = Complex64::cis(-TAU * lambda * turns as f64);
            loops = loops.max((holonomy(&conn, &path) - want).norm());
            gauge = gauge.max((holonomy(&conn, &path) - holonomy(&base, &path)).norm());
        }
    }
    Ok(Outcome {
        parts: vec![
            ("loop_holonomy", loops, 1e-12),
            ("winding_errors", winding_err, 0.0),
            ("flatness", flat, 1e-10),
            ("gauge_invariance", gauge, 1e-10),
        ],
    })
}

fn operator_difference() -> Result<Outcome> {
    let plain = HamiltonianParams::default();
    let grid = Arc::new(oscillator_grid(&plain, 6, 6.0, N_NODES)?);
    let conn = FlatConnection::new(0.45);
    let modes: Vec<RadialMode> = [(0i64, 0.6), (1, 0.8), (-2, 0.5), (3, 1.1), (-1, 0.7)]
        .iter()
        .map(|&(ell, a)| {
            let power = ell.unsigned_abs().max(1) as i32;
            RadialMode::from_fn(ell, grid.clone(), move |r| {
                Complex64::new(1.0, 0.4 * a) * r.powi(power) * (-a * r * r).exp()
            })
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (mu, nu) in [(0.3, 0.0), (0.0, 0.25), (0.2, -0.15)] {
        let p = HamiltonianParams::oscillator(1.0, mu, nu);
        for psi in &modes {
            let d = apply_hamiltonian(&p, &conn, psi)?
                .minus(&apply_hamiltonian(&plain, &conn, psi)?)?
                .minus(&quantum_correction(&p, psi)?)?;
            worst = worst.max(d.sup_norm());
        }
    }
    Ok(Outcome::one("sup_norm", worst, 1e-6))
}

fn self_adjointness() -> Result<Outcome> {
    let (mut surface, mut div, mut sym): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for set in MODE_SETS {
        let (p, modes) = family(set)?;
        let conn = FlatConnection::with_hbar(set.2, p.hbar)?;
        for (_, psi) in &modes {
            let (a, b) = surface_term(psi);
            surface = surface.max(a).max(b);
            let d = current_divergence(&probability_current(psi, &p, &conn)?);
            div = d[EDGE_ROWS..d.len() - EDGE_ROWS].iter().fold(div, |m, x| m.max(x.abs()));
        }
        // p_r is symmetric up to the boundary term at r_min, so this grid reaches far below it
        let len = p.length_scale().unwrap();
        let grid = Arc::new(RadialGrid::log(1e-10 * len, 12.0 * len, 3000)?);
        for ell in [-2i64, 0, 3] {
            let m: Vec<RadialMode> = (0..=4)
                .map(|n| RadialMode::from_fn(ell, grid.clone(), |r| oscillator_amplitude(n, ell, &p, set.2, r)))
                .collect::<Result<_>>()?;
            let pm: Vec<RadialMode> = m.iter().map(|x| apply_p_r(x, p.hbar)).collect::<Result<_>>()?;
            for i in 0..m.len() {
                for j in 0..m.len() {
                    sym = sym.max((inner_product(&pm[i], &m[j])? - inner_product(&m[i], &pm[j])?).norm());
                }
            }
        }
    }
    Ok(Outcome {
        parts: vec![("surface_terms", surface, 1e-10), ("current_divergence", div, 1e-7), ("momentum_symmetry", sym, 1e-8)],
    })
}

fn single_valuedness() -> Result<Outcome> {
    let mut rng = rng(13);
    let p = HamiltonianParams::oscillator(1.0, 0.2, 0.1);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (qi, qf) = (point(&mut rng, 0.1, 2.5), point(&mut rng, 0.1, 2.5));
        let contour = if rng.gen_bool(0.5) { TimeContour::euclidean() } else { TimeContour::wick(0.05)? };
        let req = PropagatorRequest::new(qi, qf, rng.gen_range(0.2..2.5), p, 0.37, contour);
        let k = propagator_spectral_oscillator(&req)?.value;
        for turns in [1.0, -1.0, 3.0] {
            let moved = PolarPoint::new(qf.r(), qf.theta() + TAU * turns)?;
            worst = worst.max(rel(propagator_spectral_oscillator(&PropagatorRequest { q_f: moved, ..req })?.value, k));
        }
    }
    Ok(Outcome::one("max_relative_change", worst, 1e-12))
}

const CRITERIA: [Criterion; 13] = [
    Criterion { id: 1, name: "spectrum formula", limit: Some(Duration::from_secs(1)), run: spectrum_formula },
    Criterion { id: 2, name: "spectral-flow periodicity", limit: Some(Duration::from_secs(1)), run: flow_periodicity },
    Criterion { id: 3, name: "orthonormality", limit: Some(Duration::from_secs(10)), run: orthonormality },
    Criterion { id: 4, name: "eigen-residuals", limit: Some(Duration::from_secs(30)), run: eigen_residuals },
    Criterion { id: 5, name: "plane-wave addition theorem", limit: Some(Duration::from_secs(5)), run: plane_wave },
    Criterion { id: 6, name: "Mehler closed form", limit: Some(Duration::from_secs(30)), run: mehler_closed_form },
    Criterion { id: 7, name: "resummation identity", limit: Some(Duration::from_secs(60)), run: resummation },
    Criterion { id: 8, name: "path-integral convergence", limit: Some(Duration::from_secs(300)), run: pathint },
    Criterion { id: 9, name: "free-particle propagator", limit: Some(Duration::from_secs(30)), run: free_propagator },
    Criterion { id: 10, name: "holonomy and flatness", limit: Some(Duration::from_secs(1)), run: holonomy_flatness },
    Criterion { id: 11, name: "operator-difference identity", limit: Some(Duration::from_secs(5)), run: operator_difference },
    Criterion { id: 12, name: "self-adjointness and continuity", limit: Some(Duration::from_secs(10)), run: self_adjointness },
    Criterion { id: 13, name: "single-valuedness", limit: None, run: single_valuedness },
];

fn main() {
    let mut failures = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.limit.is_none_or(|l| elapsed <= l);
        let limit = c.limit.map_or("none".to_string(), |l| format!("{}s", l.as_secs()));
        let (ok, detail) = match &outcome {
            Ok(o) => {
                let parts: Vec<String> = o.parts.iter().map(|(n, r, t)| format!("{n}={r:.3e} (tol {t:.0e})")).collect();
                (o.passed() && in_time, parts.join(", "))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} {:>2} {:<32} {}  time={:.2}s (limit {})",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            limit
        );
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failures, CRITERIA.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
