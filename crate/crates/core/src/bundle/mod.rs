//! Flat U(1) connections on the punctured plane.
//!
//! A connection is stored as A = ħλ dθ + dχ with an optional single-valued
//! gauge function χ, so it is flat by construction. Holonomies use the
//! abelian line integral, evaluated exactly: ħλ Σ Δθ for the flux part and
//! χ(end) − χ(start) along a continuous lift of the angle for the gauge part.

mod expr;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use expr::Expr;

use crate::error::{Error, Result};

/// A point (r, θ) of the punctured plane, θ stored in [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarPoint {
    r: f64,
    theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Input(format!("polar radius must be finite and > 0, got {r}")));
        }
        if !theta.is_finite() {
            return Err(Error::Input(format!("polar angle must be finite, got {theta}")));
        }
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        Ok(Self { r, theta: t })
    }

    pub fn from_cartesian(x: f64, y: f64) -> Result<Self> {
        Self::new(x.hypot(y), y.atan2(x))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn to_cartesian(&self) -> (f64, f64) {
        (self.r * self.theta.cos(), self.r * self.theta.sin())
    }
}

impl<'de> Deserialize<'de> for PolarPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            r: f64,
            theta: f64,
        }
        let raw = Raw::deserialize(d)?;
        PolarPoint::new(raw.r, raw.theta).map_err(serde::de::Error::custom)
    }
}

/// A smooth scalar function on the punctured plane with its gradient.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn value(&self, r: f64, theta: f64) -> f64;
    /// (∂/∂r, ∂/∂θ)
    fn gradient(&self, r: f64, theta: f64) -> (f64, f64);
}

impl ScalarField for Expr {
    fn value(&self, r: f64, theta: f64) -> f64 {
        Expr::value(self, r, theta)
    }
    fn gradient(&self, r: f64, theta: f64) -> (f64, f64) {
        Expr::gradient(self, r, theta)
    }
}

type ValueFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type GradFn = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

/// A scalar field given by a pair of closures (value, gradient).
#[derive(Clone)]
pub struct FnField {
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
}

impl FnField {
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), gradient: Arc::new(gradient) }
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnField(..)")
    }
}

impl ScalarField for FnField {
    fn value(&self, r: f64, theta: f64) -> f64 {
        (self.value)(r, theta)
    }
    fn gradient(&self, r: f64, theta: f64) -> (f64, f64) {
        (self.gradient)(r, theta)
    }
}

#[derive(Debug)]
struct SumField(Arc<dyn ScalarField>, Arc<dyn ScalarField>);

impl ScalarField for SumField {
    fn value(&self, r: f64, theta: f64) -> f64 {
        self.0.value(r, theta) + self.1.value(r, theta)
    }
    fn gradient(&self, r: f64, theta: f64) -> (f64, f64) {
        let (a, b) = (self.0.gradient(r, theta), self.1.gradient(r, theta));
        (a.0 + b.0, a.1 + b.1)
    }
}

/// A flat connection A = ħλ dθ + dχ.
#[derive(Debug, Clone)]
pub struct FlatConnection {
    lambda: f64,
    hbar: f64,
    pure_gauge: Option<Arc<dyn ScalarField>>,
    chi_source: Option<String>,
}

/// JSON form of a connection: `{"lambda": 0.3, "chi": "r*cos(theta)", "hbar": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    pub lambda: f64,
    #[serde(default)]
    pub chi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
}

impl FlatConnection {
    /// The pure flux connection ħλ dθ with ħ = 1.
    pub fn new(lambda: f64) -> Self {
        Self { lambda, hbar: 1.0, pure_gauge: None, chi_source: None }
    }

    pub fn with_hbar(lambda: f64, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::Input(format!("hbar must be finite and > 0, got {hbar}")));
        }
        if !lambda.is_finite() {
            return Err(Error::Input(format!("lambda must be finite, got {lambda}")));
        }
        Ok(Self { lambda, hbar, pure_gauge: None, chi_source: None })
    }

    pub fn from_spec(spec: &ConnectionSpec) -> Result<Self> {
        let conn = Self::with_hbar(spec.lambda, spec.hbar.unwrap_or(1.0))?;
        match &spec.chi {
            None => Ok(conn),
            Some(src) => Ok(gauge_transform_expr(&conn, Expr::parse(src)?)),
        }
    }

    /// The JSON form; `None` if the gauge part was supplied as a closure.
    pub fn to_spec(&self) -> Option<ConnectionSpec> {
        if self.pure_gauge.is_some() && self.chi_source.is_none() {
            return None;
        }
        Some(ConnectionSpec {
            lambda: self.lambda,
            chi: self.chi_source.clone(),
            hbar: if self.hbar == 1.0 { None } else { Some(self.hbar) },
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn has_pure_gauge(&self) -> bool {
        self.pure_gauge.is_some()
    }

    pub fn pure_gauge(&self) -> Option<&Arc<dyn ScalarField>> {
        self.pure_gauge.as_ref()
    }

    fn chi(&self, r: f64, theta: f64) -> f64 {
        self.pure_gauge.as_ref().map_or(0.0, |c| c.value(r, theta))
    }
}

/// (A_r, A_θ) at q.
pub fn connection_components(conn: &FlatConnection, q: &PolarPoint) -> (f64, f64) {
    connection_at(conn, q.r, q.theta)
}

fn connection_at(conn: &FlatConnection, r: f64, theta: f64) -> (f64, f64) {
    let flux = conn.hbar * conn.lambda;
    match &conn.pure_gauge {
        None => (0.0, flux),
        Some(chi) => {
            let (gr, gt) = chi.gradient(r, theta);
            (gr, flux + gt)
        }
    }
}

/// Adds dχ to the connection.
pub fn gauge_transform(conn: &FlatConnection, chi: Arc<dyn ScalarField>) -> FlatConnection {
    let pure_gauge = match &conn.pure_gauge {
        None => chi,
        Some(old) => Arc::new(SumField(old.clone(), chi)),
    };
    FlatConnection { pure_gauge: Some(pure_gauge), chi_source: None, ..conn.clone() }
}

/// Adds dχ for an expression χ, keeping the JSON form available.
pub fn gauge_transform_expr(conn: &FlatConnection, chi: Expr) -> FlatConnection {
    let source = match (&conn.pure_gauge, &conn.chi_source) {
        (None, _) => Some(chi.source().to_string()),
        (Some(_), Some(old)) => Some(format!("({old}) + ({})", chi.source())),
        (Some(_), None) => None,
    };
    let mut out = gauge_transform(conn, Arc::new(chi));
    out.chi_source = source;
    out
}

/// λ mod 1 in [0, 1).
pub fn holonomy_class(conn: &FlatConnection) -> f64 {
    let c = conn.lambda.rem_euclid(1.0);
    if c >= 1.0 {
        0.0
    } else {
        c
    }
}

/// Polygonal path through polar vertices; each segment turns by less than π.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    vertices: Vec<PolarPoint>,
    closed: bool,
    steps: Vec<f64>,
}

/// Angular step from a to b wrapped into (−π, π].
fn wrapped_step(a: &PolarPoint, b: &PolarPoint) -> f64 {
    let mut d = (b.theta - a.theta).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d
}

impl DiscretePath {
    pub fn new(vertices: Vec<PolarPoint>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Input("a path needs at least two vertices".into()));
        }
        if closed && vertices.first() != vertices.last() {
            return Err(Error::Input("closed path must end at its first vertex".into()));
        }
        let mut steps = Vec::with_capacity(vertices.len() - 1);
        for (i, w) in vertices.windows(2).enumerate() {
            let d = wrapped_step(&w[0], &w[1]);
            if d.abs() >= PI - 1e-12 {
                return Err(Error::Input(format!(
                    "segment {i} turns by {d:.6} rad around the origin; it crosses the origin or its winding is ambiguous"
                )));
            }
            steps.push(d);
        }
        Ok(Self { vertices, closed, steps })
    }

    /// Circle of radius r traversed `turns` times (negative = clockwise),
    /// starting at angle θ0, with `per_turn` segments per revolution.
    pub fn circle(r: f64, theta0: f64, turns: i64, per_turn: usize) -> Result<Self> {
        if turns == 0 || per_turn < 3 {
            return Err(Error::Input("circle needs turns != 0 and at least 3 segments per turn".into()));
        }
        let n = per_turn * turns.unsigned_abs() as usize;
        let dir = turns.signum() as f64;
        let mut v = Vec::with_capacity(n + 1);
        for k in 0..n {
            v.push(PolarPoint::new(r, theta0 + dir * TAU * k as f64 / per_turn as f64)?);
        }
        v.push(v[0]);
        Self::new(v, true)
    }

    /// The standard path from q0 = (1, 0): radially to (r, 0), then
    /// counter-clockwise through the stored angle θ ∈ [0, 2π).
    pub fn standard_to(q: &PolarPoint) -> Result<Self> {
        let base = PolarPoint::new(1.0, 0.0)?;
        let mut v = vec![base];
        let corner = PolarPoint::new(q.r, 0.0)?;
        v.push(corner);
        let n = (q.theta / (0.5 * PI)).ceil().max(1.0) as usize;
        for k in 1..n {
            v.push(PolarPoint::new(q.r, q.theta * k as f64 / n as f64)?);
        }
        v.push(*q);
        Self::new(v, false)
    }

    /// Joins `self` (ending at p) with `other` (starting at p).
    pub fn concat(&self, other: &DiscretePath) -> Result<Self> {
        if self.end() != other.start() {
            return Err(Error::Input("paths do not share the joining vertex".into()));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        let closed = v.first() == v.last();
        Self::new(v, closed)
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self::new(v, self.closed).expect("reversal preserves validity")
    }

    pub fn vertices(&self) -> &[PolarPoint] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn start(&self) -> PolarPoint {
        self.vertices[0]
    }

    pub fn end(&self) -> PolarPoint {
        *self.vertices.last().unwrap()
    }

    /// Σ Δθ over the segments.
    pub fn total_angle(&self) -> f64 {
        self.steps.iter().sum()
    }
}

/// Phase φ with holonomy = e^{iφ}: −(1/ħ) ∫ A·dq.
pub fn holonomy_phase(conn: &FlatConnection, path: &DiscretePath) -> f64 {
    let flux = -conn.lambda * path.total_angle();
    match &conn.pure_gauge {
        None => flux,
        Some(_) => {
            // χ along a continuous lift of the angle, so multivalued χ would be
            // integrated correctly as well
            let start = path.vertices[0];
            let lifted_end = start.theta + path.total_angle();
            let end = path.end();
            flux - (conn.chi(end.r, lifted_end) - conn.chi(start.r, start.theta)) / conn.hbar
        }
    }
}

/// exp(−(i/ħ) ∫_path A·dq).
pub fn holonomy(conn: &FlatConnection, path: &DiscretePath) -> Complex64 {
    Complex64::cis(holonomy_phase(conn, path))
}

/// Number of counter-clockwise turns of a closed path around the origin.
pub fn winding_number(path: &DiscretePath) -> Result<i64> {
    if !path.closed {
        return Err(Error::Input("winding number needs a closed path".into()));
    }
    Ok((path.total_angle() / TAU).round() as i64)
}

/// Rectangular (r, θ) sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    r: Vec<f64>,
    theta: Vec<f64>,
}

impl PolarGrid {
    pub fn new(r: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if r.len() < 3 || theta.len() < 3 {
            return Err(Error::Input("flatness grid needs at least 3 nodes per axis".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|x| x.is_finite());
        if !increasing(&r) || !increasing(&theta) || r[0] <= 0.0 {
            return Err(Error::Input("grid axes must be finite, strictly increasing, with r > 0".into()));
        }
        Ok(Self { r, theta })
    }

    pub fn uniform(r_range: (f64, f64), n_r: usize, theta_range: (f64, f64), n_theta: usize) -> Result<Self> {
        let axis = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            if n < 2 {
                return vec![a; n];
            }
            (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
        };
        Self::new(axis(r_range, n_r), axis(theta_range, n_theta))
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Samples (A_r, A_θ) of a connection at the nodes, row-major in r.
    pub fn sample(&self, conn: &FlatConnection) -> (Vec<f64>, Vec<f64>) {
        let mut ar = Vec::with_capacity(self.r.len() * self.theta.len());
        let mut at = Vec::with_capacity(ar.capacity());
        for &r in &self.r {
            for &t in &self.theta {
                let (a, b) = connection_at(conn, r, t);
                ar.push(a);
                at.push(b);
            }
        }
        (ar, at)
    }
}

/// max over grid cells of |∂_r A_θ − ∂_θ A_r|, estimated at each cell centre
/// by the compact central difference (circulation around the cell)/(Δr Δθ).
/// The edge integrals of the connection are exact, so a flat connection
/// gives zero up to rounding.
pub fn flatness_residual(conn: &FlatConnection, grid: &PolarGrid) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..grid.r.len() - 1 {
        let (r0, r1) = (grid.r[i], grid.r[i + 1]);
        for j in 0..grid.theta.len() - 1 {
            let (t0, t1) = (grid.theta[j], grid.theta[j + 1]);
            // ħλ dθ contributes equal and opposite amounts on the two angular
            // edges, so only the gauge part can circulate
            let gauge_part = (conn.chi(r1, t0) - conn.chi(r0, t0))
                + (conn.chi(r1, t1) - conn.chi(r1, t0))
                + (conn.chi(r0, t1) - conn.chi(r1, t1))
                + (conn.chi(r0, t0) - conn.chi(r0, t1));
            worst = worst.max((gauge_part / ((r1 - r0) * (t1 - t0))).abs());
        }
    }
    worst
}

/// Same estimate for a field given only by node samples (row-major in r),
/// with trapezoidal edge integrals; second order in the spacing.
pub fn flatness_residual_sampled(grid: &PolarGrid, a_r: &[f64], a_theta: &[f64]) -> Result<f64> {
    let (nr, nt) = (grid.r.len(), grid.theta.len());
    if a_r.len() != nr * nt || a_theta.len() != nr * nt {
        return Err(Error::Input(format!("expected {} samples per component", nr * nt)));
    }
    let at = |i: usize, j: usize| i * nt + j;
    let mut worst: f64 = 0.0;
    for i in 0..nr - 1 {
        let dr = grid.r[i + 1] - grid.r[i];
        for j in 0..nt - 1 {
            let dt = grid.theta[j + 1] - grid.theta[j];
            let d_at_dr = 0.5 * (a_theta[at(i + 1, j)] + a_theta[at(i + 1, j + 1)] - a_theta[at(i, j)] - a_theta[at(i, j + 1)]) / dr;
            let d_ar_dt = 0.5 * (a_r[at(i, j + 1)] + a_r[at(i + 1, j + 1)] - a_r[at(i, j)] - a_r[at(i + 1, j)]) / dt;
            worst = worst.max((d_at_dr - d_ar_dt).abs());
        }
    }
    Ok(worst)
}
