use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::checks::{run_checks, CheckConfig};
use super::config::{self, FlowConfig, Method, PathintConfig, PropagateConfig, SpectrumConfig, WavefnConfig};
use super::output::Table;
use super::{CliError, Format, Output};
use crate::error::Error;
use crate::hilbert::RadialGrid;
use crate::models::{
    alpha_abs, free_wavefunction, oscillator_grid, oscillator_wavefunction, periodicity_defect, spectral_flow,
    ScatteringLabel, SpectralFlowRow, R_MIN,
};
use crate::propagators::{
    parse_request_batch, propagator_closed_free, propagator_closed_oscillator, propagator_direct_sum_oscillator,
    propagator_pathintegral_with, propagator_spectral_free, propagator_spectral_oscillator, wick_extrapolate,
    ContourKind, PropagatorRecord, PropagatorRequest, PropagatorValue, TimeContour,
};

pub(super) fn dispatch(name: &str, value: Value) -> Result<Output, CliError> {
    match name {
        "spectrum" => spectrum(config::parse(value)?),
        "flow" => flow(config::parse(value)?),
        "wavefn" => wavefn(config::parse(value)?),
        "propagate" => propagate(config::parse(value)?),
        "pathint" => pathint(config::parse(value)?),
        "check" => check(config::parse(value)?),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

fn level_table(rows: &[SpectralFlowRow]) -> Table {
    let mut t = Table::new(&["lambda", "n_r", "ell", "energy", "complete"]);
    for row in rows {
        for l in &row.levels {
            t.push(vec![row.lambda.into(), l.n_r.into(), l.ell.into(), l.energy.into(), (l.energy < row.complete_below).into()]);
        }
    }
    t
}

fn spectrum(cfg: SpectrumConfig) -> Result<Output, CliError> {
    let mut lambdas = cfg.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    let rows = spectral_flow(&lambdas, &cfg.params, &cfg.window)?;
    let table = level_table(&rows);
    let json = table.to_json();
    Ok(Output { table, json, default_format: Format::Csv, failure: None })
}

fn flow(cfg: FlowConfig) -> Result<Output, CliError> {
    if cfg.points < 2 || !(cfg.lambda_max > cfg.lambda_min) {
        return Err(CliError::Config("flow needs points >= 2 and lambda_max > lambda_min".into()));
    }
    let step = (cfg.lambda_max - cfg.lambda_min) / (cfg.points - 1) as f64;
    let lambdas: Vec<f64> = (0..cfg.points).map(|k| cfg.lambda_min + step * k as f64).collect();
    let rows = spectral_flow(&lambdas, &cfg.params, &cfg.window)?;
    let mut periodicity = Vec::new();
    for &l in lambdas.iter().filter(|&&l| l + 1.0 <= cfg.lambda_max + 1e-12) {
        let defect = periodicity_defect(&cfg.params, l, &cfg.window)?;
        periodicity.push(json!({"lambda": l, "defect": defect}));
    }
    let table = level_table(&rows);
    let json = json!({"levels": table.to_json(), "periodicity": periodicity});
    Ok(Output { table, json, default_format: Format::Csv, failure: None })
}

fn wavefn(cfg: WavefnConfig) -> Result<Output, CliError> {
    let p = &cfg.params;
    p.validate()?;
    let mode = if p.omega > 0.0 {
        if cfg.energy.is_some() {
            return Err(CliError::Config("energy is only used for omega = 0".into()));
        }
        let grid = match cfg.grid {
            Some(spec) => RadialGrid::from_spec(spec)?,
            None => oscillator_grid(p, cfg.n_r, alpha_abs(cfg.ell, cfg.lambda, p.mu), cfg.n_nodes)?,
        };
        oscillator_wavefunction(cfg.n_r, cfg.ell, p, cfg.lambda, Arc::new(grid))?
    } else {
        let energy = cfg.energy.ok_or_else(|| CliError::Config("omega = 0 needs a scattering energy".into()))?;
        let label = ScatteringLabel { energy, ell: cfg.ell };
        let grid = match cfg.grid {
            Some(spec) => RadialGrid::from_spec(spec)?,
            None => {
                if !(energy > 0.0) {
                    return Err(CliError::Config("energy = 0 needs an explicit grid".into()));
                }
                let len = p.hbar / (2.0 * p.mass * energy).sqrt();
                RadialGrid::log(R_MIN * len, 50.0 * len, cfg.n_nodes)?
            }
        };
        free_wavefunction(&label, p, cfg.lambda, Arc::new(grid))?
    };
    let mut table = Table::new(&["r", "re", "im"]);
    for (r, f) in mode.grid().nodes().iter().zip(mode.samples()) {
        table.push(vec![(*r).into(), f.re.into(), f.im.into()]);
    }
    Ok(Output { table, json: mode.to_json(), default_format: Format::Csv, failure: None })
}

fn evaluate(req: &PropagatorRequest, cfg: &PropagateConfig) -> Result<PropagatorValue, Error> {
    let p = &req.params;
    match cfg.method {
        Method::Spectral if p.omega > 0.0 => propagator_spectral_oscillator(req),
        Method::Spectral => propagator_spectral_free(req),
        Method::Direct => propagator_direct_sum_oscillator(req, cfg.n_r_cutoff),
        Method::Closed => {
            if req.lambda != 0.0 || p.mu != 0.0 || p.nu != 0.0 {
                return Err(Error::Input("closed forms need lambda = mu = nu = 0".into()));
            }
            let value = if p.omega > 0.0 {
                propagator_closed_oscillator(&req.q_f, &req.q_i, req.delta_t, req.contour, p)?
            } else {
                if !req.contour.is_damped() {
                    return Err(Error::Contour("the free kernel needs a euclidean or wick contour".into()));
                }
                propagator_closed_free(&req.q_f, &req.q_i, req.delta_t, req.contour, p)?
            };
            Ok(PropagatorValue { value, ell_cutoff: req.ell_cutoff, tail_bound: 0.0 })
        }
    }
}

struct Evaluation {
    value: PropagatorValue,
    extrapolation_error: Option<f64>,
    pathint: Option<(usize, Complex64, f64)>,
}

fn evaluate_full(req: &PropagatorRequest, cfg: &PropagateConfig) -> Result<Evaluation, Error> {
    let (value, extrapolation_error) = if cfg.extrapolate {
        if req.contour.kind == ContourKind::Euclidean {
            return Err(Error::Contour("extrapolation applies to real or wick requests".into()));
        }
        let mut tail: f64 = 0.0;
        let ext = wick_extrapolate(
            |d| {
                let v = evaluate(&req.with_contour(TimeContour::wick(d)?), cfg)?;
                tail = tail.max(v.tail_bound);
                Ok(v.value)
            },
            cfg.rel_tol,
        )?;
        (PropagatorValue { value: ext.value, ell_cutoff: req.ell_cutoff, tail_bound: tail }, Some(ext.error_estimate))
    } else {
        (evaluate(req, cfg)?, None)
    };
    let pathint = match cfg.pathint {
        None => None,
        Some(n) => {
            let v = propagator_pathintegral_with(req, n, &cfg.pathint_options)?;
            Some((n, v.value, v.resolution))
        }
    };
    Ok(Evaluation { value, extrapolation_error, pathint })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Spectral => "spectral",
        Method::Direct => "direct",
        Method::Closed => "closed",
    }
}

fn contour_name(c: &TimeContour) -> &'static str {
    match c.kind {
        ContourKind::Real => "real",
        ContourKind::Euclidean => "euclidean",
        ContourKind::Wick => "wick",
    }
}

fn propagate(cfg: PropagateConfig) -> Result<Output, CliError> {
    let requests = match (&cfg.request, &cfg.batch) {
        (Some(r), None) => vec![*r],
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
            parse_request_batch(&text)?
        }
        _ => return Err(CliError::Config("give exactly one of request and batch".into())),
    };
    let mut table = Table::new(&[
        "r_i",
        "theta_i",
        "r_f",
        "theta_f",
        "delta_t",
        "lambda",
        "contour",
        "delta",
        "method",
        "value_re",
        "value_im",
        "ell_cutoff",
        "tail_bound",
        "extrapolation_error",
        "pathint_slices",
        "pathint_re",
        "pathint_im",
        "difference",
    ]);
    let mut records = Vec::new();
    for req in &requests {
        let ev = evaluate_full(req, &cfg)?;
        let mut rec = serde_json::to_value(PropagatorRecord::new(req, &ev.value)).expect("serializable record");
        rec["method"] = json!(method_name(cfg.method));
        if let Some(e) = ev.extrapolation_error {
            rec["extrapolation_error"] = json!(e);
        }
        let diff = ev.pathint.map(|(_, v, _)| (v - ev.value.value).norm());
        if let Some((n, v, res)) = ev.pathint {
            rec["pathint"] = json!({
                "n_slices": n, "value_re": v.re, "value_im": v.im,
                "difference": diff, "resolution": res,
            });
        }
        records.push(rec);
        table.push(vec![
            req.q_i.r().into(),
            req.q_i.theta().into(),
            req.q_f.r().into(),
            req.q_f.theta().into(),
            req.delta_t.into(),
            req.lambda.into(),
            contour_name(&req.contour).into(),
            req.contour.delta.into(),
            method_name(cfg.method).into(),
            ev.value.value.re.into(),
            ev.value.value.im.into(),
            ev.value.ell_cutoff.into(),
            ev.value.tail_bound.into(),
            ev.extrapolation_error.into(),
            ev.pathint.map(|p| p.0).into(),
            ev.pathint.map(|p| p.1.re).into(),
            ev.pathint.map(|p| p.1.im).into(),
            diff.into(),
        ]);
    }
    Ok(Output { table, json: Value::Array(records), default_format: Format::Json, failure: None })
}

fn pathint(cfg: PathintConfig) -> Result<Output, CliError> {
    let req = cfg.request.ok_or_else(|| CliError::Config("pathint needs a request".into()))?;
    if cfg.n_slices.is_empty() {
        return Err(CliError::Config("n_slices is empty".into()));
    }
    let reference = if req.params.omega > 0.0 {
        propagator_spectral_oscillator(&req)?
    } else {
        propagator_spectral_free(&req)?
    };
    let mut table = Table::new(&["n_slices", "value_re", "value_im", "abs_err", "rel_err", "order", "resolution"]);
    let mut prev: Option<(usize, f64)> = None;
    for &n in &cfg.n_slices {
        let v = propagator_pathintegral_with(&req, n, &cfg.options)?;
        let err = (v.value - reference.value).norm();
        let order = match prev {
            Some((m, e)) if m * 2 == n => Some((e / err).log2()),
            _ => None,
        };
        table.push(vec![
            n.into(),
            v.value.re.into(),
            v.value.im.into(),
            err.into(),
            (err / reference.value.norm()).into(),
            order.into(),
            v.resolution.into(),
        ]);
        prev = Some((n, err));
    }
    let json = json!({
        "reference": {"value_re": reference.value.re, "value_im": reference.value.im, "tail_bound": reference.tail_bound},
        "rows": table.to_json(),
    });
    Ok(Output { table, json, default_format: Format::Csv, failure: None })
}

fn check(cfg: CheckConfig) -> Result<Output, CliError> {
    let report = run_checks(&cfg)?;
    let mut table = Table::new(&["name", "residual", "tolerance", "passed"]);
    for c in &report.checks {
        table.push(vec![c.name.as_str().into(), c.residual.into(), c.tolerance.into(), c.passed.into()]);
    }
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} (residual {:e} vs tolerance {:e})", c.name, c.residual, c.tolerance))
        .collect();
    let failure = (!failed.is_empty()).then(|| format!("failed checks: {}", failed.join("; ")));
    let json = serde_json::to_value(&report).expect("serializable report");
    Ok(Output { table, json, default_format: Format::Json, failure })
}
