//! Experiment drivers behind the `ierk` binary.
//!
//! Every experiment produces a [`Report`]: a JSON summary, a main table, a
//! trace and an SVG plot, written as `report.json`, `table.csv`,
//! `trace.csv` and `plot.svg`.

mod config;
mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{
    Experiment, ExperimentConfig, InitialCondition, MethodSpec, ReferenceSpec, ScanSpec,
};
pub use plot::{line_plot, Axes, Series};

use crate::dissipation::{
    average_rate, certify, scan_parameter, DissipationCertificate, ScanReport, DEFAULT_PSD_TOL,
    DEFAULT_Z_SAMPLES,
};
use crate::error::{IerkError, Result};
use crate::integrator::{evolve, evolve_with, EnergyTrace};
use crate::spectral::{coarsening_initial_value, Field, SourceTerm, SpectralSystem};
use crate::tableau::{check_order_conditions, registry, ImexTableau, MethodId, OrderReport};

/// Relative per-stage energy increase tolerated in a monotone run.
pub const MONOTONE_REL_TOL: f64 = 1e-9;
/// Step size of the reference runs behind the deviation metric.
pub const REFERENCE_TAU: f64 = 1e-3;

const DEFAULT_EVOLVE_TAU: f64 = 0.01;
const DEFAULT_EVOLVE_T: f64 = 150.0;
const DEFAULT_CONVERGE_T: f64 = 1.0;

/// Results of one experiment, ready to be written out.
#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: Experiment,
    pub passed: bool,
    pub summary: Value,
    pub table_csv: String,
    pub trace_csv: String,
    pub plot_svg: String,
    /// Per-stage energies of an evolve run, when requested.
    pub stage_csv: Option<String>,
}

impl Report {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            (
                "report.json",
                serde_json::to_string_pretty(&self.summary)? + "\n",
            ),
            ("table.csv", self.table_csv.clone()),
            ("trace.csv", self.trace_csv.clone()),
            ("plot.svg", self.plot_svg.clone()),
        ];
        if let Some(s) = &self.stage_csv {
            files.push(("stages.csv", s.clone()));
        }
        files
            .into_iter()
            .map(|(name, body)| {
                let p = dir.join(name);
                std::fs::write(&p, body)?;
                Ok(p)
            })
            .collect()
    }
}

/// Runs whatever experiment `cfg` names.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.experiment {
        Experiment::Verify => verify_report(cfg),
        Experiment::Certify => certify_report(cfg),
        Experiment::Scan => scan_report(cfg),
        Experiment::RateTable => Ok(rate_table_report(&run_rate_table()?)),
        Experiment::Converge => Ok(converge_report(&run_converge(cfg)?)),
        Experiment::Evolve => Ok(evolve_report(&run_evolve(cfg)?)),
    }
}

/// Short form of a parameter value: small fractions stay exact, long ones
/// (typically decimal input) print as floats.
fn compact(v: &crate::Scalar) -> String {
    match v.as_rational() {
        Some(r) if r.denom().bits() > 20 => v.to_f64().to_string(),
        _ => v.to_string(),
    }
}

fn params_string(t: &ImexTableau) -> String {
    t.params
        .iter()
        .map(|(k, v)| format!("{k}={}", compact(v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn label(t: &ImexTableau) -> String {
    if t.params.is_empty() {
        t.name.clone()
    } else {
        format!("{}({})", t.name, params_string(t))
    }
}

// ---------------------------------------------------------------- verify

/// Order-condition tolerance: tight for exact and closed-form tableaux, loose
/// enough for the fourth-order ones whose tabulated coefficients only satisfy
/// the conditions to about 1e-6.
pub fn default_order_tol(t: &ImexTableau) -> f64 {
    if t.formal_order >= 4 {
        2e-6
    } else {
        1e-10
    }
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<(ImexTableau, OrderReport)> {
    let t = cfg.method.resolve()?;
    let tol = cfg.tol.unwrap_or_else(|| default_order_tol(&t));
    let report = check_order_conditions(&t, tol);
    Ok((t, report))
}

fn verify_report(cfg: &ExperimentConfig) -> Result<Report> {
    let (t, rep) = run_verify(cfg)?;
    let passed = rep.attained_order >= t.formal_order;
    let mut table = String::from("order,kind,label,residual,exact_zero\n");
    for c in &rep.conditions {
        writeln!(
            table,
            "{},{:?},{},{},{}",
            c.order, c.kind, c.label, c.residual, c.exact_zero
        )
        .unwrap();
    }
    let mut trace = String::from("order,max_residual\n");
    for (p, r) in rep.max_residual.iter().enumerate() {
        writeln!(trace, "{},{r}", p + 1).unwrap();
    }
    let pts = rep
        .max_residual
        .iter()
        .enumerate()
        .map(|(p, r)| ((p + 1) as f64, r.max(1e-300)))
        .collect();
    let plot = line_plot(
        &format!("order-condition residuals, {}", label(&t)),
        "order",
        "max residual",
        Axes {
            log_x: false,
            log_y: true,
        },
        &[Series::new(label(&t), pts)],
    );
    Ok(Report {
        experiment: Experiment::Verify,
        passed,
        summary: json!({
            "experiment": "verify",
            "method": t.name,
            "params": params_json(&t),
            "formal_order": t.formal_order,
            "attained_order": rep.attained_order,
            "tol": rep.tol,
            "max_residual": rep.max_residual,
            "outside_certified_range": t.outside_certified_range,
            "passed": passed,
        }),
        table_csv: table,
        trace_csv: trace,
        plot_svg: plot,
        stage_csv: None,
    })
}

fn params_json(t: &ImexTableau) -> Value {
    Value::Object(
        t.params
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::to_value(v).unwrap_or(Value::Null)))
            .collect(),
    )
}

// ---------------------------------------------------------------- certify

pub fn run_certify(cfg: &ExperimentConfig) -> Result<DissipationCertificate> {
    let t = cfg.method.resolve()?;
    let z = cfg.z_samples.as_deref().unwrap_or(&DEFAULT_Z_SAMPLES);
    certify(&t, cfg.tol.unwrap_or(DEFAULT_PSD_TOL), z)
}

fn certify_report(cfg: &ExperimentConfig) -> Result<Report> {
    let cert = run_certify(cfg)?;
    let mut table = String::from("matrix,index,eigenvalue\n");
    for (name, check) in [("D_E", &cert.de), ("D_EI", &cert.dei)] {
        for (i, e) in check.eigenvalues.iter().enumerate() {
            writeln!(table, "{name},{},{e}", i + 1).unwrap();
        }
    }
    let mut trace = String::from("z,min_eigenvalue,negative\n");
    for s in &cert.z_samples {
        writeln!(trace, "{},{},{}", s.z, s.min_eigenvalue, s.negative).unwrap();
    }
    let pts = cert
        .z_samples
        .iter()
        .map(|s| (-s.z, s.min_eigenvalue))
        .collect();
    let plot = line_plot(
        &format!(
            "smallest eigenvalue of the symmetric part of D(z), {}",
            cert.method
        ),
        "-z",
        "min eigenvalue",
        Axes {
            log_x: true,
            log_y: false,
        },
        &[Series::new(cert.method.clone(), pts)],
    );
    let mut summary = cert.to_json();
    summary["experiment"] = json!("certify");
    summary["passed"] = json!(cert.certified);
    Ok(Report {
        experiment: Experiment::Certify,
        passed: cert.certified,
        summary,
        table_csv: table,
        trace_csv: trace,
        plot_svg: plot,
        stage_csv: None,
    })
}

// ---------------------------------------------------------------- scan

pub fn run_scan(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let spec = cfg
        .scan
        .as_ref()
        .ok_or_else(|| IerkError::Config("scan needs a `scan` section".into()))?;
    let family = cfg
        .method
        .method_id()?
        .ok_or_else(|| IerkError::Config("scan needs a registry method id".into()))?;
    scan_parameter(
        family,
        &spec.symbol,
        &cfg.method.param_map()?,
        (spec.range[0], spec.range[1]),
        spec.step,
        cfg.tol.unwrap_or(DEFAULT_PSD_TOL),
        spec.target,
    )
}

fn scan_report(cfg: &ExperimentConfig) -> Result<Report> {
    let rep = run_scan(cfg)?;
    let mut table = String::from("value,certified\n");
    for p in &rep.points {
        let c = match p.certified {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        writeln!(table, "{},{c}", p.value).unwrap();
    }
    let mut trace = String::from("lo,hi\n");
    for [lo, hi] in &rep.intervals {
        writeln!(trace, "{lo},{hi}").unwrap();
    }
    let pts = rep
        .points
        .iter()
        .filter_map(|p| Some((p.value, if p.certified? { 1.0 } else { 0.0 })))
        .collect();
    let plot = line_plot(
        &format!("certified region of {} in {}", rep.family, rep.symbol),
        &rep.symbol,
        "certified",
        Axes::default(),
        &[Series::new(rep.family.name(), pts)],
    );
    let passed = !rep.intervals.is_empty();
    Ok(Report {
        experiment: Experiment::Scan,
        passed,
        summary: json!({
            "experiment": "scan",
            "method": rep.family.name(),
            "symbol": rep.symbol,
            "step": rep.step,
            "target": rep.target,
            "intervals": rep.intervals,
            "widest_interval": rep.widest_interval(),
            "skipped": rep.skipped,
            "points": rep.points.len(),
            "passed": passed,
        }),
        table_csv: table,
        trace_csv: trace,
        plot_svg: plot,
        stage_csv: None,
    })
}

// ---------------------------------------------------------------- rate table

#[derive(Clone, Debug, Serialize)]
pub struct RateRow {
    pub method: String,
    pub params: String,
    pub intercept: f64,
    pub slope: f64,
    pub certified: bool,
}

/// Average dissipation rate of every registry method at its preferred
/// parameters.
pub fn run_rate_table() -> Result<Vec<RateRow>> {
    MethodId::ALL
        .iter()
        .map(|&id| {
            let t = registry(id, &id.preferred_params())?;
            let rate = average_rate(&t)?;
            let cert = certify(&t, DEFAULT_PSD_TOL, &DEFAULT_Z_SAMPLES)?;
            Ok(RateRow {
                method: t.name.clone(),
                params: params_string(&t),
                intercept: rate.intercept.to_f64(),
                slope: rate.slope.to_f64(),
                certified: cert.certified,
            })
        })
        .collect()
}

fn rate_table_report(rows: &[RateRow]) -> Report {
    let mut table = String::from("method,params,intercept,slope,certified\n");
    for r in rows {
        writeln!(
            table,
            "{},{},{},{},{}",
            r.method, r.params, r.intercept, r.slope, r.certified
        )
        .unwrap();
    }
    let grid: Vec<f64> = (0..=40)
        .map(|i| 10f64.powf(-3.0 + 0.1 * i as f64))
        .collect();
    let mut trace = String::from("method,tau_lambda,rate\n");
    let mut series = Vec::new();
    for r in rows {
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .map(|&z| (z, r.intercept + r.slope * z))
            .collect();
        for (z, v) in &pts {
            writeln!(trace, "{},{z},{v}", r.method).unwrap();
        }
        series.push(Series::new(r.method.clone(), pts));
    }
    let plot = line_plot(
        "average dissipation rate",
        "tau lambda",
        "rate",
        Axes {
            log_x: true,
            log_y: true,
        },
        &series,
    );
    Report {
        experiment: Experiment::RateTable,
        passed: true,
        summary: json!({ "experiment": "rate-table", "rows": rows, "passed": true }),
        table_csv: table,
        trace_csv: trace,
        plot_svg: plot,
        stage_csv: None,
    }
}

// ---------------------------------------------------------------- converge

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub n_steps: usize,
    /// `max_n |u^n - u(t_n)|_inf`, or `None` if the run failed.
    pub error: Option<f64>,
    /// `log(e_prev / e) / log(tau_prev / tau)` against the previous row.
    pub order: Option<f64>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub error_history: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub method: String,
    pub params: String,
    pub kappa: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Median observed order over the last `pairs` adjacent pairs with
    /// `tau >= min_tau` whose errors are finite and above `floor`.
    pub fn asymptotic_order(&self, pairs: usize, min_tau: f64, floor: f64) -> Option<f64> {
        let usable = |r: &ConvergenceRow| {
            r.tau >= min_tau && r.error.is_some_and(|e| e.is_finite() && e > floor)
        };
        let mut orders: Vec<f64> = self
            .rows
            .windows(2)
            .filter(|w| usable(&w[0]) && usable(&w[1]))
            .filter_map(|w| w[1].order)
            .collect();
        if orders.is_empty() {
            return None;
        }
        let n = orders.len();
        let mut tail = orders.split_off(n.saturating_sub(pairs));
        tail.sort_by(f64::total_cmp);
        let k = tail.len();
        Some(if k % 2 == 1 {
            tail[k / 2]
        } else {
            0.5 * (tail[k / 2 - 1] + tail[k / 2])
        })
    }
}

/// `2^-k / 10` for `k = 0..=9`.
pub fn default_tau_grid() -> Vec<f64> {
    (0..10).map(|k| 0.1 / f64::from(1u32 << k)).collect()
}

fn steps_for(t_final: f64, tau: f64) -> usize {
    (t_final / tau + 1e-9).floor() as usize
}

fn convergence_row(
    sys: &SpectralSystem,
    t: &ImexTableau,
    tau: f64,
    t_final: f64,
) -> ConvergenceRow {
    let n_steps = steps_for(t_final, tau);
    let u0 = sys.manufactured_exact(0.0);
    let mut history = vec![(0.0, 0.0)];
    let mut err = 0.0f64;
    let outcome =
        crate::integrator::evolve_with(sys, t, &u0, 0.0, tau, n_steps, false, |n, rec| {
            let tn = n as f64 * tau;
            let e = rec.solution().max_abs_diff(&sys.manufactured_exact(tn));
            err = err.max(e);
            history.push((tn, e));
        });
    let (error, failure) = match outcome {
        Ok(_) => (Some(err), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ConvergenceRow {
        tau,
        n_steps,
        error,
        order: None,
        failure,
        error_history: history,
    }
}

pub fn run_converge(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    let t = cfg.method.resolve()?;
    let spectral = cfg.spectral_or_default();
    if spectral.source != SourceTerm::Manufactured {
        return Err(IerkError::Config(
            "convergence runs need the manufactured source".into(),
        ));
    }
    let sys = spectral.build()?;
    let grid = cfg.tau_grid.clone().unwrap_or_else(default_tau_grid);
    if grid.is_empty() || grid.iter().any(|&x| !(x > 0.0)) || grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(IerkError::Config(
            "tau grid must be positive and strictly decreasing".into(),
        ));
    }
    let t_final = cfg.t_final.unwrap_or(DEFAULT_CONVERGE_T);
    let mut rows: Vec<ConvergenceRow> = grid
        .par_iter()
        .map(|&tau| convergence_row(&sys, &t, tau, t_final))
        .collect();
    for i in 1..rows.len() {
        if let (Some(e0), Some(e1)) = (rows[i - 1].error, rows[i].error) {
            if e0 > 0.0 && e1 > 0.0 {
                rows[i].order = Some((e0 / e1).ln() / (rows[i - 1].tau / rows[i].tau).ln());
            }
        }
    }
    Ok(ConvergenceTable {
        method: t.name.clone(),
        params: params_string(&t),
        kappa: sys.kappa,
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn converge_report(table: &ConvergenceTable) -> Report {
    let mut csv = String::from("tau,n_steps,error,order\n");
    for r in &table.rows {
        writeln!(
            csv,
            "{},{},{},{}",
            r.tau,
            r.n_steps,
            opt(r.error),
            opt(r.order)
        )
        .unwrap();
    }
    let mut trace = String::from("tau,t,error\n");
    for r in &table.rows {
        for (t, e) in &r.error_history {
            writeln!(trace, "{},{t},{e}", r.tau).unwrap();
        }
    }
    let pts = table
        .rows
        .iter()
        .filter_map(|r| Some((r.tau, r.error?)))
        .collect();
    let name = if table.params.is_empty() {
        table.method.clone()
    } else {
        format!("{}({})", table.method, table.params)
    };
    let plot = line_plot(
        &format!("max-norm error, {name}"),
        "tau",
        "error",
        Axes {
            log_x: true,
            log_y: true,
        },
        &[Series::new(name.clone(), pts)],
    );
    let passed = table.rows.iter().all(|r| r.failure.is_none());
    Report {
        experiment: Experiment::Converge,
        passed,
        summary: json!({
            "experiment": "converge",
            "method": table.method,
            "params": table.params,
            "kappa": table.kappa,
            "rows": table.rows,
            "asymptotic_order": table.asymptotic_order(3, 0.0, 1e-12),
            "passed": passed,
        }),
        table_csv: csv,
        trace_csv: trace,
        plot_svg: plot,
        stage_csv: None,
    }
}

// ---------------------------------------------------------------- evolve

#[derive(Clone, Debug, Serialize)]
pub struct EvolveSummary {
    pub method: String,
    pub params: String,
    pub tau: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub n_steps: usize,
    pub initial_energy: f64,
    pub final_energy: Option<f64>,
    pub max_increase: Option<f64>,
    pub max_stage_increase: Option<f64>,
    pub max_relative_stage_increase: Option<f64>,
    pub monotone: bool,
    pub certified: bool,
    pub final_mean: f64,
    pub reference: Option<String>,
    pub deviation: Option<f64>,
    /// Where the run stopped on a non-finite value; the trace ends there.
    pub blow_up: Option<BlowUp>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlowUp {
    pub step: usize,
    pub time: f64,
}

#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    pub trace: EnergyTrace,
    pub final_field: Field,
    pub summary: EvolveSummary,
    pub reference_trace: Option<EnergyTrace>,
}

/// Reference method for the deviation metric of an order-`p` method.
pub fn default_reference(formal_order: usize) -> MethodSpec {
    match formal_order {
        0..=2 => MethodSpec::registry(MethodId::Ierk2_1, &[("c2", 1.0), ("a33", 1.0)]),
        3 => MethodSpec::registry(MethodId::Ierk3_2, &[("a43", -0.4)]),
        _ => MethodSpec::registry(MethodId::Ierk4A1, &[]),
    }
}

fn read_field_csv(path: &Path, m: usize) -> Result<Field> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IerkError::Config(format!("{}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(m);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with('x')) {
            continue;
        }
        let u = line
            .rsplit(',')
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| IerkError::Config(format!("{}: bad line {}", path.display(), i + 1)))?;
        values.push(u);
    }
    if values.len() != m {
        return Err(IerkError::SizeMismatch {
            expected: m,
            got: values.len(),
        });
    }
    Ok(Field(values))
}

pub fn initial_field(cfg: &ExperimentConfig, sys: &SpectralSystem) -> Result<Field> {
    let default = match cfg.experiment {
        Experiment::Converge => InitialCondition::Sine,
        _ => InitialCondition::Coarsening,
    };
    match cfg.initial.as_ref().unwrap_or(&default) {
        InitialCondition::Sine => Ok(sys.field_from_fn(f64::sin)),
        InitialCondition::Coarsening => Ok(sys.field_from_fn(coarsening_initial_value)),
        InitialCondition::Csv(p) => read_field_csv(p, sys.m()),
    }
}

/// Trapezoidal `int |E - E_ref| dt` over the times of `trace`, with the
/// reference energy interpolated linearly.
pub fn energy_deviation(trace: &EnergyTrace, reference: &EnergyTrace) -> f64 {
    let rt: Vec<f64> = std::iter::once(reference.t0)
        .chain(reference.times.iter().copied())
        .collect();
    let re: Vec<f64> = std::iter::once(reference.initial_energy)
        .chain(reference.energies.iter().copied())
        .collect();
    let interp = |t: f64| -> f64 {
        let i = rt.partition_point(|&x| x <= t);
        if i == 0 {
            re[0]
        } else if i >= rt.len() {
            re[rt.len() - 1]
        } else {
            let (t0, t1) = (rt[i - 1], rt[i]);
            re[i - 1] + (re[i] - re[i - 1]) * (t - t0) / (t1 - t0)
        }
    };
    let ts = std::iter::once(trace.t0).chain(trace.times.iter().copied());
    let es = std::iter::once(trace.initial_energy).chain(trace.energies.iter().copied());
    let d: Vec<(f64, f64)> = ts
        .zip(es)
        .map(|(t, e)| (t, (e - interp(t)).abs()))
        .collect();
    d.windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum()
}

pub fn run_evolve(cfg: &ExperimentConfig) -> Result<EvolveOutcome> {
    let t = cfg.method.resolve()?;
    let spectral = cfg.spectral_or_default();
    let sys = spectral.build()?;
    let tau = cfg.tau.unwrap_or(DEFAULT_EVOLVE_TAU);
    let t_final = cfg.t_final.unwrap_or(DEFAULT_EVOLVE_T);
    if !(tau > 0.0) || !(t_final >= 0.0) {
        return Err(IerkError::Config(
            "tau must be positive and t_final nonnegative".into(),
        ));
    }
    let n_steps = steps_for(t_final, tau);
    let u0 = initial_field(cfg, &sys)?;
    let mut partial = EnergyTrace::new(0.0, sys.energy(&u0), t.to_numeric().c, cfg.record_stages);
    let mut last = u0.clone();
    let outcome = evolve_with(
        &sys,
        &t,
        &u0,
        0.0,
        tau,
        n_steps,
        cfg.record_stages,
        |n, rec| {
            partial.push(n as f64 * tau, rec);
            last = rec.solution().clone();
        },
    );
    let (u, trace, blow_up) = match outcome {
        Ok((u, _)) => (u, partial, None),
        Err(IerkError::NonFinite { step, time }) => (last, partial, Some(BlowUp { step, time })),
        Err(e) => return Err(e),
    };
    let certified = certify(&t, DEFAULT_PSD_TOL, &DEFAULT_Z_SAMPLES)?.certified;

    let reference = match &cfg.reference {
        Some(_) if blow_up.is_some() => None,
        None => None,
        Some(r) => {
            let spec = r
                .method
                .clone()
                .unwrap_or_else(|| default_reference(t.formal_order));
            let rt = spec.resolve()?;
            let rtau = r.tau.unwrap_or(REFERENCE_TAU);
            let (_, rtrace) = evolve(&sys, &rt, &u0, 0.0, rtau, steps_for(t_final, rtau), false)?;
            Some((label(&rt), rtrace))
        }
    };
    let deviation = reference.as_ref().map(|(_, r)| energy_deviation(&trace, r));

    let summary = EvolveSummary {
        method: t.name.clone(),
        params: params_string(&t),
        tau,
        kappa: sys.kappa,
        epsilon: sys.epsilon,
        n_steps,
        initial_energy: trace.initial_energy,
        final_energy: trace.energies.last().copied(),
        max_increase: trace.max_increase,
        max_stage_increase: trace.max_stage_increase,
        max_relative_stage_increase: trace.max_relative_stage_increase,
        monotone: blow_up.is_none() && trace.is_monotone(MONOTONE_REL_TOL),
        blow_up,
        certified,
        final_mean: u.mean(),
        reference: reference.as_ref().map(|(n, _)| n.clone()),
        deviation,
    };
    Ok(EvolveOutcome {
        trace,
        final_field: u,
        summary,
        reference_trace: reference.map(|(_, r)| r),
    })
}

fn energy_points(trace: &EnergyTrace) -> Vec<(f64, f64)> {
    std::iter::once((trace.t0, trace.initial_energy))
        .chain(
            trace
                .times
                .iter()
                .copied()
                .zip(trace.energies.iter().copied()),
        )
        .collect()
}

fn evolve_report(out: &EvolveOutcome) -> Report {
    let s = &out.summary;
    let passed = !s.certified || s.monotone;
    let mut table = String::from(
        "method,params,tau,kappa,n_steps,initial_energy,final_energy,max_increase,max_stage_increase,max_relative_stage_increase,monotone,certified,deviation,blow_up_step\n",
    );
    writeln!(
        table,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.method,
        s.params,
        s.tau,
        s.kappa,
        s.n_steps,
        s.initial_energy,
        opt(s.final_energy),
        opt(s.max_increase),
        opt(s.max_stage_increase),
        opt(s.max_relative_stage_increase),
        s.monotone,
        s.certified,
        opt(s.deviation),
        s.blow_up.map(|b| b.step.to_string()).unwrap_or_default()
    )
    .unwrap();
    let name = if s.params.is_empty() {
        s.method.clone()
    } else {
        format!("{}({})", s.method, s.params)
    };
    let mut series = vec![Series::new(name, energy_points(&out.trace))];
    if let (Some(r), Some(n)) = (&out.reference_trace, &s.reference) {
        series.push(Series::new(format!("reference {n}"), energy_points(r)));
    }
    let plot = line_plot(
        &format!("discrete energy, tau = {}, kappa = {}", s.tau, s.kappa),
        "t",
        "E",
        Axes::default(),
        &series,
    );
    let mut summary = serde_json::to_value(s).unwrap_or(Value::Null);
    summary["experiment"] = json!("evolve");
    summary["passed"] = json!(passed);
    Report {
        experiment: Experiment::Evolve,
        passed,
        summary,
        table_csv: table,
        trace_csv: out.trace.to_csv(),
        plot_svg: plot,
        stage_csv: out.trace.stage_csv(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evolve_cfg(id: MethodId, params: &[(&str, f64)]) -> ExperimentConfig {
        ExperimentConfig::new(Experiment::Evolve).with_method(MethodSpec::registry(id, params))
    }

    #[test]
    fn tau_grid_halves() {
        let g = default_tau_grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.1);
        assert!((g[9] - 0.1 / 512.0).abs() < 1e-18);
    }

    #[test]
    fn zero_steps_give_empty_trace() {
        let mut cfg = evolve_cfg(MethodId::Ierk1, &[("theta", 0.5)]);
        cfg.tau = Some(1.0);
        cfg.t_final = Some(0.5);
        let out = run_evolve(&cfg).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.summary.n_steps, 0);
        assert!(out.summary.monotone);
        let rep = evolve_report(&out);
        assert_eq!(rep.trace_csv.lines().count(), 2);
    }

    #[test]
    fn deviation_of_identical_traces_is_zero() {
        let mut cfg = evolve_cfg(MethodId::Ierk1, &[("theta", 1.0)]);
        cfg.tau = Some(0.05);
        cfg.t_final = Some(1.0);
        let out = run_evolve(&cfg).unwrap();
        assert_eq!(energy_deviation(&out.trace, &out.trace), 0.0);
    }

    #[test]
    fn deviation_of_constant_offset() {
        let mut a = EnergyTrace::new(0.0, 1.0, vec![0.0, 1.0], false);
        a.times = vec![1.0, 2.0];
        a.energies = vec![1.0, 1.0];
        let mut b = a.clone();
        b.initial_energy = 0.5;
        b.energies = vec![0.5, 0.5];
        assert!((energy_deviation(&a, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn converge_zero_steps_sanity_row() {
        let mut cfg = ExperimentConfig::new(Experiment::Converge).with_method(
            MethodSpec::registry(MethodId::Ierk2_1, &[("c2", 1.0), ("a33", 0.5)]),
        );
        cfg.tau_grid = Some(vec![2.0]);
        let table = run_converge(&cfg).unwrap();
        assert_eq!(table.rows[0].n_steps, 0);
        assert_eq!(table.rows[0].error, Some(0.0));
    }

    #[test]
    fn rejects_increasing_grid() {
        let mut cfg = ExperimentConfig::new(Experiment::Converge)
            .with_method(MethodSpec::registry(MethodId::Ierk1, &[("theta", 1.0)]));
        cfg.tau_grid = Some(vec![0.1, 0.2]);
        assert!(matches!(run_converge(&cfg), Err(IerkError::Config(_))));
    }

    #[test]
    fn rate_table_has_every_method() {
        let rows = run_rate_table().unwrap();
        assert_eq!(rows.len(), MethodId::ALL.len());
        let radau = rows.iter().find(|r| r.method == "IERK2-Radau").unwrap();
        assert!((radau.intercept - 2.0).abs() < 1e-12);
        assert!((radau.slope - (1.5 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn median_order() {
        let row = |tau: f64, e: f64, o: Option<f64>| ConvergenceRow {
            tau,
            n_steps: 1,
            error: Some(e),
            order: o,
            failure: None,
            error_history: vec![],
        };
        let t = ConvergenceTable {
            method: "x".into(),
            params: String::new(),
            kappa: 0.0,
            rows: vec![
                row(0.4, 16.0, None),
                row(0.2, 4.0, Some(2.0)),
                row(0.1, 1.0, Some(2.0)),
                row(0.05, 0.2, Some(2.3)),
                row(0.025, 0.05, Some(2.0)),
            ],
        };
        assert_eq!(t.asymptotic_order(3, 0.0, 0.0), Some(2.0));
        assert_eq!(t.asymptotic_order(3, 0.1, 0.0), Some(2.0));
        assert_eq!(t.asymptotic_order(3, 1.0, 0.0), None);
    }
}
