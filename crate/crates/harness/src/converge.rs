//! Convergence sweeps over the number of steps, error tables and slope fits.

use std::io::{Read, Write};
use std::time::Instant;

use mkv_cubature::{builtin_formula, closed_form_example1, euler_mc, solve_with_progress, Limits, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ReferenceConfig};
use crate::HarnessError;

/// One CSV line. Failed solves leave `estimate` and `abs_error` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub estimate: Option<f64>,
    pub reference: f64,
    pub abs_error: Option<f64>,
    pub ref_stderr: f64,
    pub nodes: u128,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    pub stderr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub reference: Reference,
    pub fit: Option<LineFit>,
    pub warnings: Vec<String>,
    /// `(n, message)` for every solve that failed.
    pub failures: Vec<(usize, String)>,
}

impl ConvergenceReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Least squares line through `(ln n, ln err)`. Needs two points with
/// distinct `n` and positive errors.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<LineFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, e)| *n > 0.0 && *e > 0.0 && e.is_finite())
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        points: logs.len(),
    })
}

/// Fit over the last `window` successful rows.
pub fn fit_rows(rows: &[ConvergenceRow], window: usize) -> Option<LineFit> {
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.abs_error.map(|e| (r.n as f64, e)))
        .collect();
    let start = ok.len().saturating_sub(window);
    fit_slope(&ok[start..])
}

pub fn compute_reference(cfg: &ExperimentConfig, problem: &Problem) -> Result<Reference, HarnessError> {
    let started = Instant::now();
    let (value, stderr) = match &cfg.reference {
        ReferenceConfig::ClosedForm => {
            if problem.state_dim() != 1 || cfg.problem != "example1" {
                return Err(HarnessError::Config(format!(
                    "no closed form for problem '{}'",
                    cfg.problem
                )));
            }
            (closed_form_example1(problem.initial_state()[0], problem.horizon())?, 0.0)
        }
        ReferenceConfig::EulerMc(mc) => {
            let r = euler_mc(problem, mc)?;
            (r.estimate, r.stderr)
        }
    };
    Ok(Reference {
        value,
        stderr,
        seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn run_convergence(
    cfg: &ExperimentConfig,
    log: &(dyn Fn(&str) + Sync),
) -> Result<ConvergenceReport, HarnessError> {
    let problem = cfg.problem()?;
    let reference = compute_reference(cfg, &problem)?;
    log(&format!("reference {:.12} (stderr {:.3e})", reference.value, reference.stderr));
    run_with_reference(cfg, &problem, reference, log)
}

/// Sweep against a reference that is already known.
pub fn run_with_reference(
    cfg: &ExperimentConfig,
    problem: &Problem,
    reference: Reference,
    log: &(dyn Fn(&str) + Sync),
) -> Result<ConvergenceReport, HarnessError> {
    let formula = builtin_formula(cfg.formula.degree, cfg.formula.d)?;
    let limits = Limits {
        max_nodes: cfg.max_nodes.unwrap_or(Limits::default().max_nodes),
    };
    let method = cfg.method.method();
    let one = |n: usize| -> (ConvergenceRow, Option<String>, Option<String>) {
        let started = Instant::now();
        let mut row = ConvergenceRow {
            n,
            estimate: None,
            reference: reference.value,
            abs_error: None,
            ref_stderr: reference.stderr,
            nodes: (formula.len() as u128).saturating_pow(n as u32),
            seconds: 0.0,
        };
        let (part, warning) = match cfg.partition(problem.horizon(), n) {
            Ok(p) => p,
            Err(e) => return (row, None, Some(e.to_string())),
        };
        let mut progress = |p: &mkv_cubature::tree::Progress<'_>| {
            if !cfg.parallel_sweep {
                log(&format!("  n={n} level {}/{} ({} nodes)", p.level, p.steps, p.nodes));
            }
        };
        let result = solve_with_progress(problem, &formula, &part, method, &cfg.ode, &limits, &mut progress);
        row.seconds = started.elapsed().as_secs_f64();
        match result {
            Ok(r) => {
                row.estimate = Some(r.estimate);
                row.abs_error = Some((r.estimate - reference.value).abs());
                row.nodes = r.node_count;
                (row, warning, None)
            }
            Err(e) => (row, warning, Some(e.to_string())),
        }
    };
    let results: Vec<_> = if cfg.parallel_sweep {
        cfg.sweep.par_iter().map(|&n| one(n)).collect()
    } else {
        cfg.sweep
            .iter()
            .map(|&n| {
                let out = one(n);
                match (&out.0.abs_error, &out.2) {
                    (Some(e), _) => log(&format!("n={n} error {e:.6e} ({:.2}s)", out.0.seconds)),
                    (None, Some(msg)) => log(&format!("n={n} FAILED: {msg}")),
                    (None, None) => {}
                }
                out
            })
            .collect()
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for (row, warning, failure) in results {
        warnings.extend(warning);
        if let Some(msg) = failure {
            failures.push((row.n, msg));
        }
        rows.push(row);
    }
    let fit = fit_rows(&rows, cfg.fit_window);
    Ok(ConvergenceReport {
        rows,
        reference,
        fit,
        warnings,
        failures,
    })
}

pub fn write_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ConvergenceRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}
