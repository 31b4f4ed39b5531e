//! Pathwise ODE `dX = sum_i V_i(X, E_i(t)) dw^i(t)` along a piecewise-linear
//! control, integrated piece by piece with step-doubling RK4 and local
//! extrapolation.

use serde::{Deserialize, Serialize};

use crate::cubature::PiecewiseLinearPath;
use crate::error::{Error, Result};
use crate::model::Problem;
use crate::poly::ScalarPolynomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Accepted plus rejected steps allowed per call.
    pub max_substeps: usize,
    /// First trial step on each linear piece, as a fraction of its length.
    pub initial_substep: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_substeps: 100_000,
            initial_substep: 1.0,
        }
    }
}

impl OdeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol >= 0.0
            && self.max_substeps > 0
            && self.initial_substep > 0.0
            && self.initial_substep <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad ODE configuration {self:?}")))
        }
    }
}

/// One linear piece of a control: `dw^0 = dt`, `dw^i = slope_i dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub slopes: Vec<f64>,
}

/// A piecewise-linear control path prepared for integration.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    pieces: Vec<Piece>,
}

impl ControlPath {
    pub fn new(path: &PiecewiseLinearPath<f64>) -> Self {
        let pieces = path
            .segments()
            .map(|seg| {
                let dt = seg.end - seg.start;
                Piece {
                    start: seg.start,
                    end: seg.end,
                    slopes: seg.increment.iter().map(|v| v / dt).collect(),
                }
            })
            .collect();
        Self { pieces }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].start
    }

    pub fn end(&self) -> f64 {
        self.pieces.last().unwrap().end
    }
}

/// Reusable scratch space for [`OdeSolver::integrate`].
#[derive(Debug, Clone)]
pub struct OdeSolver {
    cfg: OdeConfig,
    n: usize,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    field: Vec<f64>,
    scalars: Vec<f64>,
    full: Vec<f64>,
    half: Vec<f64>,
    mid: Vec<f64>,
}

impl OdeSolver {
    pub fn new(cfg: OdeConfig, state_dim: usize) -> Self {
        let v = || vec![0.0; state_dim];
        Self {
            cfg,
            n: state_dim,
            k: [v(), v(), v(), v()],
            tmp: v(),
            field: v(),
            scalars: Vec::new(),
            full: v(),
            half: v(),
            mid: v(),
        }
    }

    pub fn config(&self) -> &OdeConfig {
        &self.cfg
    }

    #[allow(clippy::too_many_arguments)]
    fn rhs(
        problem: &Problem,
        polys: &[ScalarPolynomial<f64>],
        slopes: &[f64],
        scalars: &mut Vec<f64>,
        field: &mut [f64],
        t: f64,
        x: &[f64],
        out: &mut [f64],
    ) {
        scalars.clear();
        scalars.extend(polys.iter().map(|p| p.eval(t)));
        problem.field(0, x, scalars[0], out);
        for (i, &s) in slopes.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            problem.field(i + 1, x, scalars[i + 1], field);
            for (o, f) in out.iter_mut().zip(field.iter()) {
                *o += s * f;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rk4(
        &mut self,
        problem: &Problem,
        polys: &[ScalarPolynomial<f64>],
        slopes: &[f64],
        t: f64,
        h: f64,
        x: &[f64],
        out: &mut [f64],
    ) {
        let n = self.n;
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        let (scalars, field) = (&mut self.scalars, &mut self.field);
        Self::rhs(problem, polys, slopes, scalars, field, t, x, k1);
        for j in 0..n {
            tmp[j] = x[j] + 0.5 * h * k1[j];
        }
        Self::rhs(problem, polys, slopes, scalars, field, t + 0.5 * h, tmp, k2);
        for j in 0..n {
            tmp[j] = x[j] + 0.5 * h * k2[j];
        }
        Self::rhs(problem, polys, slopes, scalars, field, t + 0.5 * h, tmp, k3);
        for j in 0..n {
            tmp[j] = x[j] + h * k3[j];
        }
        Self::rhs(problem, polys, slopes, scalars, field, t + h, tmp, k4);
        for j in 0..n {
            out[j] = x[j] + h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
        }
    }

    /// Advances `x` from the start to the end of `path`.
    pub fn integrate(
        &mut self,
        problem: &Problem,
        path: &ControlPath,
        polys: &[ScalarPolynomial<f64>],
        x: &mut [f64],
    ) -> Result<()> {
        if polys.len() != problem.noise_dim() + 1 {
            return Err(Error::invalid(format!(
                "{} polynomials for {} vector fields",
                polys.len(),
                problem.noise_dim() + 1
            )));
        }
        let mut budget = self.cfg.max_substeps;
        let mut full = std::mem::take(&mut self.full);
        let mut half = std::mem::take(&mut self.half);
        let mut mid = std::mem::take(&mut self.mid);
        let result = (|| {
            for piece in path.pieces() {
                let len = piece.end - piece.start;
                let mut t = piece.start;
                let mut h = len * self.cfg.initial_substep;
                while t < piece.end {
                    if budget == 0 {
                        return Err(Error::SubstepBudget(self.cfg.max_substeps));
                    }
                    budget -= 1;
                    let last = t + h >= piece.end - 1e-14 * len;
                    let step = if last { piece.end - t } else { h };
                    self.rk4(problem, polys, &piece.slopes, t, step, x, &mut full);
                    self.rk4(problem, polys, &piece.slopes, t, 0.5 * step, x, &mut mid);
                    self.rk4(problem, polys, &piece.slopes, t + 0.5 * step, 0.5 * step, &mid, &mut half);
                    let mut err: f64 = 0.0;
                    let mut scale: f64 = 0.0;
                    for j in 0..self.n {
                        err = err.max((half[j] - full[j]).abs());
                        scale = scale.max(half[j].abs());
                    }
                    if !err.is_finite() {
                        return Err(Error::NonFinite(format!("ODE state at t={t}")));
                    }
                    let tol = self.cfg.abs_tol + self.cfg.rel_tol * scale;
                    let factor = if err == 0.0 {
                        4.0
                    } else {
                        (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0)
                    };
                    if err <= tol {
                        // Richardson extrapolation of the two RK4 estimates.
                        for j in 0..self.n {
                            x[j] = half[j] + (half[j] - full[j]) / 15.0;
                        }
                        t = if last { piece.end } else { t + step };
                    }
                    h = step * factor;
                }
            }
            Ok(())
        })();
        self.full = full;
        self.half = half;
        self.mid = mid;
        result
    }
}

/// `X` at the end of `path` started from `x0`.
pub fn solve_segment(
    problem: &Problem,
    x0: &[f64],
    path: &PiecewiseLinearPath<f64>,
    polys: &[ScalarPolynomial<f64>],
    cfg: &OdeConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut solver = OdeSolver::new(*cfg, problem.state_dim());
    let mut x = x0.to_vec();
    solver.integrate(problem, &ControlPath::new(path), polys, &mut x)?;
    Ok(x)
}
