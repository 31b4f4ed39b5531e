//! Level-synchronous cubature tree for the Taylor and Lagrange methods.
//!
//! Every node of level `j` must be known before any node can move to level
//! `j + 1`, because the coupling values `E[phi_i(X_{t_j})]` of the whole level
//! enter the ODEs of the next step. The tree is therefore expanded breadth
//! first, keeping only the current and next level in memory. A node's path
//! through the tree is implicit in its index written in base `N_cub`.

use std::collections::VecDeque;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cubature::CubatureFormula;
use crate::error::{Error, Result};
use crate::lagrange::{lagrange_poly, InterpolationWindow};
use crate::measure::{pairwise_sum, DiscreteMeasure, Expectation};
use crate::model::Problem;
use crate::ode::{ControlPath, OdeConfig, OdeSolver};
use crate::partition::{Partition, PartitionKind};
use crate::poly::ScalarPolynomial;
use crate::taylor::{CouplingEnvironment, TaylorEngine};

/// Default cap on the number of leaves.
pub const DEFAULT_MAX_NODES: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Taylor expansion of the coupling terms to order `order`.
    Taylor { order: u32 },
    /// Interpolation through the last `points` level expectations.
    Lagrange { points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub max_nodes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

/// States, weights and coupling values at one time of the grid.
#[derive(Debug, Clone)]
pub struct TreeLevel {
    pub time: f64,
    pub measure: DiscreteMeasure,
    pub moments: Vec<f64>,
}

impl TreeLevel {
    pub fn new(problem: &Problem, time: f64, measure: DiscreteMeasure) -> Result<Self> {
        let moments = interaction_moments(problem, &measure)?;
        Ok(Self {
            time,
            measure,
            moments,
        })
    }

    /// `sum_p w_p psi(X_p)` for each `psi`.
    pub fn level_moments<F>(&self, funcs: &[F]) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.measure.moments(funcs)
    }
}

fn interaction_moments(problem: &Problem, measure: &DiscreteMeasure) -> Result<Vec<f64>> {
    (0..=problem.noise_dim())
        .map(|i| measure.expect(&|x: &[f64]| Ok(problem.interaction(i, x))))
        .collect()
}

/// The last few `(t_j, E[phi_i(X_{t_j})])` records.
#[derive(Debug, Clone)]
pub struct MomentHistory {
    capacity: usize,
    records: VecDeque<(f64, Vec<f64>)>,
}

impl MomentHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            records: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn push(&mut self, time: f64, moments: Vec<f64>) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back((time, moments));
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Interpolation window for coefficient `i` through every stored record.
    pub fn window(&self, i: usize) -> Result<InterpolationWindow<f64>> {
        InterpolationWindow::new(
            self.records.iter().map(|r| r.0).collect(),
            self.records.iter().map(|r| r.1[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub time: f64,
    pub nodes: u128,
    pub moments: Vec<f64>,
}

/// What the solver was asked to do, echoed in its result.
#[derive(Debug, Clone, Serialize)]
pub struct SolveEcho {
    pub problem: String,
    pub initial_state: Vec<f64>,
    pub horizon: f64,
    pub method: Method,
    pub degree: u32,
    pub formula_paths: usize,
    pub partition: PartitionKind<f64>,
    pub steps: usize,
    pub ode: OdeConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverResult {
    pub estimate: f64,
    pub trace: Vec<LevelRecord>,
    /// Number of leaves, `N_cub^n`.
    pub node_count: u128,
    pub seconds: f64,
    pub config: SolveEcho,
}

/// Passed to the progress callback after each completed level.
#[derive(Debug, Clone)]
pub struct Progress<'a> {
    pub level: usize,
    pub steps: usize,
    pub nodes: u128,
    pub moments: &'a [f64],
}

pub fn solve(
    problem: &Problem,
    formula: &CubatureFormula<f64>,
    partition: &Partition<f64>,
    method: Method,
    ode: &OdeConfig,
    limits: &Limits,
) -> Result<SolverResult> {
    solve_with_progress(problem, formula, partition, method, ode, limits, &mut |_| {})
}

fn node_budget(n_cub: usize, steps: usize, max: u64) -> Result<u128> {
    let mut total: u128 = 1;
    for _ in 0..steps {
        total = total.saturating_mul(n_cub as u128);
    }
    if total > max as u128 {
        return Err(Error::NodeBudget { needed: total, max });
    }
    Ok(total)
}

fn tree_path(mut index: usize, n_cub: usize, depth: usize) -> Vec<usize> {
    let mut digits = vec![0; depth];
    for d in digits.iter_mut().rev() {
        *d = index % n_cub;
        index /= n_cub;
    }
    digits
}

enum Coupling {
    Taylor(TaylorEngine),
    Lagrange(MomentHistory),
}

impl Coupling {
    fn polys(&self, problem: &Problem, level: &TreeLevel) -> Result<Vec<ScalarPolynomial<f64>>> {
        (0..=problem.noise_dim())
            .map(|i| match self {
                Coupling::Taylor(engine) => {
                    let env = CouplingEnvironment {
                        time: level.time,
                        moments: &level.moments,
                        evaluator: &level.measure,
                    };
                    engine.taylor_poly(problem, i, &env)
                }
                Coupling::Lagrange(history) => Ok(lagrange_poly(&history.window(i)?)),
            })
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn solve_with_progress(
    problem: &Problem,
    formula: &CubatureFormula<f64>,
    partition: &Partition<f64>,
    method: Method,
    ode: &OdeConfig,
    limits: &Limits,
    progress: &mut dyn FnMut(&Progress<'_>),
) -> Result<SolverResult> {
    let started = Instant::now();
    ode.validate()?;
    if formula.dim() != problem.noise_dim() {
        return Err(Error::invalid(format!(
            "formula dimension {} does not match noise dimension {}",
            formula.dim(),
            problem.noise_dim()
        )));
    }
    let horizon = partition.horizon();
    if (horizon - problem.horizon()).abs() > 1e-12 * problem.horizon() && partition.steps() > 0 {
        return Err(Error::invalid(format!(
            "partition ends at {horizon}, problem horizon is {}",
            problem.horizon()
        )));
    }
    let steps = partition.steps();
    let n_cub = formula.len();
    let leaves = node_budget(n_cub, steps, limits.max_nodes)?;
    let mut coupling = match method {
        Method::Taylor { order } => Coupling::Taylor(TaylorEngine::new(problem, order)?),
        Method::Lagrange { points } => {
            if points == 0 {
                return Err(Error::invalid("Lagrange method needs at least one point"));
            }
            Coupling::Lagrange(MomentHistory::new(points))
        }
    };
    let echo = SolveEcho {
        problem: problem.name().to_string(),
        initial_state: problem.initial_state().to_vec(),
        horizon: problem.horizon(),
        method,
        degree: formula.degree(),
        formula_paths: n_cub,
        partition: *partition.kind(),
        steps,
        ode: *ode,
    };

    let dim = problem.state_dim();
    let mut level = TreeLevel::new(problem, 0.0, DiscreteMeasure::dirac(problem.initial_state()))?;
    let mut trace = vec![LevelRecord {
        level: 0,
        time: 0.0,
        nodes: 1,
        moments: level.moments.clone(),
    }];
    if steps == 0 {
        return Ok(SolverResult {
            estimate: problem.terminal(problem.initial_state()),
            trace,
            node_count: 1,
            seconds: started.elapsed().as_secs_f64(),
            config: echo,
        });
    }

    let times = partition.times();
    let lambdas = formula.weights();
    let mut estimate = f64::NAN;
    for j in 0..steps {
        let (t0, t1) = (times[j], times[j + 1]);
        if let Coupling::Lagrange(history) = &mut coupling {
            history.push(t0, level.moments.clone());
        }
        let polys = coupling.polys(problem, &level)?;
        let controls: Vec<ControlPath> = formula
            .rescale(t0, t1)?
            .iter()
            .map(ControlPath::new)
            .collect();
        let parents = level.measure.len();
        let last = j + 1 == steps;
        let fail = |p: usize, c: usize, e: Error| {
            let mut path = tree_path(p, n_cub, j);
            path.push(c);
            Error::OdeFailure {
                level: j,
                path,
                source: Box::new(e),
            }
        };

        if !last {
            let mut states = vec![0.0; parents * n_cub * dim];
            states
                .par_chunks_mut(n_cub * dim)
                .enumerate()
                .try_for_each_init(
                    || OdeSolver::new(*ode, dim),
                    |solver, (p, out)| -> Result<()> {
                        let x0 = level.measure.state(p);
                        for (c, control) in controls.iter().enumerate() {
                            let x = &mut out[c * dim..(c + 1) * dim];
                            x.copy_from_slice(x0);
                            solver
                                .integrate(problem, control, &polys, x)
                                .map_err(|e| fail(p, c, e))?;
                        }
                        Ok(())
                    },
                )?;
            let weights: Vec<f64> = level
                .measure
                .weights()
                .par_iter()
                .flat_map_iter(|w| lambdas.iter().map(move |l| w * l))
                .collect();
            level = TreeLevel::new(problem, t1, DiscreteMeasure::new(dim, states, weights)?)?;
            let nodes = (parents * n_cub) as u128;
            trace.push(LevelRecord {
                level: j + 1,
                time: t1,
                nodes,
                moments: level.moments.clone(),
            });
            progress(&Progress {
                level: j + 1,
                steps,
                nodes,
                moments: &level.moments,
            });
        } else {
            // Leaves are folded into their parents without being stored:
            // per parent, sum_c lambda_c (f, phi_0, .., phi_d)(child).
            let width = problem.noise_dim() + 2;
            let mut folded = vec![0.0; parents * width];
            folded
                .par_chunks_mut(width)
                .enumerate()
                .try_for_each_init(
                    || (OdeSolver::new(*ode, dim), vec![0.0; dim]),
                    |(solver, x), (p, out)| -> Result<()> {
                        let x0 = level.measure.state(p);
                        for (c, control) in controls.iter().enumerate() {
                            x.copy_from_slice(x0);
                            solver
                                .integrate(problem, control, &polys, x)
                                .map_err(|e| fail(p, c, e))?;
                            let l = lambdas[c];
                            out[0] += l * problem.terminal(x);
                            for (i, o) in out[1..].iter_mut().enumerate() {
                                *o += l * problem.interaction(i, x);
                            }
                        }
                        Ok(())
                    },
                )?;
            let w = level.measure.weights();
            let column = |k: usize| -> Result<f64> {
                let terms: Vec<f64> = (0..parents)
                    .into_par_iter()
                    .map(|p| w[p] * folded[p * width + k])
                    .collect();
                let s = pairwise_sum(&terms);
                if s.is_finite() {
                    Ok(s)
                } else {
                    Err(Error::NonFinite(format!("terminal expectation column {k}")))
                }
            };
            estimate = column(0)?;
            let moments = (1..width).map(column).collect::<Result<Vec<_>>>()?;
            progress(&Progress {
                level: steps,
                steps,
                nodes: leaves,
                moments: &moments,
            });
            trace.push(LevelRecord {
                level: steps,
                time: t1,
                nodes: leaves,
                moments,
            });
        }
    }

    Ok(SolverResult {
        estimate,
        trace,
        node_count: leaves,
        seconds: started.elapsed().as_secs_f64(),
        config: echo,
    })
}
