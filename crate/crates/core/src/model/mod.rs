//! Problem definitions: coefficients `V_i(z, y)`, interaction functions
//! `phi_i(z)`, terminal function and derivative oracles.

mod examples;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use examples::{example1, example2};

/// Highest total order the finite-difference fallback will produce.
pub const FD_MAX_ORDER: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    Smooth,
    Lipschitz,
}

/// Function whose derivative is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    /// Component `component` of `V_index`.
    Field { index: usize, component: usize },
    /// `phi_index`.
    Interaction(usize),
    Terminal,
}

/// `d^{|alpha|} / dz^alpha  d^m / dy^m` of a target at `(z, y)`; `multi_index`
/// holds one derivative count per state coordinate.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeRequest<'a> {
    pub target: Target,
    pub multi_index: &'a [u32],
    pub scalar_order: u32,
    pub z: &'a [f64],
    pub y: f64,
}

impl DerivativeRequest<'_> {
    pub fn total_order(&self) -> u32 {
        self.multi_index.iter().sum::<u32>() + self.scalar_order
    }
}

/// User-supplied coefficients of the McKean-Vlasov SDE
/// `dX = sum_i V_i(X, E phi_i(X)) o dB^i` with `B^0 = t`.
pub trait Coefficients: Send + Sync {
    fn state_dim(&self) -> usize;

    fn noise_dim(&self) -> usize;

    /// Writes `V_i(z, y)` into `out` for `i` in `0..=noise_dim`.
    fn field(&self, i: usize, z: &[f64], y: f64, out: &mut [f64]);

    fn interaction(&self, i: usize, z: &[f64]) -> f64;

    fn terminal(&self, z: &[f64]) -> f64;

    fn terminal_kind(&self) -> TerminalKind {
        TerminalKind::Lipschitz
    }

    /// Exact derivative, or `None` to fall back to finite differences.
    fn analytic_derivative(&self, _req: &DerivativeRequest<'_>) -> Option<f64> {
        None
    }

    fn max_derivative_order(&self) -> u32 {
        FD_MAX_ORDER
    }

    /// `(T^k)(E phi_i)` as a function of the current coupling values, for
    /// problems where it is known in closed form.
    fn closed_form_taylor(&self, _i: usize, _k: u32, _env: &[f64]) -> Option<f64> {
        None
    }
}

/// A problem instance: coefficients plus starting point and horizon.
#[derive(Clone)]
pub struct Problem {
    name: String,
    coefficients: Arc<dyn Coefficients>,
    initial_state: Vec<f64>,
    horizon: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim())
            .field("noise_dim", &self.noise_dim())
            .field("initial_state", &self.initial_state)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        coefficients: Arc<dyn Coefficients>,
        initial_state: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        if coefficients.state_dim() == 0 || coefficients.noise_dim() == 0 {
            return Err(Error::invalid("state and noise dimensions must be positive"));
        }
        let p = Self {
            name: name.into(),
            coefficients,
            initial_state: Vec::new(),
            horizon: 1.0,
        };
        p.with_initial_state(initial_state)?.with_horizon(horizon)
    }

    pub fn with_initial_state(mut self, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.state_dim() {
            return Err(Error::invalid(format!(
                "initial state has {} coordinates, problem has {}",
                x.len(),
                self.state_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state".into()));
        }
        self.initial_state = x;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coefficients(&self) -> &dyn Coefficients {
        &*self.coefficients
    }

    pub fn state_dim(&self) -> usize {
        self.coefficients.state_dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.coefficients.noise_dim()
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn terminal_kind(&self) -> TerminalKind {
        self.coefficients.terminal_kind()
    }

    pub fn max_derivative_order(&self) -> u32 {
        self.coefficients.max_derivative_order()
    }

    pub fn field(&self, i: usize, z: &[f64], y: f64, out: &mut [f64]) {
        self.coefficients.field(i, z, y, out)
    }

    pub fn field_vec(&self, i: usize, z: &[f64], y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.state_dim()];
        self.field(i, z, y, &mut out);
        out
    }

    pub fn interaction(&self, i: usize, z: &[f64]) -> f64 {
        self.coefficients.interaction(i, z)
    }

    pub fn terminal(&self, z: &[f64]) -> f64 {
        self.coefficients.terminal(z)
    }

    pub fn closed_form_taylor(&self, i: usize, k: u32, env: &[f64]) -> Option<f64> {
        self.coefficients.closed_form_taylor(i, k, env)
    }

    fn check_request(&self, req: &DerivativeRequest<'_>) -> Result<()> {
        let n = self.state_dim();
        if req.multi_index.len() != n || req.z.len() != n {
            return Err(Error::invalid(format!(
                "derivative request sized for {} coordinates, problem has {n}",
                req.multi_index.len()
            )));
        }
        let ok = match req.target {
            Target::Field { index, component } => index <= self.noise_dim() && component < n,
            Target::Interaction(i) => i <= self.noise_dim(),
            Target::Terminal => true,
        };
        if !ok {
            return Err(Error::invalid(format!("no such target {:?}", req.target)));
        }
        Ok(())
    }

    fn value(&self, target: Target, z: &[f64], y: f64) -> f64 {
        match target {
            Target::Field { index, component } => {
                let mut out = vec![0.0; self.state_dim()];
                self.field(index, z, y, &mut out);
                out[component]
            }
            Target::Interaction(i) => self.interaction(i, z),
            Target::Terminal => self.terminal(z),
        }
    }

    /// Partial derivative of a coefficient, exact when the problem supplies
    /// it and by central differences (total order at most [`FD_MAX_ORDER`])
    /// otherwise.
    pub fn evaluate_derivative(&self, req: &DerivativeRequest<'_>) -> Result<f64> {
        self.check_request(req)?;
        let order = req.total_order();
        let max = self.max_derivative_order();
        if order > max {
            return Err(Error::DerivativeOrder {
                requested: order,
                max,
            });
        }
        let v = if order == 0 {
            self.value(req.target, req.z, req.y)
        } else if !matches!(req.target, Target::Field { .. }) && req.scalar_order > 0 {
            // phi_i and f do not depend on the scalar argument.
            0.0
        } else if let Some(v) = self.coefficients.analytic_derivative(req) {
            v
        } else {
            self.finite_difference(req)?
        };
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "derivative {:?} of {:?} at z={:?}, y={}",
                req.multi_index, req.target, req.z, req.y
            )));
        }
        Ok(v)
    }

    /// Finite-difference derivative regardless of analytic oracles.
    pub fn finite_difference(&self, req: &DerivativeRequest<'_>) -> Result<f64> {
        self.check_request(req)?;
        let order = req.total_order();
        if order > FD_MAX_ORDER {
            return Err(Error::DerivativeOrder {
                requested: order,
                max: FD_MAX_ORDER,
            });
        }
        // Balances truncation (h^2) against cancellation (eps / h^order).
        let h = f64::EPSILON.powf(1.0 / (2.0 + order as f64));
        let mut z = req.z.to_vec();
        let mut alpha = req.multi_index.to_vec();
        Ok(self.fd_rec(req.target, &mut z, req.y, &mut alpha, req.scalar_order, h))
    }

    fn fd_rec(&self, target: Target, z: &mut [f64], y: f64, alpha: &mut [u32], m: u32, h: f64) -> f64 {
        if m > 0 {
            let step = h * y.abs().max(1.0);
            let up = self.fd_rec(target, z, y + step, alpha, m - 1, h);
            let down = self.fd_rec(target, z, y - step, alpha, m - 1, h);
            return (up - down) / (2.0 * step);
        }
        match alpha.iter().position(|&a| a > 0) {
            None => self.value(target, z, y),
            Some(j) => {
                alpha[j] -= 1;
                let orig = z[j];
                let step = h * orig.abs().max(1.0);
                z[j] = orig + step;
                let up = self.fd_rec(target, z, y, alpha, 0, h);
                z[j] = orig - step;
                let down = self.fd_rec(target, z, y, alpha, 0, h);
                z[j] = orig;
                alpha[j] += 1;
                (up - down) / (2.0 * step)
            }
        }
    }

    /// `dV_i/dz (z, y)` as a row-major `N x N` matrix.
    pub fn jacobian(&self, i: usize, z: &[f64], y: f64) -> Result<Vec<f64>> {
        let n = self.state_dim();
        let mut out = vec![0.0; n * n];
        self.jacobian_into(i, z, y, &mut out)?;
        Ok(out)
    }

    /// [`Problem::jacobian`] into a caller-provided `N x N` buffer.
    pub fn jacobian_into(&self, i: usize, z: &[f64], y: f64, out: &mut [f64]) -> Result<()> {
        let n = self.state_dim();
        let mut alpha = [0u32; 8];
        let mut heap;
        let alpha: &mut [u32] = if n <= alpha.len() {
            &mut alpha[..n]
        } else {
            heap = vec![0u32; n];
            &mut heap
        };
        for col in 0..n {
            alpha[col] = 1;
            for row in 0..n {
                out[row * n + col] = self.evaluate_derivative(&DerivativeRequest {
                    target: Target::Field {
                        index: i,
                        component: row,
                    },
                    multi_index: alpha,
                    scalar_order: 0,
                    z,
                    y,
                })?;
            }
            alpha[col] = 0;
        }
        Ok(())
    }

    /// Lie bracket `[V_a, V_b] = (dV_b) V_a - (dV_a) V_b`, all fields frozen
    /// at the same scalar argument `y`.
    pub fn lie_bracket(&self, a: usize, b: usize, z: &[f64], y: f64) -> Result<Vec<f64>> {
        let n = self.state_dim();
        let va = self.field_vec(a, z, y);
        let vb = self.field_vec(b, z, y);
        let ja = self.jacobian(a, z, y)?;
        let jb = self.jacobian(b, z, y)?;
        Ok((0..n)
            .map(|r| {
                (0..n)
                    .map(|c| jb[r * n + c] * va[c] - ja[r * n + c] * vb[c])
                    .sum()
            })
            .collect())
    }
}

type Constructor = Arc<dyn Fn() -> Problem + Send + Sync>;

/// Named problem constructors; the extension point for custom problems.
#[derive(Clone, Default)]
pub struct ProblemRegistry {
    entries: BTreeMap<String, Constructor>,
}

impl ProblemRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register("example1", example1);
        r.register("example2", example2);
        r
    }

    pub fn register(&mut self, name: &str, ctor: impl Fn() -> Problem + Send + Sync + 'static) {
        self.entries.insert(name.to_string(), Arc::new(ctor));
    }

    pub fn get(&self, name: &str) -> Result<Problem> {
        self.entries
            .get(name)
            .map(|c| c())
            .ok_or_else(|| Error::UnknownProblem(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

pub fn builtin_problem(name: &str) -> Result<Problem> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

type FieldFn = Box<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;
type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Coefficients assembled from closures; derivatives come from finite
/// differences.
pub struct ClosureCoefficients {
    state_dim: usize,
    noise_dim: usize,
    fields: Vec<FieldFn>,
    interactions: Vec<ScalarFn>,
    terminal: ScalarFn,
    terminal_kind: TerminalKind,
}

impl Coefficients for ClosureCoefficients {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn field(&self, i: usize, z: &[f64], y: f64, out: &mut [f64]) {
        (self.fields[i])(z, y, out)
    }

    fn interaction(&self, i: usize, z: &[f64]) -> f64 {
        (self.interactions[i])(z)
    }

    fn terminal(&self, z: &[f64]) -> f64 {
        (self.terminal)(z)
    }

    fn terminal_kind(&self) -> TerminalKind {
        self.terminal_kind
    }
}

/// Builder for [`ClosureCoefficients`]. Unset fields and interactions are
/// zero; the terminal defaults to the first coordinate.
pub struct ProblemBuilder {
    inner: ClosureCoefficients,
}

impl ProblemBuilder {
    pub fn new(state_dim: usize, noise_dim: usize) -> Self {
        let fields = (0..=noise_dim)
            .map(|_| Box::new(|_: &[f64], _: f64, out: &mut [f64]| out.fill(0.0)) as FieldFn)
            .collect();
        let interactions = (0..=noise_dim)
            .map(|_| Box::new(|_: &[f64]| 0.0) as ScalarFn)
            .collect();
        Self {
            inner: ClosureCoefficients {
                state_dim,
                noise_dim,
                fields,
                interactions,
                terminal: Box::new(|z: &[f64]| z[0]),
                terminal_kind: TerminalKind::Smooth,
            },
        }
    }

    pub fn field(
        mut self,
        i: usize,
        f: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.inner.fields[i] = Box::new(f);
        self
    }

    pub fn interaction(mut self, i: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.inner.interactions[i] = Box::new(f);
        self
    }

    pub fn terminal(
        mut self,
        kind: TerminalKind,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.inner.terminal = Box::new(f);
        self.inner.terminal_kind = kind;
        self
    }

    pub fn build(self, name: &str, initial_state: Vec<f64>, horizon: f64) -> Result<Problem> {
        Problem::new(name, Arc::new(self.inner), initial_state, horizon)
    }
}
