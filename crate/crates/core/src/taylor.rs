//! Symbolic time-derivative operator on moment expressions and the Taylor
//! polynomials it produces.
//!
//! A moment term is `E[g(X, e_0, .., e_d)]` where `e_i = E[phi_i(X)]` are the
//! coupling slots. The operator acts as
//!
//! ```text
//! T(E g) = E[L g] + sum_k E[dg/de_k] E[L phi_k]
//! L g    = V_0 . grad g + 1/2 sum_{i>=1} V_i . grad (V_i . grad g)
//! ```
//!
//! with every `V_i` evaluated at `(z, e_i)`, and extends to sums and products
//! by linearity and the product rule.

use std::fmt;

use crate::error::{Error, Result};
use crate::measure::Expectation;
use crate::model::{DerivativeRequest, Problem, Target};
use crate::poly::ScalarPolynomial;
use crate::scalar::inv_factorial;

/// Deepest Taylor order built symbolically; beyond it a problem needs a
/// closed-form hook.
pub const MAX_SYMBOLIC_ORDER: u32 = 2;

/// Function of the state `z` and the coupling slots `e`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// `z_j`.
    Coord(usize),
    /// `e_k`.
    Slot(usize),
    /// `d^dz d^dy V_index[component]` at `(z, e_index)`.
    Field {
        index: usize,
        component: usize,
        dz: Vec<u32>,
        dy: u32,
    },
    /// `d^dz phi_index` at `z`.
    Interaction { index: usize, dz: Vec<u32> },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn field(index: usize, component: usize, n: usize) -> Self {
        Expr::Field {
            index,
            component,
            dz: vec![0; n],
            dy: 0,
        }
    }

    pub fn interaction(index: usize, n: usize) -> Self {
        Expr::Interaction {
            index,
            dz: vec![0; n],
        }
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        let mut out = Vec::with_capacity(terms.len());
        let mut constant = 0.0;
        for t in terms {
            match t {
                Expr::Const(c) => constant += c,
                Expr::Sum(inner) => {
                    for u in inner {
                        match u {
                            Expr::Const(c) => constant += c,
                            u => out.push(u),
                        }
                    }
                }
                t => out.push(t),
            }
        }
        if constant != 0.0 {
            out.insert(0, Expr::Const(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        let mut out = Vec::with_capacity(factors.len());
        let mut constant = 1.0;
        for f in factors {
            match f {
                Expr::Const(c) => constant *= c,
                Expr::Product(inner) => {
                    for u in inner {
                        match u {
                            Expr::Const(c) => constant *= c,
                            u => out.push(u),
                        }
                    }
                }
                f => out.push(f),
            }
        }
        if constant == 0.0 {
            return Expr::zero();
        }
        if constant != 1.0 || out.is_empty() {
            out.insert(0, Expr::Const(constant));
        }
        match out.len() {
            1 => out.pop().unwrap(),
            _ => Expr::Product(out),
        }
    }

    /// `d/dz_j`.
    pub fn dz(&self, j: usize) -> Expr {
        match self {
            Expr::Const(_) | Expr::Slot(_) => Expr::zero(),
            Expr::Coord(k) => Expr::Const(if *k == j { 1.0 } else { 0.0 }),
            Expr::Field {
                index,
                component,
                dz,
                dy,
            } => {
                let mut dz = dz.clone();
                dz[j] += 1;
                Expr::Field {
                    index: *index,
                    component: *component,
                    dz,
                    dy: *dy,
                }
            }
            Expr::Interaction { index, dz } => {
                let mut dz = dz.clone();
                dz[j] += 1;
                Expr::Interaction { index: *index, dz }
            }
            Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| t.dz(j)).collect()),
            Expr::Product(fs) => product_rule(fs, |f| f.dz(j)),
        }
    }

    /// `d/de_k`.
    pub fn de(&self, k: usize) -> Expr {
        match self {
            Expr::Const(_) | Expr::Coord(_) | Expr::Interaction { .. } => Expr::zero(),
            Expr::Slot(s) => Expr::Const(if *s == k { 1.0 } else { 0.0 }),
            Expr::Field {
                index,
                component,
                dz,
                dy,
            } => {
                if *index == k {
                    Expr::Field {
                        index: *index,
                        component: *component,
                        dz: dz.clone(),
                        dy: dy + 1,
                    }
                } else {
                    Expr::zero()
                }
            }
            Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| t.de(k)).collect()),
            Expr::Product(fs) => product_rule(fs, |f| f.de(k)),
        }
    }

    /// Highest derivative order of any coefficient the expression touches.
    pub fn max_order(&self) -> u32 {
        match self {
            Expr::Const(_) | Expr::Coord(_) | Expr::Slot(_) => 0,
            Expr::Field { dz, dy, .. } => dz.iter().sum::<u32>() + dy,
            Expr::Interaction { dz, .. } => dz.iter().sum(),
            Expr::Sum(ts) | Expr::Product(ts) => ts.iter().map(Expr::max_order).max().unwrap_or(0),
        }
    }

    /// Whether the expression depends on the slot `e_k`.
    pub fn uses_slot(&self, k: usize) -> bool {
        match self {
            Expr::Slot(s) => *s == k,
            Expr::Field { index, .. } => *index == k,
            Expr::Sum(ts) | Expr::Product(ts) => ts.iter().any(|t| t.uses_slot(k)),
            _ => false,
        }
    }

    pub fn eval(&self, problem: &Problem, z: &[f64], slots: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Coord(j) => z[*j],
            Expr::Slot(k) => slots[*k],
            Expr::Field {
                index,
                component,
                dz,
                dy,
            } => problem.evaluate_derivative(&DerivativeRequest {
                target: Target::Field {
                    index: *index,
                    component: *component,
                },
                multi_index: dz,
                scalar_order: *dy,
                z,
                y: slots[*index],
            })?,
            Expr::Interaction { index, dz } => {
                if dz.iter().all(|&a| a == 0) {
                    problem.interaction(*index, z)
                } else {
                    problem.evaluate_derivative(&DerivativeRequest {
                        target: Target::Interaction(*index),
                        multi_index: dz,
                        scalar_order: 0,
                        z,
                        y: 0.0,
                    })?
                }
            }
            Expr::Sum(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval(problem, z, slots)?;
                }
                acc
            }
            Expr::Product(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.eval(problem, z, slots)?;
                }
                acc
            }
        })
    }
}

fn product_rule(factors: &[Expr], d: impl Fn(&Expr) -> Expr) -> Expr {
    let mut terms = Vec::new();
    for (k, f) in factors.iter().enumerate() {
        let df = d(f);
        if df.is_zero() {
            continue;
        }
        let mut fs = factors.to_vec();
        fs[k] = df;
        terms.push(Expr::product(fs));
    }
    Expr::sum(terms)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, ts: &[Expr], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (k, t) in ts.iter().enumerate() {
                if k > 0 {
                    write!(f, "{sep}")?;
                }
                write!(f, "{t}")?;
            }
            write!(f, ")")
        };
        let derivs = |f: &mut fmt::Formatter<'_>, dz: &[u32], dy: u32| -> fmt::Result {
            for (j, &a) in dz.iter().enumerate() {
                for _ in 0..a {
                    write!(f, "d{j}")?;
                }
            }
            for _ in 0..dy {
                write!(f, "dy")?;
            }
            Ok(())
        };
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Coord(j) => write!(f, "z{j}"),
            Expr::Slot(k) => write!(f, "e{k}"),
            Expr::Field {
                index,
                component,
                dz,
                dy,
            } => {
                derivs(f, dz, *dy)?;
                write!(f, "V{index}[{component}]")
            }
            Expr::Interaction { index, dz } => {
                derivs(f, dz, 0)?;
                write!(f, "phi{index}")
            }
            Expr::Sum(ts) => join(f, ts, " + "),
            Expr::Product(ts) => join(f, ts, " * "),
        }
    }
}

/// `L g` with all slots left symbolic.
pub fn generator(g: &Expr, state_dim: usize, noise_dim: usize) -> Expr {
    let grad_along = |i: usize, h: &Expr| -> Expr {
        Expr::sum(
            (0..state_dim)
                .map(|j| {
                    let dh = h.dz(j);
                    if dh.is_zero() {
                        Expr::zero()
                    } else {
                        Expr::product(vec![Expr::field(i, j, state_dim), dh])
                    }
                })
                .collect(),
        )
    };
    let mut terms = vec![grad_along(0, g)];
    for i in 1..=noise_dim {
        let first = grad_along(i, g);
        if !first.is_zero() {
            terms.push(Expr::product(vec![Expr::Const(0.5), grad_along(i, &first)]));
        }
    }
    Expr::sum(terms)
}

/// `E[g(X, e)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTerm {
    pub outer: Expr,
}

/// `sum_k c_k prod_m E[g_km]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SBarExpr {
    pub terms: Vec<(f64, Vec<MomentTerm>)>,
}

impl SBarExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Self {
                terms: vec![(c, Vec::new())],
            }
        }
    }

    pub fn moment(g: Expr) -> Self {
        match g {
            Expr::Const(c) => Self::constant(c),
            g => Self {
                terms: vec![(1.0, vec![MomentTerm { outer: g }])],
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(mut self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        for t in &mut self.terms {
            t.0 *= c;
        }
        self
    }

    pub fn plus(mut self, other: Self) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for (a, fa) in &self.terms {
            for (b, fb) in &other.terms {
                let mut fs = fa.clone();
                fs.extend(fb.iter().cloned());
                terms.push((a * b, fs));
            }
        }
        Self { terms }
    }

    pub fn max_order(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|(_, fs)| fs.iter().map(|m| m.outer.max_order()))
            .max()
            .unwrap_or(0)
    }

    fn distinct_terms(&self) -> Vec<&Expr> {
        let mut out: Vec<&Expr> = Vec::new();
        for (_, fs) in &self.terms {
            for m in fs {
                if !out.contains(&&m.outer) {
                    out.push(&m.outer);
                }
            }
        }
        out
    }
}

/// Values the operator is evaluated against: the time, the coupling values
/// `e_i` and an expectation over the current level.
pub struct CouplingEnvironment<'a> {
    pub time: f64,
    pub moments: &'a [f64],
    pub evaluator: &'a dyn Expectation,
}

/// `T` applied to a single moment term.
fn apply_t_term(g: &Expr, problem: &Problem) -> SBarExpr {
    let (n, d) = (problem.state_dim(), problem.noise_dim());
    let mut out = SBarExpr::moment(generator(g, n, d));
    for k in 0..=d {
        if !g.uses_slot(k) {
            continue;
        }
        let dg = g.de(k);
        let l_phi = generator(&Expr::interaction(k, n), n, d);
        out = out.plus(SBarExpr::moment(dg).mul(&SBarExpr::moment(l_phi)));
    }
    out
}

/// Apply `T` by linearity and the product rule.
pub fn apply_t(expr: &SBarExpr, problem: &Problem) -> Result<SBarExpr> {
    let needed = expr.max_order() + 2;
    let max = problem.max_derivative_order();
    if needed > max {
        return Err(Error::DerivativeOrder {
            requested: needed,
            max,
        });
    }
    let mut out = SBarExpr::zero();
    for (c, factors) in &expr.terms {
        for k in 0..factors.len() {
            let mut rest = SBarExpr::constant(*c);
            for (m, f) in factors.iter().enumerate() {
                if m != k {
                    rest = rest.mul(&SBarExpr::moment(f.outer.clone()));
                }
            }
            out = out.plus(rest.mul(&apply_t_term(&factors[k].outer, problem)));
        }
    }
    Ok(out)
}

/// Inner expectations first (each distinct term once), then the sum of
/// products.
pub fn evaluate(expr: &SBarExpr, problem: &Problem, env: &CouplingEnvironment<'_>) -> Result<f64> {
    let distinct = expr.distinct_terms();
    let mut values = Vec::with_capacity(distinct.len());
    for g in &distinct {
        values.push(
            env.evaluator
                .expect(&|z: &[f64]| g.eval(problem, z, env.moments))?,
        );
    }
    let mut total = 0.0;
    for (c, factors) in &expr.terms {
        let mut prod = *c;
        for m in factors {
            let k = distinct.iter().position(|g| **g == m.outer).unwrap();
            prod *= values[k];
        }
        total += prod;
    }
    Ok(total)
}

/// Precomputed `T^k(E phi_i)` for `k = 1..=q`.
#[derive(Debug, Clone)]
pub struct TaylorEngine {
    order: u32,
    use_hook: bool,
    series: Vec<Vec<SBarExpr>>,
}

impl TaylorEngine {
    /// Uses the problem's closed-form hook when it has one, the symbolic
    /// engine otherwise.
    pub fn new(problem: &Problem, order: u32) -> Result<Self> {
        let probe = vec![0.0; problem.noise_dim() + 1];
        let has_hook = (0..=problem.noise_dim())
            .all(|i| (1..=order).all(|k| problem.closed_form_taylor(i, k, &probe).is_some()));
        if has_hook {
            Ok(Self {
                order,
                use_hook: true,
                series: Vec::new(),
            })
        } else {
            Self::symbolic(problem, order)
        }
    }

    /// Always builds the expressions, ignoring any closed form.
    pub fn symbolic(problem: &Problem, order: u32) -> Result<Self> {
        if order > MAX_SYMBOLIC_ORDER {
            return Err(Error::invalid(format!(
                "symbolic Taylor order {order} exceeds {MAX_SYMBOLIC_ORDER}; supply a closed form"
            )));
        }
        let n = problem.state_dim();
        let mut series = Vec::new();
        for i in 0..=problem.noise_dim() {
            let mut cur = SBarExpr::moment(Expr::interaction(i, n));
            let mut row = Vec::new();
            for _ in 0..order {
                cur = apply_t(&cur, problem)?;
                row.push(cur.clone());
            }
            series.push(row);
        }
        Ok(Self {
            order,
            use_hook: false,
            series,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn uses_closed_form(&self) -> bool {
        self.use_hook
    }

    /// `T^k(E phi_i)` for `k >= 1` when built symbolically.
    pub fn expression(&self, i: usize, k: u32) -> Option<&SBarExpr> {
        self.series.get(i)?.get(k.checked_sub(1)? as usize)
    }

    /// `sum_k (t - t_j)^k / k! T^k(E phi_i)` about the environment's time.
    pub fn taylor_poly(
        &self,
        problem: &Problem,
        i: usize,
        env: &CouplingEnvironment<'_>,
    ) -> Result<ScalarPolynomial<f64>> {
        let mut coeffs = vec![env.moments[i]];
        for k in 1..=self.order {
            let v = if self.use_hook {
                problem
                    .closed_form_taylor(i, k, env.moments)
                    .ok_or_else(|| Error::invalid("closed-form Taylor hook returned nothing"))?
            } else {
                evaluate(&self.series[i][k as usize - 1], problem, env)?
            };
            coeffs.push(v * inv_factorial::<f64>(k as usize));
        }
        Ok(ScalarPolynomial::new(coeffs, env.time))
    }
}
