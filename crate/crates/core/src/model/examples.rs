use std::sync::Arc;

use super::{Coefficients, DerivativeRequest, Problem, Target};

/// Every coefficient here is polynomial or trigonometric, so derivatives of
/// any order are exact.
const EXAMPLE_MAX_ORDER: u32 = 16;

/// `1` when the request is exactly the first derivative in coordinate `c`.
fn unit_in(req: &DerivativeRequest<'_>, c: usize) -> f64 {
    let hit = req.scalar_order == 0
        && req
            .multi_index
            .iter()
            .enumerate()
            .all(|(j, &a)| a == u32::from(j == c));
    if hit {
        1.0
    } else {
        0.0
    }
}

/// One-dimensional mean-field drift with additive noise:
/// `dX = E[X] dt + dB`, `f(x) = max(x, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct Example1;

impl Coefficients for Example1 {
    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn field(&self, i: usize, _z: &[f64], y: f64, out: &mut [f64]) {
        out[0] = if i == 0 { y } else { 1.0 };
    }

    fn interaction(&self, i: usize, z: &[f64]) -> f64 {
        // phi_1 never enters the dynamics since V_1 is constant.
        if i == 0 {
            z[0]
        } else {
            0.0
        }
    }

    fn terminal(&self, z: &[f64]) -> f64 {
        z[0].max(0.0)
    }

    fn analytic_derivative(&self, req: &DerivativeRequest<'_>) -> Option<f64> {
        match req.target {
            Target::Field { index: 0, .. } => {
                let only_y = req.multi_index[0] == 0 && req.scalar_order == 1;
                Some(if only_y { 1.0 } else { 0.0 })
            }
            Target::Field { .. } => Some(0.0),
            Target::Interaction(0) => Some(unit_in(req, 0)),
            Target::Interaction(_) => Some(0.0),
            Target::Terminal => None,
        }
    }

    fn max_derivative_order(&self) -> u32 {
        EXAMPLE_MAX_ORDER
    }

    /// Every power of the operator maps `E[X]` to the current mean.
    fn closed_form_taylor(&self, i: usize, _k: u32, env: &[f64]) -> Option<f64> {
        Some(if i == 0 { env[0] } else { 0.0 })
    }
}

/// Two-dimensional hypoelliptic example:
/// `V_0 = 0`, `V_1(z, y) = (2 + sin y, z_1)`, `V_2(z, y) = (z_2, z_1)`,
/// `phi_1(z) = z_2`, `f(z) = max(z_1, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct Example2;

impl Coefficients for Example2 {
    fn state_dim(&self) -> usize {
        2
    }

    fn noise_dim(&self) -> usize {
        2
    }

    fn field(&self, i: usize, z: &[f64], y: f64, out: &mut [f64]) {
        match i {
            0 => out.fill(0.0),
            1 => {
                out[0] = 2.0 + y.sin();
                out[1] = z[0];
            }
            _ => {
                out[0] = z[1];
                out[1] = z[0];
            }
        }
    }

    fn interaction(&self, i: usize, z: &[f64]) -> f64 {
        if i == 1 {
            z[1]
        } else {
            0.0
        }
    }

    fn terminal(&self, z: &[f64]) -> f64 {
        z[0].max(0.0)
    }

    fn analytic_derivative(&self, req: &DerivativeRequest<'_>) -> Option<f64> {
        let v = match req.target {
            Target::Field { index: 1, component: 0 } => {
                if req.multi_index.iter().any(|&a| a > 0) {
                    0.0
                } else {
                    // d^m/dy^m sin(y) = sin(y + m pi/2)
                    (req.y + f64::from(req.scalar_order) * std::f64::consts::FRAC_PI_2).sin()
                }
            }
            Target::Field { index: 1, component: 1 } => unit_in(req, 0),
            Target::Field { index: 2, component: 0 } => unit_in(req, 1),
            Target::Field { index: 2, component: 1 } => unit_in(req, 0),
            Target::Field { .. } => 0.0,
            Target::Interaction(1) => unit_in(req, 1),
            Target::Interaction(_) => 0.0,
            Target::Terminal => return None,
        };
        Some(v)
    }

    fn max_derivative_order(&self) -> u32 {
        EXAMPLE_MAX_ORDER
    }
}

/// `x = 0.5`, `T = 10`.
pub fn example1() -> Problem {
    Problem::new("example1", Arc::new(Example1), vec![0.5], 10.0).expect("valid example")
}

/// `x = (1, 0.5)`, `T = 1`.
pub fn example2() -> Problem {
    Problem::new("example2", Arc::new(Example2), vec![1.0, 0.5], 1.0).expect("valid example")
}
