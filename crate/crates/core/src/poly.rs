use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Polynomial `sum_k c_k (t - center)^k` used for the coupling terms along a
/// time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPolynomial<S> {
    coeffs: Vec<S>,
    center: S,
}

impl<S: Scalar> ScalarPolynomial<S> {
    pub fn new(coeffs: Vec<S>, center: S) -> Self {
        let coeffs = if coeffs.is_empty() { vec![S::zero()] } else { coeffs };
        Self { coeffs, center }
    }

    pub fn constant(value: S, center: S) -> Self {
        Self::new(vec![value], center)
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn center(&self) -> &S {
        &self.center
    }

    /// Index of the highest stored coefficient (not trimmed for zeros).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: S) -> S {
        let s = t - self.center.clone();
        let mut acc = self.coeffs[self.coeffs.len() - 1].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * s.clone() + c.clone();
        }
        acc
    }

    /// `sum_k |c_k| |t - center|^k`. Horner's rule evaluates to within a
    /// few ulps of this quantity, so it is the natural scale for comparing
    /// floating-point evaluations.
    pub fn magnitude(&self, t: S) -> S {
        let s = (t - self.center.clone()).abs_val();
        let mut acc = self.coeffs[self.coeffs.len() - 1].abs_val();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * s.clone() + c.abs_val();
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.to_f64().is_finite())
    }

    /// Re-expand the same polynomial about another point.
    pub fn recentered(&self, center: S) -> Self {
        // Horner in the shifted variable: p(t) = sum c_k ((t - c') + delta)^k.
        let delta = center.clone() - self.center.clone();
        let mut out: Vec<S> = vec![self.coeffs[self.coeffs.len() - 1].clone()];
        for c in self.coeffs.iter().rev().skip(1) {
            out = mul_linear(&out, &delta);
            out[0] = out[0].clone() + c.clone();
        }
        Self::new(out, center)
    }
}

/// Multiply `p(s)` by `(s + delta)`.
pub(crate) fn mul_linear<S: Scalar>(p: &[S], delta: &S) -> Vec<S> {
    let mut out = vec![S::zero(); p.len() + 1];
    for (k, c) in p.iter().enumerate() {
        out[k + 1] = out[k + 1].clone() + c.clone();
        out[k] = out[k].clone() + c.clone() * delta.clone();
    }
    out
}
