//! Interpolation through the trailing level expectations, in Newton form.

use crate::error::{Error, Result};
use crate::poly::{mul_linear, ScalarPolynomial};
use crate::scalar::{Real, Scalar};

/// Nodes `(t_k, v_k)` with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationWindow<S> {
    times: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> InterpolationWindow<S> {
    pub fn new(times: Vec<S>, values: Vec<S>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} node times with {} values",
                times.len(),
                values.len()
            )));
        }
        check_times(&times)?;
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> &S {
        self.times.last().unwrap()
    }

    /// Divided differences with the nodes taken newest first, so the first
    /// Newton factor is `(t - t_last)`.
    pub fn newton_coefficients(&self) -> Vec<S> {
        let xs: Vec<S> = self.times.iter().rev().cloned().collect();
        let mut table: Vec<S> = self.values.iter().rev().cloned().collect();
        let w = xs.len();
        for level in 1..w {
            for k in (level..w).rev() {
                table[k] = (table[k].clone() - table[k - 1].clone())
                    / (xs[k].clone() - xs[k - level].clone());
            }
        }
        table
    }
}

fn check_times<S: Scalar>(times: &[S]) -> Result<()> {
    for w in times.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateNode(w[0].to_f64()));
        }
        if w[1] < w[0] {
            return Err(Error::invalid("node times must increase"));
        }
    }
    Ok(())
}

/// The interpolating polynomial of degree `< w`, expanded about the newest
/// node.
pub fn lagrange_poly<S: Scalar>(window: &InterpolationWindow<S>) -> ScalarPolynomial<S> {
    let coeffs = window.newton_coefficients();
    let center = window.last_time().clone();
    let nodes: Vec<S> = window.times.iter().rev().cloned().collect();
    let m = coeffs.len() - 1;
    let mut acc = vec![coeffs[m].clone()];
    for k in (0..m).rev() {
        acc = mul_linear(&acc, &(center.clone() - nodes[k].clone()));
        acc[0] = acc[0].clone() + coeffs[k].clone();
    }
    ScalarPolynomial::new(acc, center)
}

/// Lagrange basis values `L_j(t)` for the window's node times.
pub fn basis_values<S: Scalar>(times: &[S], t: &S) -> Result<Vec<S>> {
    check_times(times)?;
    Ok((0..times.len())
        .map(|j| {
            times
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold(S::one(), |acc, (_, ti)| {
                    acc * (t.clone() - ti.clone()) / (times[j].clone() - ti.clone())
                })
        })
        .collect())
}

/// `prod_j (t - t_j)`.
pub fn node_polynomial<S: Scalar>(times: &[S], t: &S) -> S {
    times
        .iter()
        .fold(S::one(), |acc, tj| acc * (t.clone() - tj.clone()))
}

/// `max_t sum_j |L_j(t)|` sampled at `samples + 1` equispaced points of
/// `[a, b]`.
pub fn lebesgue_constant<R: Real>(times: &[R], a: R, b: R, samples: usize) -> Result<R> {
    let samples = samples.max(1);
    let mut best = R::zero();
    for k in 0..=samples {
        let t = a + (b - a) * R::from_i64(k as i64) / R::from_i64(samples as i64);
        let s = basis_values(times, &t)?
            .into_iter()
            .fold(R::zero(), |acc, l| acc + l.abs());
        best = best.max(s);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn window(times: &[f64], values: &[f64]) -> InterpolationWindow<f64> {
        InterpolationWindow::new(times.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn line_through_two_points() {
        let p = lagrange_poly(&window(&[0.0, 1.0], &[0.0, 1.0]));
        assert_eq!(p.eval(0.5), 0.5);
        assert_eq!(*p.center(), 1.0);
    }

    #[test]
    fn single_node_is_constant() {
        let p = lagrange_poly(&window(&[0.3], &[2.5]));
        assert_eq!(p.coeffs(), &[2.5]);
        assert_eq!(*p.center(), 0.3);
    }

    #[test]
    fn exponential_extrapolation_error_is_bracketed() {
        // e^3 - p(3) = e^xi / 3! * (3 - 0)(3 - 1)(3 - 2) = e^xi, xi in [0, 3].
        let e = std::f64::consts::E;
        let p = lagrange_poly(&window(&[0.0, 1.0, 2.0], &[1.0, e, e * e]));
        let residual = 3f64.exp() - p.eval(3.0);
        assert!(residual >= 1.0 && residual <= 3f64.exp(), "{residual}");
    }

    #[test]
    fn duplicate_times_rejected() {
        assert!(matches!(
            InterpolationWindow::new(vec![0.0, 0.5, 0.5], vec![1.0, 2.0, 3.0]),
            Err(Error::DuplicateNode(t)) if t == 0.5
        ));
        assert!(InterpolationWindow::new(vec![1.0, 0.5], vec![1.0, 2.0]).is_err());
        assert!(basis_values(&[0.0, 0.0], &1.0).is_err());
    }

    #[test]
    fn linear_basis() {
        let l = basis_values(&[0.0, 1.0], &0.25).unwrap();
        assert_eq!(l, vec![0.75, 0.25]);
        let at_node = basis_values(&[0.0, 0.4, 1.0], &0.4).unwrap();
        assert_eq!(at_node, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn exact_in_rationals() {
        let r = |n: i128, d: i128| Rational::new(n, d);
        // p(t) = t^2 - t / 3 + 1
        let p = |t: Rational| t * t - t / r(3, 1) + r(1, 1);
        let times = vec![r(0, 1), r(1, 7), r(2, 5)];
        let values = times.iter().map(|&t| p(t)).collect();
        let poly = lagrange_poly(&InterpolationWindow::new(times, values).unwrap());
        for k in 0..10 {
            let t = r(k, 3);
            assert_eq!(poly.eval(t), p(t));
        }
    }

    fn sorted_nodes(w: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.05f64..1.0, w).prop_map(|gaps| {
            let mut t = 0.0;
            gaps.iter()
                .map(|g| {
                    t += g;
                    t
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn reproduces_low_degree_polynomials(
            (times, coeffs) in (1usize..6).prop_flat_map(|w| (sorted_nodes(w), prop::collection::vec(-2.0f64..2.0, w)))
        ) {
            let truth = ScalarPolynomial::new(coeffs.clone(), 0.0);
            let values: Vec<f64> = times.iter().map(|&t| truth.eval(t)).collect();
            let p = lagrange_poly(&window(&times, &values));
            let back = p.recentered(0.0);
            for (a, b) in back.coeffs().iter().zip(&coeffs) {
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + times.last().unwrap().powi(times.len() as i32)), "{a} vs {b}");
            }
        }

        #[test]
        fn monomial_residual_is_node_polynomial(times in (1usize..6).prop_flat_map(sorted_nodes), t in 0.0f64..6.0) {
            let w = times.len() as i32;
            let values: Vec<f64> = times.iter().map(|x| x.powi(w)).collect();
            let p = lagrange_poly(&window(&times, &values));
            let residual = t.powi(w) - p.eval(t);
            let want = node_polynomial(&times, &t);
            let scale = 1.0 + t.powi(w) + p.magnitude(t);
            prop_assert!((residual - want).abs() < 1e-12 * scale, "{residual} vs {want}");
        }

        #[test]
        fn partition_of_unity(times in (1usize..7).prop_flat_map(sorted_nodes), t in -1.0f64..8.0) {
            let s: f64 = basis_values(&times, &t).unwrap().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-13 * basis_values(&times, &t).unwrap().iter().map(|l| l.abs()).sum::<f64>().max(1.0));
        }

        #[test]
        fn perturbation_bounded_by_lebesgue_constant(
            (times, x, y) in (1usize..6).prop_flat_map(|w| (sorted_nodes(w), prop::collection::vec(-1.0f64..1.0, w), prop::collection::vec(-1.0f64..1.0, w)))
        ) {
            let a = times[0];
            let b = *times.last().unwrap() + 0.5;
            let c = lebesgue_constant(&times, a, b, 400).unwrap();
            let px = lagrange_poly(&window(&times, &x));
            let py = lagrange_poly(&window(&times, &y));
            let l1: f64 = x.iter().zip(&y).map(|(u, v)| (u - v).abs()).sum();
            for k in 0..=400 {
                let t = a + (b - a) * k as f64 / 400.0;
                prop_assert!((px.eval(t) - py.eval(t)).abs() <= c * l1 + 1e-12);
            }
        }
    }
}
