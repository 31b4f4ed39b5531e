//! Finitely supported probability measures and reproducible reductions.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Below this many terms a reduction runs sequentially.
const SEQUENTIAL_CUTOFF: usize = 1 << 12;

/// Sum with a fixed binary split, so the rounding pattern depends only on the
/// length of the input and not on how many threads run it.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= SEQUENTIAL_CUTOFF {
        return sequential_pairwise(values);
    }
    let mid = values.len() / 2;
    let (a, b) = rayon::join(|| pairwise_sum(&values[..mid]), || pairwise_sum(&values[mid..]));
    a + b
}

fn sequential_pairwise(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let mid = n / 2;
            sequential_pairwise(&values[..mid]) + sequential_pairwise(&values[mid..])
        }
    }
}

/// Anything that can integrate a function of the state.
pub trait Expectation: Sync {
    fn expect(&self, f: &(dyn Fn(&[f64]) -> Result<f64> + Sync)) -> Result<f64>;
}

/// Weighted point cloud in `R^N`, states stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    states: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, states: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || states.len() != dim * weights.len() {
            return Err(Error::invalid(format!(
                "{} state values for {} weights in dimension {dim}",
                states.len(),
                weights.len()
            )));
        }
        Ok(Self {
            dim,
            states,
            weights,
        })
    }

    pub fn dirac(x: &[f64]) -> Self {
        Self {
            dim: x.len(),
            states: x.to_vec(),
            weights: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn state(&self, p: usize) -> &[f64] {
        &self.states[p * self.dim..(p + 1) * self.dim]
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `sum_p w_p psi(x_p)` for each function, reduced deterministically.
    pub fn moments<F>(&self, funcs: &[F]) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        funcs
            .iter()
            .map(|f| self.expect(&|x: &[f64]| Ok(f(x))))
            .collect()
    }
}

impl Expectation for DiscreteMeasure {
    fn expect(&self, f: &(dyn Fn(&[f64]) -> Result<f64> + Sync)) -> Result<f64> {
        let terms: Vec<f64> = self
            .states
            .par_chunks(self.dim)
            .zip(self.weights.par_iter())
            .map(|(x, w)| {
                let v = f(x)?;
                if v.is_finite() {
                    Ok(w * v)
                } else {
                    Err(Error::NonFinite(format!("integrand at {x:?}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&terms))
    }
}
