//! Expected iterated Stratonovich integrals of `(t, B^1, .., B^d)` over
//! `[0, 1]`, read from the committed table, and the degree check built on them.

use std::collections::HashMap;
use std::sync::LazyLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

use super::signature::Word;
use super::CubatureFormula;

const TABLE: &str = include_str!("../../data/brownian_moments.txt");

struct MomentTable {
    max_letter: u8,
    max_norm: u32,
    values: HashMap<Vec<u8>, Rational>,
}

static MOMENTS: LazyLock<MomentTable> = LazyLock::new(|| parse_table(TABLE));

fn parse_table(src: &str) -> MomentTable {
    let mut max_letter = 0;
    let mut max_norm = 0;
    let mut values = HashMap::new();
    for line in src.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match (it.next(), it.next()) {
                (Some("max_letter"), Some(v)) => max_letter = v.parse().expect("max_letter"),
                (Some("max_norm"), Some(v)) => max_norm = v.parse().expect("max_norm"),
                _ => {}
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (word, value) = line.split_once(' ').expect("malformed moment line");
        let letters = word.bytes().map(|b| b - b'0').collect();
        let value = match value.trim().split_once('/') {
            Some((n, d)) => Rational::new(n.parse().unwrap(), d.parse().unwrap()),
            None => Rational::from_integer(value.trim().parse().unwrap()),
        };
        values.insert(letters, value);
    }
    MomentTable {
        max_letter,
        max_norm,
        values,
    }
}

/// Largest graded word length covered by the table.
pub fn max_moment_order() -> u32 {
    MOMENTS.max_norm
}

/// Largest Brownian coordinate covered by the table.
pub fn max_moment_dim() -> usize {
    MOMENTS.max_letter as usize
}

/// `E[I^w_{0,1}]` for Brownian motion with `B^0 = t`.
pub fn brownian_moment(word: &Word) -> Result<Rational> {
    let table = &*MOMENTS;
    if word.norm() > table.max_norm {
        return Err(Error::OrderTooLarge {
            word: word.to_string(),
            max: table.max_norm,
        });
    }
    if let Some(&l) = word.letters().iter().find(|&&l| l > table.max_letter) {
        return Err(Error::invalid(format!(
            "letter {l} in {word} beyond tabulated dimension {}",
            table.max_letter
        )));
    }
    if word.is_empty() {
        return Ok(Rational::from_integer(1));
    }
    Ok(table
        .values
        .get(word.letters())
        .copied()
        .unwrap_or_else(|| Rational::from_integer(0)))
}

#[derive(Debug, Clone, Serialize)]
pub struct WordResidual {
    pub word: String,
    pub expected: f64,
    pub computed: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub degree: u32,
    pub dim: usize,
    pub tolerance: f64,
    pub words_checked: usize,
    pub max_residual: f64,
    pub weight_sum_error: f64,
    pub passed: bool,
    pub failures: Vec<WordResidual>,
}

/// Check every word with graded length up to the formula's degree against the
/// Brownian moment table.
pub fn verify_degree<S: Scalar>(formula: &CubatureFormula<S>, tol: f64) -> Result<DegreeReport> {
    let degree = formula.degree();
    let dim = formula.dim();
    let sigs = formula
        .paths()
        .iter()
        .map(|p| p.signature(degree))
        .collect::<Result<Vec<_>>>()?;
    let weight_sum = formula
        .weights()
        .iter()
        .fold(S::zero(), |acc, w| acc + w.clone());
    let weight_sum_error = (weight_sum - S::one()).to_f64().abs();

    let words = Word::all_up_to(dim, degree);
    let mut max_residual: f64 = 0.0;
    let mut failures = Vec::new();
    for w in &words {
        let expected = brownian_moment(w)?;
        let computed = sigs
            .iter()
            .zip(formula.weights())
            .fold(S::zero(), |acc, (s, l)| acc + l.clone() * s.coeff(w));
        let residual = (computed.clone() - S::from_rational(&expected)).to_f64().abs();
        max_residual = max_residual.max(residual);
        if !(residual <= tol) {
            failures.push(WordResidual {
                word: w.to_string(),
                expected: expected.to_f64(),
                computed: computed.to_f64(),
                residual,
            });
        }
    }
    Ok(DegreeReport {
        degree,
        dim,
        tolerance: tol,
        words_checked: words.len(),
        max_residual,
        weight_sum_error,
        passed: failures.is_empty() && weight_sum_error <= tol.max(1e-15),
        failures,
    })
}
