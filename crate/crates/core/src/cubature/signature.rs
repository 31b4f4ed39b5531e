//! Truncated tensor algebra over the alphabet `{0, 1, .., d}` where letter 0
//! is the time coordinate.
//!
//! The signature of a piecewise-linear path is the product (Chen's identity)
//! of the tensor exponentials of its segment increments, so it is exact up to
//! the truncation depth.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{inv_factorial, Scalar};

/// Largest graded order a signature may be computed to.
pub const MAX_SIGNATURE_ORDER: u32 = 6;

/// Multi-index over `{0, .., d}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn new(letters: impl Into<Vec<u8>>) -> Self {
        Word(letters.into())
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Graded length: time letters count twice.
    pub fn norm(&self) -> u32 {
        self.0
            .iter()
            .map(|&l| if l == 0 { 2 } else { 1 })
            .sum()
    }

    /// All non-empty words over `{0..=d}` with graded length at most `max_norm`,
    /// ordered by length then lexicographically.
    pub fn all_up_to(d: usize, max_norm: u32) -> Vec<Word> {
        let mut out = Vec::new();
        let mut frontier = vec![Word::empty()];
        for _ in 0..max_norm {
            let mut next = Vec::new();
            for w in &frontier {
                for l in 0..=d as u8 {
                    let mut letters = w.0.clone();
                    letters.push(l);
                    let cand = Word(letters);
                    if cand.norm() <= max_norm {
                        next.push(cand);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        if self.0.iter().all(|&l| l < 10) {
            for l in &self.0 {
                write!(f, "{l}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Coefficients of a truncated group-like element, stored level by level;
/// level `k` holds `alphabet^k` entries indexed with the first letter most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSignature<S> {
    alphabet: usize,
    levels: Vec<Vec<S>>,
}

impl<S: Scalar> TensorSignature<S> {
    pub fn identity(alphabet: usize, depth: usize) -> Self {
        let levels = (0..=depth)
            .map(|k| {
                let mut v = vec![S::zero(); alphabet.pow(k as u32)];
                if k == 0 {
                    v[0] = S::one();
                }
                v
            })
            .collect();
        Self { alphabet, levels }
    }

    /// `exp(increment)` truncated at `depth`: level k is `increment^{(x)k} / k!`.
    pub fn segment_exp(increment: &[S], depth: usize) -> Self {
        let alphabet = increment.len();
        let mut levels: Vec<Vec<S>> = Vec::with_capacity(depth + 1);
        levels.push(vec![S::one()]);
        for k in 1..=depth {
            let prev = &levels[k - 1];
            let mut cur = Vec::with_capacity(prev.len() * alphabet);
            for p in prev {
                for x in increment {
                    cur.push(p.clone() * x.clone());
                }
            }
            levels.push(cur);
        }
        // Scale level k by 1/k! in one pass to keep rational denominators small.
        for (k, level) in levels.iter_mut().enumerate().skip(2) {
            let f: S = inv_factorial(k);
            for v in level.iter_mut() {
                *v = v.clone() * f.clone();
            }
        }
        Self { alphabet, levels }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &[S] {
        &self.levels[k]
    }

    /// Truncated tensor product `self (x) other` (concatenation of paths).
    pub fn chen(&self, other: &Self) -> Self {
        assert_eq!(self.alphabet, other.alphabet, "alphabet mismatch");
        let depth = self.depth().min(other.depth());
        let mut levels = Vec::with_capacity(depth + 1);
        for k in 0..=depth {
            let mut cur = vec![S::zero(); self.alphabet.pow(k as u32)];
            for i in 0..=k {
                let a = &self.levels[i];
                let b = &other.levels[k - i];
                let stride = b.len();
                for (ia, va) in a.iter().enumerate() {
                    if va.is_zero() {
                        continue;
                    }
                    let base = ia * stride;
                    for (ib, vb) in b.iter().enumerate() {
                        cur[base + ib] = cur[base + ib].clone() + va.clone() * vb.clone();
                    }
                }
            }
            levels.push(cur);
        }
        Self {
            alphabet: self.alphabet,
            levels,
        }
    }

    pub fn coeff(&self, word: &Word) -> S {
        let k = word.len();
        assert!(k <= self.depth(), "word {word} deeper than signature");
        let mut idx = 0usize;
        for &l in word.letters() {
            assert!((l as usize) < self.alphabet, "letter out of range in {word}");
            idx = idx * self.alphabet + l as usize;
        }
        self.levels[k][idx].clone()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x.clone() - y.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    }
}

/// Depth needed so every word with graded length `<= order` is stored.
pub(crate) fn check_order(order: u32) -> Result<usize> {
    if order > MAX_SIGNATURE_ORDER {
        return Err(Error::OrderTooLarge {
            word: format!("order {order}"),
            max: MAX_SIGNATURE_ORDER,
        });
    }
    Ok(order as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_rational::Ratio;

    #[test]
    fn graded_norm_counts_time_twice() {
        assert_eq!(Word::new(vec![0, 1, 1]).norm(), 4);
        assert_eq!(Word::new(vec![1, 2]).norm(), 2);
        assert_eq!(Word::empty().norm(), 0);
    }

    #[test]
    fn word_enumeration_respects_grading() {
        let ws = Word::all_up_to(1, 3);
        let shown: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
        assert_eq!(shown, vec!["0", "1", "01", "10", "11", "111"]);
    }

    #[test]
    fn segment_exponential_level_two() {
        let s = TensorSignature::<f64>::segment_exp(&[0.5, 2.0, -3.0], 3);
        assert_eq!(s.coeff(&Word::new(vec![1, 2])), 2.0 * -3.0 / 2.0);
        assert_eq!(s.coeff(&Word::new(vec![0])), 0.5);
        assert!((s.coeff(&Word::new(vec![1, 1, 1])) - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn chen_product_of_exponentials_of_same_direction_adds() {
        let r = |n, d| Ratio::new(n, d);
        let a: TensorSignature<Rational> = TensorSignature::segment_exp(&[r(1, 3), r(2, 1)], 4);
        let b: TensorSignature<Rational> = TensorSignature::segment_exp(&[r(2, 3), r(4, 1)], 4);
        let c: TensorSignature<Rational> = TensorSignature::segment_exp(&[r(1, 1), r(6, 1)], 4);
        assert_eq!(a.chen(&b), c);
    }

    #[test]
    fn identity_is_neutral() {
        let a = TensorSignature::segment_exp(&[0.3, -1.2], 4);
        let id = TensorSignature::identity(2, 4);
        assert_eq!(a.chen(&id), a);
        assert_eq!(id.chen(&a), a);
    }
}
