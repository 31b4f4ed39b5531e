//! Cubature formulas on Wiener space: weighted piecewise-linear paths on
//! `[0, 1]` whose expected signatures match Brownian motion up to a degree.

mod moments;
mod path;
mod signature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub use moments::{
    brownian_moment, max_moment_dim, max_moment_order, verify_degree, DegreeReport, WordResidual,
};
pub use path::{PiecewiseLinearPath, Segment};
pub use signature::{TensorSignature, Word, MAX_SIGNATURE_ORDER};

/// Weighted family of paths on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubatureFormula<S> {
    degree: u32,
    dim: usize,
    paths: Vec<PiecewiseLinearPath<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> CubatureFormula<S> {
    pub fn new(
        degree: u32,
        paths: Vec<PiecewiseLinearPath<S>>,
        weights: Vec<S>,
    ) -> Result<Self> {
        if paths.is_empty() || paths.len() != weights.len() {
            return Err(Error::InvalidFormula(format!(
                "{} paths with {} weights",
                paths.len(),
                weights.len()
            )));
        }
        if degree.is_multiple_of(2) || degree > MAX_SIGNATURE_ORDER {
            return Err(Error::InvalidFormula(format!(
                "degree must be odd and at most {MAX_SIGNATURE_ORDER}, got {degree}"
            )));
        }
        let dim = paths[0].dim();
        if dim == 0 || paths.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidFormula("paths disagree on dimension".into()));
        }
        if paths
            .iter()
            .any(|p| !p.start().is_zero() || !p.end().is_one())
        {
            return Err(Error::InvalidFormula("paths must live on [0, 1]".into()));
        }
        if weights.iter().any(|w| !(*w > S::zero())) {
            return Err(Error::InvalidFormula("weights must be positive".into()));
        }
        let total = weights.iter().fold(S::zero(), |acc, w| acc + w.clone());
        let err = (total - S::one()).to_f64().abs();
        if err > 1e-15f64.max(4.0 * S::unit_roundoff()) {
            return Err(Error::InvalidFormula(format!(
                "weights sum to 1 + {err:e}"
            )));
        }
        Ok(Self {
            degree,
            dim,
            paths,
            weights,
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[PiecewiseLinearPath<S>] {
        &self.paths
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }
}

impl<R: Real> CubatureFormula<R> {
    /// All paths rescaled onto `[t, s]`; weights are unchanged.
    pub fn rescale(&self, t: R, s: R) -> Result<Vec<PiecewiseLinearPath<R>>> {
        self.paths.iter().map(|p| p.rescale(t, s)).collect()
    }
}

/// Degree-3 formula in any dimension: the `2^d` straight lines to the corners
/// of `{-1, 1}^d`, equally weighted.
pub fn degree3<S: Scalar>(d: usize) -> Result<CubatureFormula<S>> {
    if d == 0 || d > 16 {
        return Err(Error::UnsupportedFormula { degree: 3, dim: d });
    }
    let count = 1usize << d;
    let weight = S::one() / S::from_i64(count as i64);
    let mut paths = Vec::with_capacity(count);
    for mask in 0..count {
        let end = (0..d)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    S::zero() - S::one()
                } else {
                    S::one()
                }
            })
            .collect();
        paths.push(PiecewiseLinearPath::new(
            vec![S::zero(), S::one()],
            vec![vec![S::zero(); d], end],
        )?);
    }
    CubatureFormula::new(3, paths, vec![weight; count])
}

fn thirds<R: Real>(increments: &[Vec<f64>]) -> Result<PiecewiseLinearPath<R>> {
    let third = R::one() / R::from_f64(3.0);
    let incs: Vec<Vec<R>> = increments
        .iter()
        .map(|v| v.iter().map(|&x| R::from_f64(x)).collect())
        .collect();
    let mut path = PiecewiseLinearPath::from_increments(R::zero(), &[third; 3], &incs)?;
    // Pin the right end to exactly 1.
    let times = {
        let mut t = path.breakpoints().to_vec();
        *t.last_mut().unwrap() = R::one();
        t
    };
    path = PiecewiseLinearPath::new(times, path.values().to_vec())?;
    Ok(path)
}

fn zero_path<R: Real>(d: usize) -> Result<PiecewiseLinearPath<R>> {
    PiecewiseLinearPath::new(
        vec![R::zero(), R::one()],
        vec![vec![R::zero(); d], vec![R::zero(); d]],
    )
}

/// Degree 5, d = 1: the zero path (weight 2/3) and a symmetric pair of
/// three-piece paths (weight 1/6 each).
fn degree5_d1<R: Real>() -> Result<CubatureFormula<R>> {
    let s3 = 3f64.sqrt();
    let a = (4.0 * s3 - 66f64.sqrt()) / 6.0;
    let up = [vec![a], vec![s3 - 2.0 * a], vec![a]];
    let down: Vec<Vec<f64>> = up.iter().map(|v| vec![-v[0]]).collect();
    let w_side = R::one() / R::from_f64(6.0);
    let w_zero = R::one() - w_side - w_side;
    CubatureFormula::new(
        5,
        vec![zero_path(1)?, thirds(&up)?, thirds(&down)?],
        vec![w_zero, w_side, w_side],
    )
}

// Root of 6a^4 - 40a^3 + 87a^2 - 54a - 8 near -0.1226, polished by Newton.
fn degree5_d2_parameter() -> f64 {
    let mut a: f64 = -0.122_559_281_340_838_2;
    for _ in 0..4 {
        let f = (((6.0 * a - 40.0) * a + 87.0) * a - 54.0) * a - 8.0;
        let df = ((24.0 * a - 120.0) * a + 174.0) * a - 54.0;
        a -= f / df;
    }
    a
}

/// Degree 5, d = 2: the zero path (weight 1/2) and the orbit of one
/// three-piece path under the 12 symmetries of the regular hexagon (weight
/// 1/24 each), 13 paths in total.
fn degree5_d2<R: Real>() -> Result<CubatureFormula<R>> {
    let a = degree5_d2_parameter();
    let m = 1.0 / (2f64.sqrt() * (2.0 - a));
    let big_q = (4.0 * a - 6.0) / ((a - 2.0) * (a - 2.0)) + 2.0;
    let q = -big_q.sqrt();
    let p = m - q / 2.0;
    let generator = [[a, p], [2.0 - 2.0 * a, q], [a, -p - q]];

    let mut paths = vec![zero_path(2)?];
    for reflect in [false, true] {
        for k in 0..6 {
            let (s, c) = (k as f64 * std::f64::consts::FRAC_PI_3).sin_cos();
            let incs: Vec<Vec<f64>> = generator
                .iter()
                .map(|&[x, y]| {
                    let y = if reflect { -y } else { y };
                    vec![c * x - s * y, s * x + c * y]
                })
                .collect();
            paths.push(thirds(&incs)?);
        }
    }
    let w = R::one() / R::from_f64(24.0);
    let w_zero = R::one() / R::from_f64(2.0);
    let mut weights = vec![w_zero];
    weights.extend(std::iter::repeat_n(w, 12));
    CubatureFormula::new(5, paths, weights)
}

/// Built-in formulas: degree 3 in any dimension, degree 5 for `d <= 2`.
pub fn builtin_formula<R: Real>(degree: u32, d: usize) -> Result<CubatureFormula<R>> {
    match (degree, d) {
        (3, _) => degree3(d),
        (5, 1) => degree5_d1(),
        (5, 2) => degree5_d2(),
        _ => Err(Error::UnsupportedFormula { degree, dim: d }),
    }
}

/// Serializable view of a formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaDocument {
    pub degree: u32,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub paths: Vec<PathDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub breakpoints: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl CubatureFormula<f64> {
    pub fn to_document(&self) -> FormulaDocument {
        FormulaDocument {
            degree: self.degree,
            dim: self.dim,
            weights: self.weights.clone(),
            paths: self
                .paths
                .iter()
                .map(|p| PathDocument {
                    breakpoints: p.breakpoints().to_vec(),
                    values: p.values().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &FormulaDocument) -> Result<Self> {
        let paths = doc
            .paths
            .iter()
            .map(|p| PiecewiseLinearPath::new(p.breakpoints.clone(), p.values.clone()))
            .collect::<Result<Vec<_>>>()?;
        let f = Self::new(doc.degree, paths, doc.weights.clone())?;
        if f.dim != doc.dim {
            return Err(Error::InvalidFormula(format!(
                "declared dimension {} but paths have {}",
                doc.dim, f.dim
            )));
        }
        Ok(f)
    }
}
