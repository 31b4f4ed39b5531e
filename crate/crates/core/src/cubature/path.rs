use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

use super::signature::{check_order, TensorSignature};

/// Continuous piecewise-linear path in `R^d`, linear between breakpoints and
/// starting at the origin. The time coordinate is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath<S> {
    times: Vec<S>,
    values: Vec<Vec<S>>,
}

/// One linear piece: its time span and spatial increment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<S> {
    pub start: S,
    pub end: S,
    pub increment: Vec<S>,
}

impl<S: Scalar> Segment<S> {
    pub fn duration(&self) -> S {
        self.end.clone() - self.start.clone()
    }
}

impl<S: Scalar> PiecewiseLinearPath<S> {
    pub fn new(times: Vec<S>, values: Vec<Vec<S>>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidPath("need at least two breakpoints".into()));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidPath(format!(
                "{} breakpoints but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath("breakpoints must increase".into()));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidPath("inconsistent dimensions".into()));
        }
        if values[0].iter().any(|v| !v.is_zero()) {
            return Err(Error::InvalidPath("path must start at the origin".into()));
        }
        Ok(Self { times, values })
    }

    /// Path on `[start, end]` through the given consecutive increments, each
    /// occupying `durations[k]` of time.
    pub fn from_increments(start: S, durations: &[S], increments: &[Vec<S>]) -> Result<Self> {
        if durations.len() != increments.len() || durations.is_empty() {
            return Err(Error::InvalidPath("durations and increments disagree".into()));
        }
        let dim = increments[0].len();
        let mut times = vec![start];
        let mut values = vec![vec![S::zero(); dim]];
        for (dt, inc) in durations.iter().zip(increments) {
            let t = times.last().unwrap().clone() + dt.clone();
            let v: Vec<S> = values
                .last()
                .unwrap()
                .iter()
                .zip(inc)
                .map(|(a, b)| a.clone() + b.clone())
                .collect();
            times.push(t);
            values.push(v);
        }
        Self::new(times, values)
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn start(&self) -> &S {
        &self.times[0]
    }

    pub fn end(&self) -> &S {
        self.times.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn endpoint(&self) -> &[S] {
        self.values.last().unwrap()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment<S>> + '_ {
        (0..self.times.len() - 1).map(move |k| Segment {
            start: self.times[k].clone(),
            end: self.times[k + 1].clone(),
            increment: self.values[k + 1]
                .iter()
                .zip(&self.values[k])
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        })
    }

    pub fn value_at(&self, t: &S) -> Vec<S> {
        if *t <= self.times[0] {
            return self.values[0].clone();
        }
        for k in 0..self.times.len() - 1 {
            if *t <= self.times[k + 1] {
                let frac = (t.clone() - self.times[k].clone())
                    / (self.times[k + 1].clone() - self.times[k].clone());
                return self.values[k]
                    .iter()
                    .zip(&self.values[k + 1])
                    .map(|(a, b)| a.clone() + (b.clone() - a.clone()) * frac.clone())
                    .collect();
            }
        }
        self.endpoint().to_vec()
    }

    /// The piece of the path on `[t, s]`, shifted to start at the origin.
    pub fn restrict(&self, t: S, s: S) -> Result<Self> {
        if !(t < s && t >= self.times[0] && s <= *self.end()) {
            return Err(Error::InvalidPath(format!(
                "[{t:?}, {s:?}] not inside the path domain"
            )));
        }
        let base = self.value_at(&t);
        let mut times = vec![t.clone()];
        let mut values = vec![vec![S::zero(); self.dim()]];
        for (k, bt) in self.times.iter().enumerate() {
            if *bt > t && *bt < s {
                times.push(bt.clone());
                values.push(
                    self.values[k]
                        .iter()
                        .zip(&base)
                        .map(|(a, b)| a.clone() - b.clone())
                        .collect(),
                );
            }
        }
        times.push(s.clone());
        values.push(
            self.value_at(&s)
                .iter()
                .zip(&base)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        );
        Self::new(times, values)
    }

    /// Iterated integrals of `(u, omega(u))` over the whole path, for every word
    /// of graded length `<= order`.
    pub fn signature(&self, order: u32) -> Result<TensorSignature<S>> {
        let depth = check_order(order)?;
        let alphabet = self.dim() + 1;
        let mut sig = TensorSignature::identity(alphabet, depth);
        let mut inc = Vec::with_capacity(alphabet);
        for seg in self.segments() {
            inc.clear();
            inc.push(seg.duration());
            inc.extend(seg.increment.iter().cloned());
            sig = sig.chen(&TensorSignature::segment_exp(&inc, depth));
        }
        Ok(sig)
    }

    /// Signature over the sub-interval `[t, s]`.
    pub fn signature_between(&self, t: S, s: S, order: u32) -> Result<TensorSignature<S>> {
        self.restrict(t, s)?.signature(order)
    }
}

impl<R: Real> PiecewiseLinearPath<R> {
    /// Brownian rescaling onto `[t, s]`: breakpoints mapped affinely, spatial
    /// values multiplied by `sqrt((s - t) / (b - a))` for a path on `[a, b]`.
    pub fn rescale(&self, t: R, s: R) -> Result<Self> {
        if !(s > t) {
            return Err(Error::InvalidPath(format!(
                "rescale needs t < s, got [{t:?}, {s:?}]"
            )));
        }
        let a = self.times[0];
        let len = *self.end() - a;
        let ratio = (s - t) / len;
        let scale = ratio.sqrt();
        let mut times: Vec<R> = self.times.iter().map(|&u| t + (u - a) * ratio).collect();
        *times.last_mut().unwrap() = s;
        let values = self
            .values
            .iter()
            .map(|v| v.iter().map(|&x| x * scale).collect())
            .collect();
        Ok(Self { times, values })
    }
}
