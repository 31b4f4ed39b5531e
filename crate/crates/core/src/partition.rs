//! Time grids on `[0, T]`: uniform, Kusuoka and the modified Kusuoka grid
//! with `r` short warm-up steps, plus the increment sums that control the
//! global error of the cubature schemes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{inv_factorial, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionKind<R> {
    Uniform,
    Kusuoka { gamma: R },
    ModifiedKusuoka { gamma: R, r: usize },
    /// Built from explicit times.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition<R> {
    times: Vec<R>,
    kind: PartitionKind<R>,
}

impl<R: Real> Partition<R> {
    pub fn uniform(horizon: R, n: usize) -> Result<Self> {
        check_common(horizon, n)?;
        let nn = R::from_i64(n as i64);
        let times = (0..=n)
            .map(|j| horizon * R::from_i64(j as i64) / nn)
            .collect();
        Self::finish(times, horizon, PartitionKind::Uniform)
    }

    /// `t_j = T (1 - (1 - j/n)^gamma)`, with `t_n = T` pinned.
    pub fn kusuoka(horizon: R, n: usize, gamma: R) -> Result<Self> {
        check_common(horizon, n)?;
        check_gamma(gamma)?;
        let times = kusuoka_times(R::zero(), horizon, n, gamma);
        Self::finish(times, horizon, PartitionKind::Kusuoka { gamma })
    }

    /// First `r` steps have length `T n^{-r/(k+1)}` for `k = 0..r-1`; the rest
    /// of `[t_r, T]` is split as a Kusuoka grid with `n - r` steps.
    pub fn modified_kusuoka(horizon: R, n: usize, gamma: R, r: usize) -> Result<Self> {
        check_common(horizon, n)?;
        check_gamma(gamma)?;
        if 2 * r >= n {
            return Err(Error::InvalidPartition(format!(
                "modified Kusuoka grid needs r < n/2, got r = {r}, n = {n}"
            )));
        }
        let nn = R::from_i64(n as i64);
        let rr = R::from_i64(r as i64);
        let mut times = Vec::with_capacity(n + 1);
        times.push(R::zero());
        let mut t = R::zero();
        for k in 0..r {
            t = t + horizon * nn.powf(-rr / R::from_i64((k + 1) as i64));
            times.push(t);
        }
        let tail = kusuoka_times(t, horizon, n - r, gamma);
        times.extend(tail.into_iter().skip(1));
        Self::finish(times, horizon, PartitionKind::ModifiedKusuoka { gamma, r })
    }

    /// Partition from explicit times. A single point `[0]` gives the empty
    /// grid with horizon zero.
    pub fn from_times(times: Vec<R>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidPartition("no time points".into()));
        }
        if times[0] != R::zero() {
            return Err(Error::InvalidPartition("t_0 must be 0".into()));
        }
        let horizon = *times.last().unwrap();
        if times.len() == 1 {
            return Ok(Self {
                times,
                kind: PartitionKind::Explicit,
            });
        }
        Self::finish(times, horizon, PartitionKind::Explicit)
    }

    fn finish(mut times: Vec<R>, horizon: R, kind: PartitionKind<R>) -> Result<Self> {
        *times.last_mut().unwrap() = horizon;
        let min_step = R::from_f64(16.0) * R::epsilon_val() * horizon;
        for (j, w) in times.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if !(dt.is_finite() && dt > min_step) {
                return Err(Error::InvalidPartition(format!(
                    "step {j} has degenerate length {:?}",
                    dt
                )));
            }
        }
        Ok(Self { times, kind })
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn kind(&self) -> &PartitionKind<R> {
        &self.kind
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> R {
        *self.times.last().unwrap()
    }

    pub fn increments(&self) -> impl Iterator<Item = R> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    /// `sum_{j=0}^{n-2} (t_{j+1} - t_j)^a (T - t_{j+1})^{-b}`.
    pub fn partition_sum(&self, a: R, b: R) -> Result<R> {
        if !(a > b && b >= R::zero()) {
            return Err(Error::invalid(format!(
                "partition sum needs a > b >= 0, got a = {a:?}, b = {b:?}"
            )));
        }
        let n = self.steps();
        let horizon = self.horizon();
        let mut acc = R::zero();
        for j in 0..n.saturating_sub(1) {
            let dt = self.times[j + 1] - self.times[j];
            let rest = horizon - self.times[j + 1];
            acc = acc + dt.powf(a) * rest.powf(-b);
        }
        Ok(acc)
    }

    /// `max_j (1/((j+1) ∧ r)!) prod_{k=0}^{j ∧ (r-1)} (t_{j+1} - t_{j-k})`, the
    /// local interpolation factor of an `r`-point Lagrange scheme.
    pub fn interpolation_factor(&self, r: usize) -> R {
        let n = self.steps();
        let mut worst = R::zero();
        for j in 0..n {
            let w = (j + 1).min(r.max(1));
            let mut prod: R = inv_factorial(w);
            for k in 0..w {
                prod = prod * (self.times[j + 1] - self.times[j - k]);
            }
            if prod > worst {
                worst = prod;
            }
        }
        worst
    }
}

fn kusuoka_times<R: Real>(start: R, end: R, n: usize, gamma: R) -> Vec<R> {
    let nn = R::from_i64(n as i64);
    let len = end - start;
    let mut times: Vec<R> = (0..n)
        .map(|j| {
            let frac = R::one() - R::from_i64(j as i64) / nn;
            start + len * (R::one() - frac.powf(gamma))
        })
        .collect();
    times.push(end);
    times
}

fn check_common<R: Real>(horizon: R, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidPartition("need at least one step".into()));
    }
    if !(horizon > R::zero() && horizon.is_finite()) {
        return Err(Error::InvalidPartition(format!(
            "horizon must be positive, got {horizon:?}"
        )));
    }
    Ok(())
}

fn check_gamma<R: Real>(gamma: R) -> Result<()> {
    if !(gamma >= R::one()) {
        return Err(Error::InvalidPartition(format!(
            "gamma must be >= 1, got {gamma:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma_one_is_uniform() {
        let p = Partition::<f64>::kusuoka(1.0, 2, 1.0).unwrap();
        assert_eq!(p.times(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn gamma_two_first_point() {
        let p = Partition::<f64>::kusuoka(1.0, 2, 2.0).unwrap();
        assert_eq!(p.times(), &[0.0, 0.75, 1.0]);
    }

    #[test]
    fn kusuoka_first_point_closed_form() {
        // 10 (1 - (3/4)^4.5)
        let expected = 10.0 * (1.0 - 0.75f64.powf(4.5));
        let p = Partition::<f64>::kusuoka(10.0, 4, 4.5).unwrap();
        assert!((p.times()[1] - 7.259_841_495_838_3).abs() < 1e-12);
        assert_eq!(p.times()[1], expected);
        assert_eq!(p.times()[4], 10.0);
        assert_eq!(p.steps(), 4);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Partition::<f64>::kusuoka(1.0, 0, 2.0).is_err());
        assert!(Partition::<f64>::kusuoka(1.0, 4, 0.5).is_err());
        assert!(Partition::<f64>::modified_kusuoka(1.0, 8, 4.5, 4).is_err());
        assert!(Partition::<f64>::uniform(-1.0, 3).is_err());
        assert!(Partition::<f64>::from_times(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn degenerate_step_guard() {
        // Step far below 16 eps T.
        assert!(Partition::<f64>::from_times(vec![0.0, 1e-300, 1.0]).is_err());
        // gamma large enough to collapse the last Kusuoka steps in f32.
        assert!(Partition::<f32>::kusuoka(1.0, 4000, 60.0).is_err());
    }

    #[test]
    fn modified_kusuoka_prefix_steps() {
        let p = Partition::<f64>::modified_kusuoka(1.0, 10, 4.5, 3).unwrap();
        let t = p.times();
        assert!((t[1] - 1e-3).abs() < 1e-15);
        assert!((t[2] - t[1] - 10f64.powf(-1.5)).abs() < 1e-15);
        assert!((t[3] - t[2] - 0.1).abs() < 1e-15);
        assert_eq!(t[10], 1.0);
    }

    #[test]
    fn modified_kusuoka_uniform_tail() {
        let p = Partition::<f64>::modified_kusuoka(1.0, 10, 1.0, 3).unwrap();
        let t = p.times();
        let h = (1.0 - t[3]) / 7.0;
        for j in 3..10 {
            assert!((t[j + 1] - t[j] - h).abs() < 1e-14);
        }
    }

    #[test]
    fn modified_kusuoka_monotone() {
        let p = Partition::<f64>::modified_kusuoka(1.0, 9, 4.5, 4).unwrap();
        assert!(p.times().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.horizon(), 1.0);
        // r = 4 needs n > 8.
        assert!(Partition::<f64>::modified_kusuoka(1.0, 8, 4.5, 4).is_err());
    }

    #[test]
    fn uniform_partition_sum_telescopes() {
        let p = Partition::<f64>::uniform(1.0, 4).unwrap();
        assert!((p.partition_sum(1.0, 0.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(p.partition_sum(1.0, 1.0).is_err());
    }

    #[test]
    fn partition_sum_matches_direct_summation() {
        let p = Partition::<f64>::kusuoka(1.0, 100, 4.5).unwrap();
        let t = p.times();
        let mut direct = 0.0;
        for j in 0..99 {
            direct += (t[j + 1] - t[j]).powi(3) / (1.0 - t[j + 1]);
        }
        let s = p.partition_sum(3.0, 1.0).unwrap();
        assert!(s.is_finite() && s > 0.0);
        assert!((s - direct).abs() <= 1e-14 * direct);
    }

    #[test]
    fn kusuoka_sum_normalised_is_bounded() {
        for &(a, b, gamma) in &[(2.0, 0.0, 2.0), (3.0, 1.0, 4.5), (3.0, 0.5, 4.5)] {
            let vals: Vec<f64> = (1..=100)
                .map(|k| {
                    let n = 10 * k;
                    let p = Partition::<f64>::kusuoka(1.0, n, gamma).unwrap();
                    (n as f64).powf(a - 1.0) * p.partition_sum(a, b).unwrap()
                })
                .collect();
            let max = vals.iter().cloned().fold(f64::MIN, f64::max);
            let min = vals.iter().cloned().fold(f64::MAX, f64::min);
            assert!(max / min <= 3.0, "a={a} b={b}: {min} .. {max}");
        }
    }

    #[test]
    fn interpolation_factor_scales_like_n_to_minus_r() {
        let r = 3;
        let vals: Vec<f64> = (10..=200)
            .step_by(10)
            .map(|n| {
                let p = Partition::<f64>::modified_kusuoka(1.0, n, 4.5, r).unwrap();
                (n as f64).powi(r as i32) * p.interpolation_factor(r)
            })
            .collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 5.0, "{vals:?}");
    }

    proptest! {
        #[test]
        fn kusuoka_increment_bound(n in 1usize..200, gamma in 1.0f64..5.0, horizon in 0.1f64..20.0) {
            let p = Partition::<f64>::kusuoka(horizon, n, gamma).unwrap();
            let c = 2f64.powf(gamma - 1.0) * horizon * gamma;
            let t = p.times();
            for j in 0..n.saturating_sub(1) {
                let bound = c / n as f64 * (1.0 - (j + 1) as f64 / n as f64).powf(gamma - 1.0);
                prop_assert!(t[j + 1] - t[j] <= bound * (1.0 + 1e-12));
            }
        }

        #[test]
        fn modified_grid_is_strictly_increasing(n in 3usize..200, gamma in 1.0f64..5.0, frac in 0.0f64..1.0) {
            let r = (((n - 1) / 2).min(6) as f64 * frac) as usize;
            let p = Partition::<f64>::modified_kusuoka(2.0, n, gamma, r).unwrap();
            prop_assert_eq!(p.times()[0], 0.0);
            prop_assert_eq!(p.horizon(), 2.0);
            prop_assert!(p.times().windows(2).all(|w| w[1] > w[0]));
        }
    }
}
