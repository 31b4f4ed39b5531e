//! Reference values: the closed form for the built-in one-dimensional example
//! and an Euler-Maruyama particle solver for everything else.

use rand::Rng;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::pairwise_sum;
use crate::model::Problem;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal distribution function, `erfc(-z / sqrt 2) / 2`. `libm`
/// computes `erfc` to within about an ulp, and the complement form avoids
/// cancellation in the lower tail.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[(X_T)^+]` for `dX = E[X] dt + dB`, `X_0 = x`. The mean solves
/// `m' = m`, so `X_T ~ N(x e^T, T)`.
pub fn closed_form_example1(x: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("closed form needs T > 0, got x={x}, T={horizon}")));
    }
    let m = x * horizon.exp();
    let s = horizon.sqrt();
    Ok(s * normal_pdf(m / s) + m * normal_cdf(m / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub particles: usize,
    pub steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 || self.steps == 0 {
            return Err(Error::invalid(format!(
                "Monte Carlo needs at least 2 particles and 1 step, got {self:?}"
            )));
        }
        if self.antithetic && !self.particles.is_multiple_of(2) {
            return Err(Error::invalid("antithetic sampling needs an even particle count"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Standard error of `estimate`; antithetic pairs count as one sample.
    pub stderr: f64,
}

/// Per-worker scratch for the Euler step.
struct Scratch {
    drift: Vec<f64>,
    noise: Vec<f64>,
    v: Vec<f64>,
    jac: Vec<f64>,
    dw: Vec<f64>,
}

/// Euler-Maruyama for the interacting particle system, with the expectations
/// in the coefficients replaced by population averages. The Stratonovich
/// equation is converted to Ito form by adding `1/2 sum_i (dV_i) V_i` to the
/// drift.
///
/// Each particle (or antithetic pair) draws from its own PCG stream keyed by
/// `(seed, index)`, so adding particles leaves existing ones untouched, and
/// the result does not depend on the number of threads.
pub fn euler_mc(problem: &Problem, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let (n, d) = (problem.state_dim(), problem.noise_dim());
    let group = if cfg.antithetic { 2 } else { 1 };
    let groups = cfg.particles / group;
    let dt = problem.horizon() / cfg.steps as f64;
    let sqrt_dt = dt.sqrt();

    let mut states: Vec<f64> = problem
        .initial_state()
        .iter()
        .copied()
        .cycle()
        .take(cfg.particles * n)
        .collect();
    let mut rngs: Vec<Pcg64> = (0..groups)
        .map(|g| Pcg64::new(u128::from(cfg.seed), g as u128))
        .collect();
    let scratch = || Scratch {
        drift: vec![0.0; n],
        noise: vec![0.0; n],
        v: vec![0.0; n],
        jac: vec![0.0; n * n],
        dw: vec![0.0; d],
    };

    for step in 0..cfg.steps {
        let means = population_means(problem, &states, cfg.particles)?;
        states
            .par_chunks_mut(group * n)
            .zip(rngs.par_iter_mut())
            .try_for_each_init(scratch, |s, (xs, rng)| -> Result<()> {
                for w in s.dw.iter_mut() {
                    *w = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
                }
                for (k, x) in xs.chunks_mut(n).enumerate() {
                    let sign = if k == 0 { 1.0 } else { -1.0 };
                    euler_step(problem, &means, dt, sign, x, s)?;
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite(format!("particle state at step {step}")));
                    }
                }
                Ok(())
            })?;
    }

    let samples: Vec<f64> = states
        .par_chunks(group * n)
        .map(|xs| xs.chunks(n).map(|x| problem.terminal(x)).sum::<f64>() / group as f64)
        .collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("terminal value".into()));
    }
    let m = samples.len() as f64;
    let estimate = pairwise_sum(&samples) / m;
    let sq: Vec<f64> = samples.par_iter().map(|v| (v - estimate) * (v - estimate)).collect();
    let var = pairwise_sum(&sq) / (m - 1.0);
    Ok(McEstimate {
        estimate,
        stderr: (var / m).sqrt(),
    })
}

fn population_means(problem: &Problem, states: &[f64], particles: usize) -> Result<Vec<f64>> {
    let n = problem.state_dim();
    (0..=problem.noise_dim())
        .map(|i| {
            let v: Vec<f64> = states.par_chunks(n).map(|x| problem.interaction(i, x)).collect();
            let mean = pairwise_sum(&v) / particles as f64;
            if mean.is_finite() {
                Ok(mean)
            } else {
                Err(Error::NonFinite(format!("population mean of phi_{i}")))
            }
        })
        .collect()
}

fn euler_step(problem: &Problem, means: &[f64], dt: f64, sign: f64, x: &mut [f64], s: &mut Scratch) -> Result<()> {
    let n = x.len();
    problem.field(0, x, means[0], &mut s.drift);
    s.noise.iter_mut().for_each(|v| *v = 0.0);
    for (i, &y) in means.iter().enumerate().skip(1) {
        problem.field(i, x, y, &mut s.v);
        problem.jacobian_into(i, x, y, &mut s.jac)?;
        let dw = sign * s.dw[i - 1];
        for (r, row) in s.jac.chunks_exact(n).enumerate() {
            let jv: f64 = row.iter().zip(&s.v).map(|(j, v)| j * v).sum();
            s.drift[r] += 0.5 * jv;
            s.noise[r] += s.v[r] * dw;
        }
    }
    for ((xr, d), w) in x.iter_mut().zip(&s.drift).zip(&s.noise) {
        *xr += d * dt + w;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{example1, ProblemBuilder, TerminalKind};

    /// Composite Simpson for `int (m + s z)^+ phi(z) dz`, starting at the kink.
    fn quadrature_oracle(x: f64, t: f64) -> f64 {
        let m = x * t.exp();
        let s = t.sqrt();
        let a = (-m / s).max(-40.0);
        let b = a.max(0.0) + 40.0;
        let k = 200_000;
        let h = (b - a) / k as f64;
        let g = |z: f64| (m + s * z) * normal_pdf(z);
        let mut acc = g(a) + g(b);
        for j in 1..k {
            acc += g(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn closed_form_values() {
        for t in [0.5, 1.0, 10.0] {
            let v = closed_form_example1(0.0, t).unwrap();
            assert!((v - (t / (2.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
        }
        for (x, t) in [(0.5, 10.0), (0.5, 1.0), (-0.3, 2.0), (-2.0, 1.0)] {
            let v = closed_form_example1(x, t).unwrap();
            let q = quadrature_oracle(x, t);
            assert!((v - q).abs() <= 1e-10 * q.abs().max(1.0), "x={x} T={t}: {v} vs {q}");
        }
        let big = closed_form_example1(20.0, 1.0).unwrap();
        assert_eq!(big, 20.0 * 1f64.exp());
        assert!(closed_form_example1(0.5, 0.0).is_err());
    }

    #[test]
    fn normal_cdf_tails() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) + normal_cdf(-1.0) - 1.0).abs() < 1e-16);
        // Mills ratio asymptotics: Phi(-z) ~ phi(z) / z (1 - 1/z^2 + 3/z^4).
        let z: f64 = 30.0;
        let approx = normal_pdf(z) / z * (1.0 - 1.0 / (z * z) + 3.0 / z.powi(4));
        assert!((normal_cdf(-z) / approx - 1.0).abs() < 1e-7);
    }

    fn gbm() -> Problem {
        ProblemBuilder::new(1, 1)
            .field(1, |z, _, out| out[0] = z[0])
            .terminal(TerminalKind::Smooth, |z| z[0])
            .build("gbm", vec![1.0], 1.0)
            .unwrap()
    }

    #[test]
    fn stratonovich_correction() {
        // Ito form dX = X/2 dt + X dB, so the Euler mean is x (1 + dt/2)^n.
        let cfg = McConfig {
            particles: 100_000,
            steps: 50,
            seed: 7,
            antithetic: false,
        };
        let r = euler_mc(&gbm(), &cfg).unwrap();
        let want = (1.0 + 0.5 / 50.0f64).powi(50);
        assert!((r.estimate - want).abs() < 4.0 * r.stderr, "{r:?} vs {want}");
    }

    #[test]
    fn deterministic_dynamics_have_no_spread() {
        let p = ProblemBuilder::new(1, 1)
            .field(0, |_, y, out| out[0] = y)
            .interaction(0, |z| z[0])
            .terminal(TerminalKind::Smooth, |z| z[0])
            .build("deterministic", vec![1.0], 1.0)
            .unwrap();
        let cfg = McConfig {
            particles: 64,
            steps: 100,
            seed: 1,
            antithetic: false,
        };
        let r = euler_mc(&p, &cfg).unwrap();
        assert!((r.estimate - 1.01f64.powi(100)).abs() < 1e-12);
        assert!(r.stderr < 1e-14);
        assert!((r.estimate - 1f64.exp()).abs() < 1.0 / 100.0 * 1f64.exp());
    }

    #[test]
    fn seeded_and_thread_independent() {
        let p = example1().with_horizon(1.0).unwrap();
        let cfg = McConfig {
            particles: 5000,
            steps: 20,
            seed: 99,
            antithetic: false,
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| euler_mc(&p, &cfg)).unwrap();
        let b = three.install(|| euler_mc(&p, &cfg)).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let c = euler_mc(&p, &McConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn stderr_scales_like_inverse_sqrt() {
        let p = example1().with_horizon(1.0).unwrap();
        let run = |particles| {
            euler_mc(&p, &McConfig {
                particles,
                steps: 10,
                seed: 3,
                antithetic: false,
            })
            .unwrap()
            .stderr
        };
        let (a, b, c) = (run(10_000), run(100_000), run(1_000_000));
        for ratio in [a / b, b / c] {
            let r = ratio / 10f64.sqrt();
            assert!((0.8..=1.2).contains(&r), "{a} {b} {c}");
        }
    }

    #[test]
    fn antithetic_agrees() {
        let p = example1().with_horizon(1.0).unwrap();
        let cfg = McConfig {
            particles: 200_000,
            steps: 20,
            seed: 11,
            antithetic: false,
        };
        let plain = euler_mc(&p, &cfg).unwrap();
        let anti = euler_mc(&p, &McConfig { antithetic: true, ..cfg }).unwrap();
        let tol = 3.0 * plain.stderr.hypot(anti.stderr);
        assert!((plain.estimate - anti.estimate).abs() < tol, "{plain:?} {anti:?}");
        assert!(McConfig { particles: 3, ..cfg }.validate().is_ok());
        assert!(McConfig { particles: 3, antithetic: true, ..cfg }.validate().is_err());
    }
}
