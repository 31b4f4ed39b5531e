//! Self-checks behind the `verify` subcommand. Failures are report content,
//! never errors.

use mkv_cubature::cubature::{verify_degree, DegreeReport};
use mkv_cubature::lagrange::{basis_values, lagrange_poly, node_polynomial};
use mkv_cubature::taylor::{CouplingEnvironment, TaylorEngine};
use mkv_cubature::{builtin_formula, builtin_problem, DiscreteMeasure, InterpolationWindow, Partition, ScalarPolynomial};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::Serialize;

use crate::config::PartitionKindConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "subject", rename_all = "snake_case")]
pub enum Subject {
    Cubature {
        degree: u32,
        d: usize,
    },
    Partition {
        kind: PartitionKindConfig,
        gamma: f64,
        r: Option<usize>,
        a: f64,
        b: f64,
    },
    Lagrange,
    Taylor,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst residual or ratio seen.
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    fn bound(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            error: None,
        }
    }

    fn failed(name: impl Into<String>, error: impl ToString) -> Self {
        Self {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance: f64::NAN,
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub subject: Subject,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubature: Option<DegreeReport>,
}

/// Tolerance for the moment-matching check of the built-in formulas.
pub const CUBATURE_TOL: f64 = 1e-12;
/// Largest allowed max/min ratio of the normalised partition sums.
pub const PARTITION_RATIO: f64 = 3.0;

pub fn verify(subject: Subject) -> VerifyReport {
    let mut cubature = None;
    let checks = match subject {
        Subject::Cubature { degree, d } => {
            match builtin_formula(degree, d).and_then(|f| verify_degree(&f, CUBATURE_TOL)) {
                Ok(r) => {
                    let checks = vec![
                        Check::bound("max moment residual", r.max_residual, CUBATURE_TOL),
                        Check::bound("weight sum error", r.weight_sum_error, CUBATURE_TOL),
                    ];
                    cubature = Some(r);
                    checks
                }
                Err(e) => vec![Check::failed("build formula", e)],
            }
        }
        Subject::Partition { kind, gamma, r, a, b } => vec![partition_check(kind, gamma, r, a, b)],
        Subject::Lagrange => lagrange_checks(),
        Subject::Taylor => taylor_checks(),
    };
    VerifyReport {
        subject,
        passed: checks.iter().all(|c| c.passed),
        checks,
        cubature,
    }
}

/// `n^(a-1) sum_j (t_{j+1} - t_j)^a (T - t_{j+1})^-b` over `n = 10..=1000`
/// should stay within a constant factor.
pub fn normalized_partition_sums(
    kind: PartitionKindConfig,
    gamma: f64,
    r: Option<usize>,
    a: f64,
    b: f64,
) -> mkv_cubature::Result<Vec<f64>> {
    (10..=1000usize)
        .map(|n| {
            let p = match kind {
                PartitionKindConfig::Uniform => Partition::uniform(1.0, n)?,
                PartitionKindConfig::Kusuoka => Partition::kusuoka(1.0, n, gamma)?,
                PartitionKindConfig::ModifiedKusuoka => Partition::modified_kusuoka(1.0, n, gamma, r.unwrap_or(1))?,
            };
            Ok((n as f64).powf(a - 1.0) * p.partition_sum(a, b)?)
        })
        .collect()
}

fn partition_check(kind: PartitionKindConfig, gamma: f64, r: Option<usize>, a: f64, b: f64) -> Check {
    let name = format!("partition sum a={a} b={b} gamma={gamma}: max/min over n=10..1000");
    match normalized_partition_sums(kind, gamma, r, a, b) {
        Ok(v) => {
            let hi = v.iter().copied().fold(f64::MIN, f64::max);
            let lo = v.iter().copied().fold(f64::MAX, f64::min);
            Check::bound(name, hi / lo, PARTITION_RATIO)
        }
        Err(e) => Check::failed(name, e),
    }
}

fn sorted_nodes(rng: &mut Pcg64, w: usize) -> Vec<f64> {
    let mut t = 0.0;
    (0..w)
        .map(|_| {
            t += rng.random_range(0.05..1.0);
            t
        })
        .collect()
}

/// Reproduction of low-degree polynomials, the monomial residual identity and
/// partition of unity, over random node sets of 1 to 6 points.
fn lagrange_checks() -> Vec<Check> {
    let mut rng = Pcg64::seed_from_u64(17);
    let (mut repro, mut residual, mut unity) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let w = rng.random_range(1..=6);
        let times = sorted_nodes(&mut rng, w);
        let coeffs: Vec<f64> = (0..w).map(|_| rng.random_range(-2.0..2.0)).collect();
        let truth = ScalarPolynomial::new(coeffs, 0.0);
        let values: Vec<f64> = times.iter().map(|&t| truth.eval(t)).collect();
        let window = match InterpolationWindow::new(times.clone(), values) {
            Ok(w) => w,
            Err(e) => return vec![Check::failed("interpolation window", e)],
        };
        let p = lagrange_poly(&window);
        // Residuals are measured against what Horner evaluation of the
        // returned polynomial can resolve: sum_k |a_k| |t - c|^k.
        let monomials: Vec<f64> = times.iter().map(|t| t.powi(w as i32)).collect();
        let monomial = match InterpolationWindow::new(times.clone(), monomials) {
            Ok(m) => lagrange_poly(&m),
            Err(e) => return vec![Check::failed("interpolation window", e)],
        };
        for _ in 0..20 {
            let t = rng.random_range(0.0..7.0);
            let scale = 1.0 + truth.eval(t).abs() + p.magnitude(t);
            repro = repro.max((p.eval(t) - truth.eval(t)).abs() / scale);
            let tw = t.powi(w as i32);
            let res = tw - monomial.eval(t);
            residual = residual.max((res - node_polynomial(&times, &t)).abs() / (1.0 + tw + monomial.magnitude(t)));
            let Ok(l) = basis_values(&times, &t) else {
                return vec![Check::failed("basis values", "rejected nodes")];
            };
            let total: f64 = l.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            unity = unity.max((l.iter().sum::<f64>() - 1.0).abs() / total);
        }
    }
    vec![
        Check::bound("reproduces polynomials of degree < w", repro, 1e-12),
        Check::bound("t^w residual equals node polynomial", residual, 1e-12),
        Check::bound("basis sums to one (relative to sum |L_j|)", unity, 1e-13),
    ]
}

/// Largest coefficient gap between the `T^k` series of the closed form and
/// the symbolic engine on random levels of example 1, and the coefficients
/// at the exact initial law.
pub fn taylor_checks() -> Vec<Check> {
    let run = || -> mkv_cubature::Result<(f64, f64)> {
        let p = builtin_problem("example1")?;
        let hook = TaylorEngine::new(&p, 2)?;
        let symbolic = TaylorEngine::symbolic(&p, 2)?;
        let x = p.initial_state()[0];
        let dirac = DiscreteMeasure::dirac(p.initial_state());
        let moments = [x, 0.0];
        let env = CouplingEnvironment {
            time: 0.0,
            moments: &moments,
            evaluator: &dirac,
        };
        let want = [x, x, x / 2.0];
        let mut exact = 0.0f64;
        for engine in [&hook, &symbolic] {
            let c = engine.taylor_poly(&p, 0, &env)?;
            for (a, b) in c.coeffs().iter().zip(want) {
                exact = exact.max((a - b).abs());
            }
        }
        let mut rng = Pcg64::seed_from_u64(4);
        let mut gap = 0.0f64;
        for _ in 0..20 {
            let nodes = rng.random_range(1..50);
            let states: Vec<f64> = (0..nodes).map(|_| rng.random_range(-3.0..3.0)).collect();
            let raw: Vec<f64> = (0..nodes).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let level = DiscreteMeasure::new(1, states, raw.iter().map(|w| w / total).collect())?;
            let mean = level.moments(&[|z: &[f64]| z[0]])?[0];
            let moments = [mean, 0.0];
            let env = CouplingEnvironment {
                time: rng.random_range(0.0..10.0),
                moments: &moments,
                evaluator: &level,
            };
            for i in 0..2 {
                let a = hook.taylor_poly(&p, i, &env)?;
                let b = symbolic.taylor_poly(&p, i, &env)?;
                for (u, v) in a.coeffs().iter().zip(b.coeffs()) {
                    gap = gap.max((u - v).abs());
                }
            }
        }
        Ok((exact, gap))
    };
    match run() {
        Ok((exact, gap)) => vec![
            Check::bound("example1 coefficients (x, x, x/2) at t=0", exact, 1e-12),
            Check::bound("closed form vs symbolic engine on 20 random levels", gap, 1e-10),
        ],
        Err(e) => vec![Check::failed("taylor engine", e)],
    }
}
