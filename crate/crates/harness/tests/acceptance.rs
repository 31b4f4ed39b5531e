//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Criteria 2 and 3 run full convergence sweeps and take
//! several minutes on one core.

use std::time::Instant;

use mkv_cubature::{
    builtin_formula, builtin_problem, closed_form_example1, euler_mc, solve, Limits, McConfig, Method, OdeConfig,
    Partition,
};
use mkv_harness::config::{
    ExperimentConfig, FormulaConfig, MethodConfig, OutputConfig, PartitionConfig, PartitionKindConfig, ReferenceConfig,
};
use mkv_harness::converge::{compute_reference, run_with_reference, ConvergenceReport};
use mkv_harness::verify::{normalized_partition_sums, verify, Check, Subject};

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn checks_detail(checks: &[Check]) -> String {
    checks
        .iter()
        .map(|c| match &c.error {
            Some(e) => format!("{}: error {e}", c.name),
            None => format!("{} {:.2e} (tol {:.0e})", c.name, c.value, c.tolerance),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn quiet(_: &str) {}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for (degree, d) in [(3, 1), (3, 2), (5, 1), (5, 2)] {
        let r = verify(Subject::Cubature { degree, d });
        if let Some(c) = &r.cubature {
            worst = worst.max(c.max_residual);
        }
        if !r.passed {
            failed.push(format!("degree {degree} d={d}"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let passed = failed.is_empty() && secs < 1.0;
    outcome(
        passed,
        format!("max moment residual {worst:.2e} over 4 formulas in {secs:.3} s; failing: {failed:?}"),
    )
}

fn example1_config(method: MethodConfig, partition: PartitionConfig) -> ExperimentConfig {
    ExperimentConfig {
        problem: "example1".into(),
        initial_state: Some(vec![0.5]),
        horizon: Some(10.0),
        method,
        formula: FormulaConfig { degree: 5, d: 1 },
        partition,
        sweep: (2..=12).collect(),
        reference: ReferenceConfig::ClosedForm,
        ode: OdeConfig::default(),
        output: OutputConfig::default(),
        fit_window: 4,
        max_nodes: None,
        parallel_sweep: false,
    }
}

fn sweep(cfg: &ExperimentConfig) -> ConvergenceReport {
    let problem = cfg.problem().unwrap();
    let reference = compute_reference(cfg, &problem).unwrap();
    run_with_reference(cfg, &problem, reference, &quiet).unwrap()
}

fn errors(r: &ConvergenceReport) -> String {
    r.rows
        .iter()
        .map(|row| match row.abs_error {
            Some(e) => format!("{}:{e:.3e}", row.n),
            None => format!("{}:failed", row.n),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_2() -> Outcome {
    let taylor = sweep(&example1_config(
        MethodConfig::Taylor { q: 2 },
        PartitionConfig {
            kind: PartitionKindConfig::Kusuoka,
            gamma: Some(4.5),
            r: None,
        },
    ));
    let lagrange = sweep(&example1_config(
        MethodConfig::Lagrange { r: 3 },
        PartitionConfig {
            kind: PartitionKindConfig::ModifiedKusuoka,
            gamma: Some(4.5),
            r: Some(3),
        },
    ));
    let slope = |r: &ConvergenceReport| r.fit.map(|f| f.slope).unwrap_or(f64::NAN);
    let (st, sl) = (slope(&taylor), slope(&lagrange));
    let ok = |s: f64| (-2.6..=-1.5).contains(&s);
    let passed = taylor.ok() && lagrange.ok() && ok(st) && ok(sl);
    outcome(
        passed,
        format!(
            "fitted slopes (last 4 of n=2..12, target [-2.6, -1.5]): taylor {st:.3}, lagrange {sl:.3}; \
             taylor errors [{}]; lagrange errors [{}]",
            errors(&taylor),
            errors(&lagrange)
        ),
    )
}

fn criterion_3() -> Outcome {
    let cfg = ExperimentConfig {
        problem: "example2".into(),
        initial_state: Some(vec![1.0, 0.5]),
        horizon: Some(1.0),
        method: MethodConfig::Lagrange { r: 4 },
        formula: FormulaConfig { degree: 5, d: 2 },
        partition: PartitionConfig {
            kind: PartitionKindConfig::ModifiedKusuoka,
            gamma: Some(4.5),
            r: Some(4),
        },
        sweep: (3..=7).collect(),
        reference: ReferenceConfig::EulerMc(McConfig {
            particles: 1_000_000,
            steps: 2000,
            seed: 20240501,
            antithetic: false,
        }),
        ode: OdeConfig::default(),
        output: OutputConfig::default(),
        fit_window: 4,
        max_nodes: None,
        parallel_sweep: false,
    };
    let report = sweep(&cfg);
    let errs: Vec<f64> = report.rows.iter().filter_map(|r| r.abs_error).collect();
    let complete = report.ok() && errs.len() == 5;
    let decreasing = complete && errs.windows(2).all(|w| w[1] < w[0]);
    let factor = if complete { errs[0] / errs[4] } else { f64::NAN };
    let smallest = errs.iter().copied().fold(f64::INFINITY, f64::min);
    let stderr = report.reference.stderr;
    let passed = decreasing && factor >= 2.0 && stderr <= 0.2 * smallest;
    outcome(
        passed,
        format!(
            "reference {:.6} +- {stderr:.2e}; errors [{}]; strictly decreasing {decreasing}; \
             e3/e7 = {factor:.2} (need >= 2); stderr / smallest error = {:.2} (need <= 0.2); {}",
            report.reference.value,
            errors(&report),
            stderr / smallest,
            report.warnings.join("; ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let r = verify(Subject::Taylor);
    outcome(r.passed, checks_detail(&r.checks))
}

fn criterion_5() -> Outcome {
    let r = verify(Subject::Lagrange);
    outcome(r.passed, checks_detail(&r.checks))
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let mut parts = Vec::new();
    let mut passed = true;
    for (a, b, gamma) in [(2.0, 0.0, 2.0), (3.0, 1.0, 4.5), (3.0, 0.5, 4.5)] {
        match normalized_partition_sums(PartitionKindConfig::Kusuoka, gamma, None, a, b) {
            Ok(v) => {
                let hi = v.iter().copied().fold(f64::MIN, f64::max);
                let lo = v.iter().copied().fold(f64::MAX, f64::min);
                passed &= hi / lo <= 3.0;
                parts.push(format!("(a={a}, b={b}, gamma={gamma}) max/min {:.3}", hi / lo));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("(a={a}, b={b}, gamma={gamma}) error {e}"));
            }
        }
    }
    outcome(
        passed,
        format!("{} over n=10..1000 in {:.2} s", parts.join(", "), started.elapsed().as_secs_f64()),
    )
}

fn criterion_7() -> Outcome {
    let p = builtin_problem("example1").unwrap();
    let f = builtin_formula(5, 1).unwrap();
    let ode = OdeConfig::default();
    let mut parts = Vec::new();
    let mut passed = true;
    for n in [2, 4, 8] {
        let part = Partition::kusuoka(10.0, n, 4.5).unwrap();
        let a = solve(&p, &f, &part, Method::Taylor { order: 0 }, &ode, &Limits::default());
        let b = solve(&p, &f, &part, Method::Lagrange { points: 1 }, &ode, &Limits::default());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let same = a.estimate.to_bits() == b.estimate.to_bits();
                passed &= same;
                parts.push(format!("n={n}: {} vs {} identical {same}", a.estimate, b.estimate));
            }
            (a, b) => {
                passed = false;
                parts.push(format!("n={n}: {:?} / {:?}", a.err(), b.err()));
            }
        }
    }
    outcome(passed, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut counts = vec![1, 2, max];
    counts.sort_unstable();
    counts.dedup();
    let cases = [
        ("example1", 5, 1, 8, Method::Taylor { order: 2 }),
        ("example2", 5, 2, 4, Method::Lagrange { points: 4 }),
    ];
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, degree, d, n, method) in cases {
        let p = builtin_problem(name).unwrap();
        let f = builtin_formula(degree, d).unwrap();
        let part = Partition::kusuoka(p.horizon(), n, 4.5).unwrap();
        let bits: Vec<u64> = counts
            .iter()
            .map(|&t| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
                pool.install(|| solve(&p, &f, &part, method, &OdeConfig::default(), &Limits::default()))
                    .map(|r| r.estimate.to_bits())
                    .unwrap_or(u64::MAX)
            })
            .collect();
        let same = bits.iter().all(|b| *b == bits[0] && *b != u64::MAX);
        passed &= same;
        parts.push(format!("{name} n={n}: identical across {counts:?} threads {same}"));
    }
    outcome(passed, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let p = builtin_problem("example1").unwrap().with_horizon(1.0).unwrap();
    let cfg = McConfig {
        particles: 1_000_000,
        steps: 1000,
        seed: 9,
        antithetic: false,
    };
    let exact = closed_form_example1(0.5, 1.0).unwrap();
    match euler_mc(&p, &cfg) {
        Ok(r) => {
            let gap = (r.estimate - exact).abs();
            let allowed = 3.0 * r.stderr + 5e-3;
            outcome(
                gap <= allowed,
                format!("estimate {:.6} +- {:.2e} vs closed form {exact:.6}: gap {gap:.2e}, allowed {allowed:.2e}", r.estimate, r.stderr),
            )
        }
        Err(e) => outcome(false, format!("error {e}")),
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "cubature moments", criterion_1),
        (2, "example1 convergence rate", criterion_2),
        (3, "example2 convergence at desk scale", criterion_3),
        (4, "taylor engine vs closed form", criterion_4),
        (5, "lagrange identities", criterion_5),
        (6, "partition sum bounds", criterion_6),
        (7, "taylor(0) equals lagrange(1)", criterion_7),
        (8, "thread-count determinism", criterion_8),
        (9, "monte carlo reference", criterion_9),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        let started = Instant::now();
        let o = run();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} {status} {name} [{:.1} s]: {}",
            started.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.passed {
            failed.push(id);
        }
    }
    println!("acceptance: {} of 9 criteria passed; failing {failed:?}", 9 - failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
