//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p halfline-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use halfline::kernels::{Convention, KernelKind, KernelSpec, NormalizedKernel, PotentialParams};
use halfline::kernels::{default_t_sequence, heat_mass, normalization_constant};
use halfline::oracle::cn_kernel_comparison;
use halfline::quadrature::semigroup_defect;
use halfline::specfun::{bessel_i_scaled, bessel_j, gamma_ln, BesselOrder};
use halfline::verify::{run_suite, seam_defect, spectral_agreement, Suite, VerifyConfig};
use num_complex::Complex64;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    summary: String,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome { pass, summary: summary.into() }
    }
}

fn kernel(kind: KernelKind, conv: Convention, k: f64, omega: f64, xi: f64) -> NormalizedKernel {
    let p = PotentialParams::new(k, omega).expect("valid parameters");
    NormalizedKernel::analytic(KernelSpec::new(kind, conv, p, xi).expect("valid spec"))
}

fn fmt_worst(worst: f64) -> String {
    if worst.is_finite() { format!("{worst:.3e}") } else { "error".into() }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    for k in [0.0, 1.0, 2.25] {
        for omega in [0.5, 1.0] {
            let p = PotentialParams::new(k, omega).unwrap();
            let d = spectral_agreement(p, &[0.5, 1.0, 2.0], 100).unwrap_or(f64::INFINITY);
            if d > worst || d.is_nan() {
                worst = d;
                where_ = format!("k={k} omega={omega}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-9 && secs <= 5.0,
        format!("max rel diff {} at {where_} (tol 1e-9), {secs:.2}s (limit 5s)", fmt_worst(worst)),
    )
}

fn suite_outcome(suite: Suite, cfg: &VerifyConfig) -> Outcome {
    match run_suite(suite, cfg) {
        Ok(r) => {
            let failed: Vec<String> = r.failures().map(|c| format!("{} = {:.3e}", c.name, c.value)).collect();
            let summary = if failed.is_empty() {
                format!("{} records", r.records.len())
            } else {
                format!("{} of {} records failed: {}", failed.len(), r.records.len(), failed.join("; "))
            };
            Outcome::new(r.pass, summary)
        }
        Err(e) => Outcome::new(false, format!("suite error: {e}")),
    }
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_mass = 0.0f64;
    let mut worst_limit = 0.0f64;
    let mut worst_spread = 0.0f64;
    for k in [0.0, 1.0] {
        for omega in [0.5, 1.0] {
            let spec = |xi| {
                KernelSpec::new(
                    KernelKind::HeatHarmonic,
                    Convention::HalfFactor,
                    PotentialParams::new(k, omega).unwrap(),
                    xi,
                )
                .unwrap()
            };
            let mut ratios = Vec::new();
            for xi in [0.5, 1.0, 2.0] {
                let report = match normalization_constant(&spec(xi), &default_t_sequence()) {
                    Ok(r) => r,
                    Err(e) => {
                        failures.push(format!("({k},{omega},{xi}) {e}"));
                        continue;
                    }
                };
                let normed = NormalizedKernel::with_c0(spec(xi), Complex64::new(report.c0, 0.0));
                let mass = heat_mass(&normed, 1e-3, 1e-12).map(|m| (m - 1.0).abs()).unwrap_or(f64::INFINITY);
                let closed_form = NormalizedKernel::analytic(spec(xi)).c0.re;
                let limit = (closed_form * report.limit - 1.0).abs();
                worst_mass = worst_mass.max(mass);
                worst_limit = worst_limit.max(limit);
                if mass > 2e-3 {
                    failures.push(format!("mass gap {mass:.2e} at ({k},{omega},{xi})"));
                }
                if limit > 1e-6 {
                    failures.push(format!("limit gap {limit:.2e} at ({k},{omega},{xi})"));
                }
                ratios.push(report.c0 / xi.sqrt());
            }
            if ratios.len() == 3 {
                let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
                let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
                worst_spread = worst_spread.max((hi - lo) / hi);
            }
        }
    }
    if worst_spread > 1e-6 {
        failures.push(format!("c0/sqrt(xi) spread {worst_spread:.2e}"));
    }
    let mut summary = format!(
        "max |mass(1e-3)-1| {worst_mass:.3e} (tol 2e-3), max |limit-1| {worst_limit:.3e} (tol 1e-6), \
         c0/sqrt(xi) spread {worst_spread:.3e} (tol 1e-6)"
    );
    if !failures.is_empty() {
        summary += &format!("; failing: {}", failures.join("; "));
    }
    Outcome::new(failures.is_empty(), summary)
}

// Independent oracles for nu = 1/2: the Dirichlet image-charge heat kernel
// and the odd free Schrödinger propagator.
fn image_charge(t: f64, x: f64, xi: f64) -> f64 {
    (-(x - xi).powi(2) / (2.0 * t)).exp() * -(-2.0 * x * xi / t).exp_m1() / (2.0 * PI * t).sqrt()
}

fn odd_free_propagator(t: f64, x: f64, xi: f64) -> Complex64 {
    // i u_t = -u_xx: (4 pi i t)^(-1/2) [e^{i(x-xi)^2/4t} - e^{i(x+xi)^2/4t}]
    let pref = Complex64::from_polar(1.0 / (4.0 * PI * t).sqrt(), -PI / 4.0);
    let a = Complex64::from_polar(1.0, (x - xi).powi(2) / (4.0 * t));
    let b = Complex64::from_polar(1.0, (x + xi).powi(2) / (4.0 * t));
    pref * (a - b)
}

fn criterion_4() -> Outcome {
    let xi = 1.0;
    let heat = kernel(KernelKind::HeatFree, Convention::HalfFactor, 0.0, 0.0, xi);
    let schr = kernel(KernelKind::SchrodingerFree, Convention::UnitFactor, 0.0, 0.0, xi);
    let (mut wh, mut ws) = (0.0f64, 0.0f64);
    for i in 0..10 {
        for j in 0..10 {
            let t = 0.1 + 0.2 * i as f64;
            let x = 0.1 + 0.3 * j as f64;
            let want = image_charge(t, x, xi);
            let got = heat.evaluate(t, x).map(|v| v.magnitude()).unwrap_or(f64::NAN);
            wh = wh.max(nan_inf(((got - want) / want).abs()));
            let want = odd_free_propagator(t, x, xi);
            let got = schr.evaluate_complex(t, x).unwrap_or(Complex64::new(f64::NAN, 0.0));
            ws = ws.max(nan_inf((got - want).norm() / want.norm()));
        }
    }
    Outcome::new(
        wh <= 1e-12 && ws <= 1e-10,
        format!("heat vs image charge {wh:.3e} (tol 1e-12), Schrödinger vs odd free {ws:.3e} (tol 1e-10)"),
    )
}

fn nan_inf(v: f64) -> f64 {
    if v.is_nan() { f64::INFINITY } else { v }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in [0.0, 1.0] {
        for omega in [0.0, 1.0] {
            let kind = if omega > 0.0 { KernelKind::HeatHarmonic } else { KernelKind::HeatFree };
            let kern = kernel(kind, Convention::HalfFactor, k, omega, 1.0);
            for (t1, t2) in [(0.3, 0.7), (0.5, 0.5), (0.1, 0.2)] {
                let d = semigroup_defect(&kern, t1, t2, 0.8).unwrap_or(f64::INFINITY);
                worst = worst.max(nan_inf(d));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-6 && secs <= 10.0,
        format!("max defect {worst:.3e} (tol 1e-6), {secs:.2}s (limit 10s)"),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let kern = kernel(KernelKind::SchrodingerHarmonic, Convention::HalfFactor, 1.0, 1.0, 1.0);
    let r = cn_kernel_comparison(&kern, 1e-3, 0.3, 20.0 / 4096.0, 1e-4, 20.0);
    let secs = start.elapsed().as_secs_f64();
    match r {
        Ok(c) => Outcome::new(
            c.relative_l2_error <= 5e-3 && c.max_step_mass_drift <= 1e-10 && secs <= 60.0,
            format!(
                "L2 rel error {:.3e} (tol 5e-3), mass drift/step {:.3e} (tol 1e-10), {} steps, {secs:.1}s (limit 60s)",
                c.relative_l2_error, c.max_step_mass_drift, c.steps
            ),
        ),
        Err(e) => Outcome::new(false, format!("evolution error: {e}")),
    }
}

fn criterion_9() -> Outcome {
    let heat = seam_defect(1.0, 1.0, KernelKind::HeatHarmonic, KernelKind::HeatFree, 1e-6).unwrap_or(f64::INFINITY);
    let schr = seam_defect(1.0, 1.0, KernelKind::SchrodingerHarmonic, KernelKind::SchrodingerFree, 1e-6)
        .unwrap_or(f64::INFINITY);
    Outcome::new(
        heat <= 1e-6 && schr <= 1e-6,
        format!("heat {heat:.3e}, Schrödinger {schr:.3e} (tol 1e-6)"),
    )
}

fn criterion_10() -> Outcome {
    let j = |nu: f64, z: f64| bessel_j(BesselOrder::new(nu).unwrap(), z).unwrap();
    let i = |nu: f64, z: f64| bessel_i_scaled(BesselOrder::new(nu).unwrap(), z).unwrap();
    let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(TestCaseError::fail(msg)) };
    let mut failures = Vec::new();
    let runner = || {
        let config = Config { cases: 500, failure_persistence: None, ..Config::default() };
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
    };

    let r = runner().run(&(0.0f64..5.0, 0.1f64..30.0), |(nu, z)| {
        let d = j(nu, z) + j(nu + 2.0, z) - 2.0 * (nu + 1.0) / z * j(nu + 1.0, z);
        check(d.abs() <= 1e-10 * j(nu + 1.0, z).abs().max(1.0), format!("J recurrence at ({nu}, {z})"))
    });
    if let Err(e) = r {
        failures.push(e.to_string());
    }
    let r = runner().run(&(0.0f64..5.0, 0.1f64..30.0), |(nu, z)| {
        let d = i(nu, z) - i(nu + 2.0, z) - 2.0 * (nu + 1.0) / z * i(nu + 1.0, z);
        check(d.abs() <= 1e-10 * i(nu + 1.0, z).max(1.0), format!("I recurrence at ({nu}, {z})"))
    });
    if let Err(e) = r {
        failures.push(e.to_string());
    }
    let r = runner().run(&(0.1f64..50.0), |z| {
        let jz = (2.0 / (PI * z)).sqrt() * z.sin();
        let iz = (2.0 / (PI * z)).sqrt() * 0.5 * -(-2.0 * z).exp_m1();
        check(
            (j(0.5, z) - jz).abs() <= 1e-13 * jz.abs().max(1e-2) && (i(0.5, z) - iz).abs() <= 1e-13 * iz,
            format!("half-integer closed form at {z}"),
        )
    });
    if let Err(e) = r {
        failures.push(e.to_string());
    }
    let r = runner().run(&(0.0f64..8.0, 0.0f64..1e4), |(nu, z)| {
        let v = i(nu, z);
        check((0.0..=1.0).contains(&v), format!("scaled I out of [0, 1] at ({nu}, {z})"))
    });
    if let Err(e) = r {
        failures.push(e.to_string());
    }
    let mut worst_gamma = 0.0f64;
    let r = runner().run(&(0.5f64..100.0), |x| {
        let d = (gamma_ln(x + 1.0).unwrap() - gamma_ln(x).unwrap() - x.ln()).abs();
        check(d <= 1e-13, format!("gamma_ln functional equation at {x}: {d:e}"))
    });
    if let Err(e) = r {
        failures.push(e.to_string());
    }
    for n in 0..=2000 {
        let x = 0.5 + 99.5 * n as f64 / 2000.0;
        worst_gamma = worst_gamma.max((gamma_ln(x + 1.0).unwrap() - gamma_ln(x).unwrap() - x.ln()).abs());
    }
    let summary = if failures.is_empty() {
        format!("recurrence, half-integer, boundedness suites pass; gamma_ln equation max {worst_gamma:.2e} (tol 1e-13)")
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty() && worst_gamma <= 1e-13, summary)
}

fn main() -> ExitCode {
    let cfg = VerifyConfig::default();
    let criteria: Vec<Criterion> = vec![
        ("1 oracle agreement", Box::new(criterion_1)),
        ("2 PDE residuals", Box::new(|| suite_outcome(Suite::Pde, &cfg))),
        ("3 normalization", Box::new(criterion_3)),
        ("4 nu = 1/2 collapse", Box::new(criterion_4)),
        ("5 semigroup", Box::new(criterion_5)),
        ("6 symmetry suite", Box::new(|| suite_outcome(Suite::Symmetry, &cfg))),
        ("7 reduction suite", Box::new(|| suite_outcome(Suite::Reduction, &cfg))),
        ("8 Crank-Nicolson cross-check", Box::new(criterion_8)),
        ("9 omega -> 0 seam", Box::new(criterion_9)),
        ("10 special functions", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
