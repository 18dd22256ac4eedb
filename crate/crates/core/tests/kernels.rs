use std::f64::consts::PI;

use halfline::kernels::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn kernel(kind: KernelKind, k: f64, omega: f64, xi: f64) -> NormalizedKernel {
    let p = PotentialParams::new(k, omega).unwrap();
    NormalizedKernel::analytic(KernelSpec::new(kind, kind.standard_convention(), p, xi).unwrap())
}

/// Mehler kernel of `u_t = u_xx/2 - omega^2 x^2 u/2` minus its mirror image.
fn odd_mehler_heat(omega: f64, t: f64, x: f64, xi: f64) -> f64 {
    let (sh, ch) = ((omega * t).sinh(), (omega * t).cosh());
    let pref = (omega / (2.0 * PI * sh)).sqrt();
    let base = -omega * ((x * x + xi * xi) * ch - 2.0 * x * xi) / (2.0 * sh);
    pref * base.exp() * -(-2.0 * omega * x * xi / sh).exp_m1()
}

/// Same for `i u_t = -u_xx/2 + omega^2 x^2 u/2`, valid for `0 < omega t < pi`.
fn odd_mehler_schrodinger(omega: f64, t: f64, x: f64, xi: f64) -> Complex64 {
    let (sn, cs) = ((omega * t).sin(), (omega * t).cos());
    let pref = Complex64::from_polar((omega / (2.0 * PI * sn)).sqrt(), -PI / 4.0);
    let r2 = (x * x + xi * xi) * cs;
    let a = Complex64::from_polar(1.0, omega * (r2 - 2.0 * x * xi) / (2.0 * sn));
    let b = Complex64::from_polar(1.0, omega * (r2 + 2.0 * x * xi) / (2.0 * sn));
    pref * (a - b)
}

#[test]
fn harmonic_heat_collapses_to_odd_mehler() {
    for omega in [0.3, 1.0, 2.0] {
        let kern = kernel(KernelKind::HeatHarmonic, 0.0, omega, 1.3);
        for i in 1..=8 {
            for j in 1..=8 {
                let (t, x) = (0.15 * i as f64, 0.4 * j as f64);
                let want = odd_mehler_heat(omega, t, x, 1.3);
                let got = kern.evaluate(t, x).unwrap().magnitude();
                assert!(((got - want) / want).abs() < 1e-12, "omega={omega} t={t} x={x}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn harmonic_schrodinger_collapses_to_odd_mehler() {
    for omega in [0.5, 1.0] {
        let kern = kernel(KernelKind::SchrodingerHarmonic, 0.0, omega, 0.8);
        for i in 1..=8 {
            for j in 1..=8 {
                let t = 0.95 * PI / omega * i as f64 / 8.0;
                let x = 0.35 * j as f64;
                let want = odd_mehler_schrodinger(omega, t, x, 0.8);
                let got = kern.evaluate_complex(t, x).unwrap();
                assert!((got - want).norm() / want.norm() < 1e-10, "omega={omega} t={t} x={x}");
            }
        }
    }
}

#[test]
fn extreme_arguments_stay_finite() {
    let heat = kernel(KernelKind::HeatHarmonic, 2.0, 1.0, 1.0);
    for (t, x) in [(1e-4, 1.0), (1e-4, 50.0), (30.0, 1e-6), (30.0, 40.0), (1e-3, 1e-8)] {
        let v = heat.evaluate(t, x).unwrap();
        assert!(!v.log_magnitude.is_nan(), "t={t} x={x}");
        assert!(v.log_magnitude < 50.0);
    }
    let schr = kernel(KernelKind::SchrodingerHarmonic, 2.0, 1.0, 1.0);
    for (t, x) in [(1e-4, 1.0), (1e-4, 50.0), (3.0, 1e-6), (10.0, 40.0)] {
        let v = schr.evaluate(t, x).unwrap();
        assert!(v.log_magnitude.is_finite() && v.phase.is_finite(), "t={t} x={x}");
    }
}

#[test]
fn caustics_are_reported_past_the_first_half_period() {
    let schr = kernel(KernelKind::SchrodingerHarmonic, 1.0, 1.0, 1.0);
    assert!(matches!(schr.evaluate(PI, 1.0), Err(halfline::Error::Caustic { .. })));
    assert!(matches!(schr.evaluate(2.0 * PI, 1.0), Err(halfline::Error::Caustic { .. })));
    assert!(schr.evaluate(PI + 1e-3, 1.0).is_ok());
}

#[test]
fn causal_extension_vanishes_before_the_source_time() {
    let heat = kernel(KernelKind::HeatFree, 1.0, 0.0, 1.0);
    let v = heat.evaluate(0.5, 1.0).unwrap();
    assert!(causal_extension(v, -0.1).is_zero());
    assert!(causal_extension(v, 0.0).is_zero());
    assert_eq!(causal_extension(v, 0.5), v);
}

#[test]
fn resourced_kernel_matches_fresh_kernel() {
    let a = kernel(KernelKind::HeatHarmonic, 1.5, 0.7, 1.0).resourced(2.5).unwrap();
    let b = kernel(KernelKind::HeatHarmonic, 1.5, 0.7, 2.5);
    let (va, vb) = (a.evaluate(0.4, 1.1).unwrap(), b.evaluate(0.4, 1.1).unwrap());
    assert!((va.log_magnitude - vb.log_magnitude).abs() < 1e-13);
}

#[test]
fn conventions_differ_by_time_rescaling() {
    let p = PotentialParams::new(1.0, 1.0).unwrap();
    let half = NormalizedKernel::analytic(KernelSpec::new(KernelKind::HeatHarmonic, Convention::HalfFactor, p, 1.0).unwrap());
    let unit = NormalizedKernel::analytic(KernelSpec::new(KernelKind::HeatHarmonic, Convention::UnitFactor, p, 1.0).unwrap());
    for (t, x) in [(0.2, 0.5), (0.7, 1.9)] {
        let a = half.evaluate(2.0 * t, x).unwrap();
        let b = unit.evaluate(t, x).unwrap();
        assert!((a.log_magnitude - b.log_magnitude).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_kernel_is_symmetric_in_source_and_target(
        k in -0.25f64..4.0, omega in 0.0f64..2.0, t in 0.05f64..2.0, x in 0.1f64..3.0, xi in 0.1f64..3.0,
    ) {
        let kind = if omega > 0.0 { KernelKind::HeatHarmonic } else { KernelKind::HeatFree };
        let a = kernel(kind, k, omega, xi).evaluate(t, x).unwrap();
        let b = kernel(kind, k, omega, x).evaluate(t, xi).unwrap();
        prop_assert!((a.log_magnitude - b.log_magnitude).abs() <= 1e-12 * a.log_magnitude.abs().max(1.0));
    }

    #[test]
    fn heat_kernel_solves_its_equation(
        k in 0.0f64..3.0, omega in 0.2f64..1.5, t in 0.3f64..1.5, x in 0.4f64..2.5,
    ) {
        let kern = kernel(KernelKind::HeatHarmonic, k, omega, 1.0);
        prop_assert!(pde_residual(&kern, t, x, 1e-3).unwrap() <= 1e-6);
    }

    #[test]
    fn schrodinger_modulus_is_symmetric(
        k in 0.75f64..4.0, t in 0.1f64..2.5, x in 0.1f64..3.0, xi in 0.1f64..3.0,
    ) {
        let a = kernel(KernelKind::SchrodingerHarmonic, k, 1.0, xi).evaluate(t, x).unwrap();
        let b = kernel(KernelKind::SchrodingerHarmonic, k, 1.0, x).evaluate(t, xi).unwrap();
        prop_assert!((a.log_magnitude - b.log_magnitude).abs() <= 1e-11 * a.log_magnitude.abs().max(1.0));
        let d = (a.phase - b.phase).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) <= 1e-9);
    }

    #[test]
    fn phase_is_wrapped(k in 0.75f64..4.0, t in 0.05f64..20.0, x in 0.1f64..5.0) {
        if let Ok(v) = kernel(KernelKind::SchrodingerHarmonic, k, 1.0, 1.0).evaluate(t, x) {
            prop_assert!(v.phase > -PI && v.phase <= PI);
        }
    }
}
