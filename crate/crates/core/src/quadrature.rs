//! Adaptive Gauss–Kronrod (G10/K21) integration on the half-line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{heat_kernel, EquationKind, NormalizedKernel};

/// Lower integration limit; integrands extend continuously to 0 at `x = 0`.
pub const HALF_LINE_START: f64 = 1e-12;

const MAX_PANELS: usize = 20_000;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_932_107_520,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Gaussian envelope of an integrand, used to place panels and truncate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayHint {
    pub center: f64,
    pub width: f64,
}

impl DecayHint {
    pub fn new(center: f64, width: f64) -> Self {
        Self { center, width }
    }

    /// Truncation point `center + 12 width`, never below 10.
    pub fn x_max(&self) -> f64 {
        (self.center + 12.0 * self.width).max(10.0)
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        const OFFSETS: [f64; 9] = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0];
        let mut pts: Vec<f64> = OFFSETS
            .iter()
            .flat_map(|o| [self.center - o * self.width, self.center + o * self.width])
            .filter(|p| *p > a && *p < b)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// A real integrand on `(0, inf)` with an optional envelope.
pub struct Integrand<F> {
    pub evaluate: F,
    pub decay_hint: Option<DecayHint>,
}

impl<F: Fn(f64) -> f64> Integrand<F> {
    pub fn new(evaluate: F) -> Self {
        Self { evaluate, decay_hint: None }
    }

    pub fn with_hint(evaluate: F, hint: DecayHint) -> Self {
        Self { evaluate, decay_hint: Some(hint) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; ties broken by position for a fixed refinement order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// One G10/K21 panel with QUADPACK's error rescaling.
fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel { a, b, value, error: err }
}

/// Globally adaptive bisection of `[a, b]`, starting from the given interior
/// breakpoints. Panels are summed in order of position, so results are
/// reproducible bit for bit.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<QuadratureResult> {
    check_tol(tol)?;
    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|p| *p > a && *p < b));
    edges.push(b);

    let mut heap: BinaryHeap<Panel> = edges
        .windows(2)
        .map(|w| gauss_kronrod_21(f, w[0], w[1]))
        .collect();
    let mut done: Vec<Panel> = Vec::new();
    let mut total_err: f64 = heap.iter().map(|p| p.error).sum();

    loop {
        if total_err <= tol {
            // confirm without accumulated update drift
            total_err = heap.iter().chain(done.iter()).map(|p| p.error).sum();
            if total_err <= tol {
                break;
            }
        }
        if heap.len() + done.len() >= MAX_PANELS {
            let r = collect(heap, done);
            return Err(Error::ToleranceNotMet { value: r.value, estimate: r.error_estimate, tol });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot be split further in floating point
            done.push(worst);
            if heap.is_empty() {
                let r = collect(heap, done);
                return Err(Error::ToleranceNotMet {
                    value: r.value,
                    estimate: r.error_estimate,
                    tol,
                });
            }
            continue;
        }
        let left = gauss_kronrod_21(f, worst.a, mid);
        let right = gauss_kronrod_21(f, mid, worst.b);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    Ok(collect(heap, done))
}

fn collect(heap: BinaryHeap<Panel>, done: Vec<Panel>) -> QuadratureResult {
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    QuadratureResult {
        value: panels.iter().map(|p| p.value).sum(),
        error_estimate: panels.iter().map(|p| p.error).sum(),
        panels: panels.len(),
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 1e-13) || !tol.is_finite() {
        return Err(Error::Domain(format!("quadrature tolerance must be >= 1e-13, got {tol}")));
    }
    Ok(())
}

/// `int_0^inf f(x) dx`, returning the value and an error estimate `<= tol`.
///
/// With a decay hint the range is truncated at [`DecayHint::x_max`] and
/// panels are seeded around the envelope; otherwise the upper limit is
/// doubled from 10 until the added slab contributes less than `tol / 10`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: &Integrand<F>,
    tol: f64,
) -> Result<QuadratureResult> {
    check_tol(tol)?;
    let eval = &f.evaluate;
    // sliver [0, HALF_LINE_START] by the rectangle rule
    let sliver = HALF_LINE_START * eval(HALF_LINE_START);
    if let Some(hint) = f.decay_hint {
        let b = hint.x_max();
        let mut r = integrate_interval(eval, HALF_LINE_START, b, &hint.breakpoints(HALF_LINE_START, b), tol)?;
        r.value += sliver;
        return Ok(r);
    }
    let mut upper = 10.0;
    let mut acc = integrate_interval(eval, HALF_LINE_START, upper, &[], 0.5 * tol)?;
    acc.value += sliver;
    let mut budget = 0.5 * tol;
    for _ in 0..40 {
        budget *= 0.5;
        let slab = integrate_interval(eval, upper, 2.0 * upper, &[], budget.max(1e-13))?;
        acc.value += slab.value;
        acc.error_estimate += slab.error_estimate;
        acc.panels += slab.panels;
        upper *= 2.0;
        if slab.value.abs() + slab.error_estimate < 0.1 * tol {
            return Ok(acc);
        }
    }
    Err(Error::ToleranceNotMet { value: acc.value, estimate: acc.error_estimate, tol })
}

/// Complex integrand, integrated componentwise. The returned estimate is the
/// sum of the two component estimates.
pub fn integrate_half_line_complex<F: Fn(f64) -> Complex64>(
    f: F,
    decay_hint: Option<DecayHint>,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let re = Integrand { evaluate: |x: f64| f(x).re, decay_hint };
    let im = Integrand { evaluate: |x: f64| f(x).im, decay_hint };
    let r = integrate_half_line(&re, 0.5 * tol)?;
    let i = integrate_half_line(&im, 0.5 * tol)?;
    Ok((Complex64::new(r.value, i.value), r.error_estimate + i.error_estimate))
}

/// Relative failure of the propagator to compose:
/// `|int_0^inf E_xi(t1, y) E_y(t2, x) dy - E_xi(t1 + t2, x)| / E_xi(t1 + t2, x)`.
///
/// The inner kernel is re-sourced at `y`, carrying `c0`'s `sqrt(xi)` scaling.
/// Heat kernels only.
pub fn semigroup_defect(kernel: &NormalizedKernel, t1: f64, t2: f64, x: f64) -> Result<f64> {
    let spec = &kernel.spec;
    if spec.kind.equation() != EquationKind::Heat {
        return Err(Error::Domain("semigroup_defect is defined for heat kernels".into()));
    }
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::Domain(format!("times must be positive, got {t1}, {t2}")));
    }
    let target = kernel.evaluate(t1 + t2, x)?.magnitude();
    let product = |y: f64| -> f64 {
        let first = heat_kernel(kernel, t1, y);
        let second = kernel.resourced(y).and_then(|k| heat_kernel(&k, t2, x));
        match (first, second) {
            (Ok(a), Ok(b)) => (a.log_magnitude + b.log_magnitude).exp(),
            _ => 0.0,
        }
    };
    let (s1, s2) = (spec.scaled_time(t1), spec.scaled_time(t2));
    let center = (spec.xi * s2 + x * s1) / (s1 + s2);
    let hint = DecayHint::new(center, (s1 + s2).sqrt().max(center.max(spec.xi).max(x) - center));
    let tol = (1e-11 * target).max(1e-13);
    let value = integrate_half_line(&Integrand::with_hint(product, hint), tol)?.value;
    Ok((value - target).abs() / target)
}
