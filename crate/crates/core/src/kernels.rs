//! Closed-form propagators on the half-line for the potential
//! `k x^-2 + omega^2 x^2`.
//!
//! Every kernel is written as `c0 * shape(s, x)` where `s` is the scaled
//! time: `s = t` for [`Convention::HalfFactor`] (operator with the 1/2
//! factors) and `s = 2t` for [`Convention::UnitFactor`]. In terms of `s`
//!
//! ```text
//! heat, omega > 0:   sqrt(x)/sinh(ws) exp[-w(x^2+xi^2)/(2 tanh ws)] I_nu(w xi x / sinh ws)
//! heat, omega = 0:   sqrt(x)/s        exp[-(x^2+xi^2)/(2s)]         I_nu(xi x / s)
//! schr, omega > 0:   sqrt(x)/sin(ws)  exp[i w(x^2+xi^2)/(2 tan ws)] J_nu(w xi x / sin ws)
//! schr, omega = 0:   sqrt(x)/s        exp[i(x^2+xi^2)/(2s)]         J_nu(xi x / s)
//! ```
//!
//! with `c0 = omega sqrt(xi)` (heat, harmonic), `sqrt(xi)` (heat, free) and an
//! extra factor `exp(-i pi (nu+1)/2)` for the Schrödinger kernels. Past the
//! m-th focusing time the Schrödinger kernel picks up the phase
//! `exp(-i m pi (nu+1))`.
//!
//! Values are assembled in the log domain: the Gaussian and the Bessel
//! scaling `e^{-z}` are combined analytically as
//! `-(x-xi)^2 / (2 s sinhc(ws)) - w (x^2+xi^2) tanh(ws/2) / 2`, which has no
//! cancellation for any `ws` and reduces to the free kernel at `omega = 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_half_line, DecayHint, Integrand};
use crate::specfun::{j_unchecked, ln_i_scaled};

/// Caustic guard band on `|sin(omega s)|`.
pub const CAUSTIC_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationKind {
    Heat,
    Schrodinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    HeatHarmonic,
    HeatFree,
    SchrodingerHarmonic,
    SchrodingerFree,
}

impl KernelKind {
    pub fn equation(self) -> EquationKind {
        match self {
            Self::HeatHarmonic | Self::HeatFree => EquationKind::Heat,
            Self::SchrodingerHarmonic | Self::SchrodingerFree => EquationKind::Schrodinger,
        }
    }

    pub fn is_free(self) -> bool {
        matches!(self, Self::HeatFree | Self::SchrodingerFree)
    }

    /// Convention whose scaling the standard printed form of this kernel uses.
    pub fn standard_convention(self) -> Convention {
        match self {
            Self::SchrodingerFree => Convention::UnitFactor,
            _ => Convention::HalfFactor,
        }
    }

    /// The kind matching an equation and a frequency (`omega = 0` is free).
    pub fn for_equation(equation: EquationKind, omega: f64) -> Self {
        match (equation, omega == 0.0) {
            (EquationKind::Heat, false) => Self::HeatHarmonic,
            (EquationKind::Heat, true) => Self::HeatFree,
            (EquationKind::Schrodinger, false) => Self::SchrodingerHarmonic,
            (EquationKind::Schrodinger, true) => Self::SchrodingerFree,
        }
    }
}

/// Scaling of the operator: `HalfFactor` is `d_t - (1/2)(d_xx - V)`,
/// `UnitFactor` is `d_t - (d_xx - V)` (and `i d_t + ...` for Schrödinger).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    HalfFactor,
    UnitFactor,
}

impl Convention {
    /// Factor mapping physical time to the scaled time `s` of the formulas.
    pub fn time_scale(self) -> f64 {
        match self {
            Self::HalfFactor => 1.0,
            Self::UnitFactor => 2.0,
        }
    }

    /// Coefficient in front of `(d_xx - V)`.
    pub fn operator_factor(self) -> f64 {
        match self {
            Self::HalfFactor => 0.5,
            Self::UnitFactor => 1.0,
        }
    }
}

/// Potential strength `k`, frequency `omega` and Bessel index `nu = sqrt(k + 1/4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    k: f64,
    omega: f64,
    nu: f64,
}

impl PotentialParams {
    pub fn new(k: f64, omega: f64) -> Result<Self> {
        if !k.is_finite() || k < -0.25 {
            return Err(Error::Domain(format!("k must satisfy k >= -1/4, got {k}")));
        }
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::Domain(format!("omega must satisfy omega >= 0, got {omega}")));
        }
        Ok(Self { k, omega, nu: (k + 0.25).sqrt() })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `k x^-2 + omega^2 x^2`
    pub fn potential(&self, x: f64) -> f64 {
        self.k / (x * x) + self.omega * self.omega * x * x
    }

    /// `V'(x)`
    pub fn potential_dx(&self, x: f64) -> f64 {
        -2.0 * self.k / (x * x * x) + 2.0 * self.omega * self.omega * x
    }
}

/// Bessel index `sqrt(k + 1/4)`; fails below the boundary `k = -1/4`.
pub fn nu_index(k: f64) -> Result<f64> {
    Ok(PotentialParams::new(k, 0.0)?.nu())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub convention: Convention,
    pub params: PotentialParams,
    pub xi: f64,
}

impl KernelSpec {
    pub fn new(
        kind: KernelKind,
        convention: Convention,
        params: PotentialParams,
        xi: f64,
    ) -> Result<Self> {
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(Error::Domain(format!("source point must satisfy xi > 0, got {xi}")));
        }
        if kind.is_free() != (params.omega() == 0.0) {
            return Err(Error::Domain(format!(
                "{kind:?} requires omega {} 0, got {}",
                if kind.is_free() { "==" } else { ">" },
                params.omega()
            )));
        }
        if kind.equation() == EquationKind::Schrodinger && params.k() < 0.75 {
            log::warn!(
                "Schrödinger kernel with k = {} < 3/4: outside the range where the potential is stated",
                params.k()
            );
        }
        Ok(Self { kind, convention, params, xi })
    }

    /// Same kernel with a different source point.
    pub fn with_source(&self, xi: f64) -> Result<Self> {
        Self::new(self.kind, self.convention, self.params, xi)
    }

    pub fn scaled_time(&self, t: f64) -> f64 {
        self.convention.time_scale() * t
    }
}

/// `|E| = exp(log_magnitude)`, `arg E = phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub log_magnitude: f64,
    pub phase: f64,
}

impl KernelValue {
    pub fn zero() -> Self {
        Self { log_magnitude: f64::NEG_INFINITY, phase: 0.0 }
    }

    pub fn magnitude(&self) -> f64 {
        self.log_magnitude.exp()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude(), self.phase)
    }

    pub fn is_zero(&self) -> bool {
        self.log_magnitude == f64::NEG_INFINITY
    }
}

/// A kernel together with its normalization constant `c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedKernel {
    pub spec: KernelSpec,
    pub c0: Complex64,
}

impl NormalizedKernel {
    /// Closed-form constant: `omega sqrt(xi)` (or `sqrt(xi)` when free), times
    /// `exp(-i pi (nu+1)/2)` for Schrödinger kinds.
    pub fn analytic(spec: KernelSpec) -> Self {
        let base = spec.xi.sqrt() * if spec.kind.is_free() { 1.0 } else { spec.params.omega() };
        let c0 = match spec.kind.equation() {
            EquationKind::Heat => Complex64::new(base, 0.0),
            EquationKind::Schrodinger => {
                Complex64::from_polar(base, -FRAC_PI_2 * (spec.params.nu() + 1.0))
            }
        };
        Self { spec, c0 }
    }

    pub fn with_c0(spec: KernelSpec, c0: Complex64) -> Self {
        Self { spec, c0 }
    }

    /// Unit-constant version, as used by the normalization limit.
    pub fn unnormalized(spec: KernelSpec) -> Self {
        Self { spec, c0: Complex64::new(1.0, 0.0) }
    }

    pub fn evaluate(&self, t: f64, x: f64) -> Result<KernelValue> {
        match self.spec.kind.equation() {
            EquationKind::Heat => heat_kernel(self, t, x),
            EquationKind::Schrodinger => schrodinger_kernel(self, t, x),
        }
    }

    pub fn evaluate_complex(&self, t: f64, x: f64) -> Result<Complex64> {
        Ok(self.evaluate(t, x)?.to_complex())
    }

    /// Same kernel centred at a new source, with `c0` rescaled by `sqrt(xi'/xi)`.
    pub fn resourced(&self, xi: f64) -> Result<Self> {
        let spec = self.spec.with_source(xi)?;
        Ok(Self { spec, c0: self.c0 * (xi / self.spec.xi).sqrt() })
    }

    /// Constant multiplying the `omega`-normalized profile
    /// (`omega/sinh(ws)` in place of `1/sinh(ws)`).
    fn profile_constant(&self) -> Complex64 {
        if self.spec.kind.is_free() {
            self.c0
        } else {
            self.c0 / self.spec.params.omega()
        }
    }
}

fn check_point(t: f64, x: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("kernel requires t > 0, got {t}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("kernel requires x > 0, got {x}")));
    }
    Ok(())
}

/// `ln(sinh(y)/y)`, accurate for all `y >= 0`.
fn ln_sinhc(y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else if y < 20.0 {
        (y.sinh() / y).ln()
    } else {
        y + (-(-2.0 * y).exp()).ln_1p() - std::f64::consts::LN_2 - y.ln()
    }
}

/// `sin(y)/y` with the removable point filled in.
fn sinc(y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else {
        y.sin() / y
    }
}

pub(crate) fn wrap_phase(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

/// Heat kernel value (phase 0 for positive `c0`).
pub fn heat_kernel(kernel: &NormalizedKernel, t: f64, x: f64) -> Result<KernelValue> {
    check_point(t, x)?;
    let spec = &kernel.spec;
    if spec.kind.equation() != EquationKind::Heat {
        return Err(Error::Domain(format!("heat_kernel called with {:?}", spec.kind)));
    }
    let p = &spec.params;
    let (xi, omega, nu) = (spec.xi, p.omega(), p.nu());
    let s = spec.scaled_time(t);
    let y = omega * s;
    let lsh = ln_sinhc(y);
    let eff_s = s * lsh.exp(); // sinh(ws)/w
    let z = xi * x / eff_s;
    let d = x - xi;
    let gauss = -d * d / (2.0 * eff_s) - 0.5 * omega * (x * x + xi * xi) * (0.5 * y).tanh();
    let c = kernel.profile_constant();
    let log_magnitude =
        c.norm().ln() + 0.5 * x.ln() - s.ln() - lsh + gauss + ln_i_scaled(nu, z);
    Ok(KernelValue { log_magnitude, phase: wrap_phase(c.arg()) })
}

/// Schrödinger kernel value; fails with [`Error::Caustic`] at focusing times.
pub fn schrodinger_kernel(kernel: &NormalizedKernel, t: f64, x: f64) -> Result<KernelValue> {
    check_point(t, x)?;
    let spec = &kernel.spec;
    if spec.kind.equation() != EquationKind::Schrodinger {
        return Err(Error::Domain(format!("schrodinger_kernel called with {:?}", spec.kind)));
    }
    let p = &spec.params;
    let (xi, omega, nu) = (spec.xi, p.omega(), p.nu());
    let s = spec.scaled_time(t);
    let y = omega * s;
    let crossings = (y / PI).floor();
    let nearest = (y / PI).round();
    if nearest >= 1.0 && y.sin().abs() < CAUSTIC_GUARD {
        return Err(Error::Caustic { t, sin_abs: y.sin().abs() });
    }
    let sc = sinc(y);
    let eff_s = (s * sc).abs(); // |sin(ws)|/w
    let z = xi * x / eff_s;
    let j = j_unchecked(nu, z);
    // w cot(ws) (x^2+xi^2)/2 = (x^2+xi^2) cos(y) / (2 s sinc(y))
    let chirp = (x * x + xi * xi) * y.cos() / (2.0 * s * sc);
    let c = kernel.profile_constant();
    let log_magnitude = c.norm().ln() + 0.5 * x.ln() - eff_s.ln() + j.abs().ln();
    let mut phase = c.arg() - crossings * PI * (nu + 1.0) + chirp;
    if j < 0.0 {
        phase += PI;
    }
    Ok(KernelValue { log_magnitude, phase: wrap_phase(phase) })
}

/// Exponent of the Gaussian factor, `-w(x^2+xi^2)/(2 tanh ws)` for heat and
/// `i w(x^2+xi^2)/(2 tan ws)` for Schrödinger (free limits at `omega = 0`).
pub fn gaussian_exponent(spec: &KernelSpec, t: f64, x: f64) -> Complex64 {
    let s = spec.scaled_time(t);
    let y = spec.params.omega() * s;
    let r2 = x * x + spec.xi * spec.xi;
    match spec.kind.equation() {
        EquationKind::Heat => {
            let coth_term = if y == 0.0 { 1.0 / s } else { spec.params.omega() / y.tanh() };
            Complex64::new(-0.5 * r2 * coth_term, 0.0)
        }
        EquationKind::Schrodinger => {
            Complex64::new(0.0, r2 * y.cos() / (2.0 * s * sinc(y)))
        }
    }
}

/// Extension by zero to `t <= 0`.
pub fn causal_extension(value: KernelValue, t: f64) -> KernelValue {
    if t > 0.0 {
        value
    } else {
        KernelValue::zero()
    }
}

/// Result of [`normalization_constant`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationReport {
    pub c0: f64,
    /// `(t, int_0^inf E dx)` for the unit-constant kernel.
    pub masses: Vec<(f64, f64)>,
    /// Extrapolated limit of the unit-constant mass.
    pub limit: f64,
    /// Relative change between the last two extrapolation orders.
    pub extrapolation_residual: f64,
}

/// Largest accepted relative gap between the last two extrapolation orders.
pub const EXTRAPOLATION_TOL: f64 = 1e-6;

/// Default decreasing time sequence `1e-1, ..., 1e-5`.
pub fn default_t_sequence() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
}

/// Gaussian envelope of a heat kernel at time `t` around its source.
pub(crate) fn heat_decay_hint(spec: &KernelSpec, t: f64) -> DecayHint {
    let s = spec.scaled_time(t);
    let width = (s * ln_sinhc(spec.params.omega() * s).exp()).sqrt();
    DecayHint::new(spec.xi, width)
}

/// Mass `int_0^inf E(t, x) dx` of a heat kernel.
pub fn heat_mass(kernel: &NormalizedKernel, t: f64, tol: f64) -> Result<f64> {
    let hint = heat_decay_hint(&kernel.spec, t);
    let f = Integrand::with_hint(
        |x: f64| heat_kernel(kernel, t, x).map(|v| v.magnitude()).unwrap_or(0.0),
        hint,
    );
    Ok(integrate_half_line(&f, tol)?.value * kernel.c0.re.signum())
}

/// Finds `c0` with `lim_{t -> 0+} int_0^inf E dx = 1` by polynomial
/// (Neville) extrapolation of the unit-constant masses to `t = 0`, using the
/// three smallest times.
pub fn normalization_constant(spec: &KernelSpec, t_sequence: &[f64]) -> Result<NormalizationReport> {
    if spec.kind.equation() != EquationKind::Heat {
        return Err(Error::Domain("normalization_constant is defined for heat kernels".into()));
    }
    if t_sequence.len() < 3 {
        return Err(Error::Domain("t_sequence needs at least three times".into()));
    }
    if t_sequence.windows(2).any(|w| !(w[1] < w[0])) || t_sequence.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("t_sequence must be positive and strictly decreasing".into()));
    }
    let unit = NormalizedKernel::unnormalized(*spec);
    let masses: Vec<(f64, f64)> = t_sequence
        .par_iter()
        .map(|&t| heat_mass(&unit, t, 1e-12).map(|m| (t, m)))
        .collect::<Result<Vec<_>>>()?;

    let tail = &masses[masses.len() - 3..];
    let order2 = neville_at_zero(tail);
    let order1 = neville_at_zero(&tail[1..]);
    let residual = ((order2 - order1) / order2).abs();
    if !(residual <= EXTRAPOLATION_TOL) || !order2.is_finite() || order2 <= 0.0 {
        return Err(Error::NonConvergence(format!(
            "extrapolated masses disagree: {order2} vs {order1} (relative {residual:e})"
        )));
    }
    Ok(NormalizationReport {
        c0: 1.0 / order2,
        masses,
        limit: order2,
        extrapolation_residual: residual,
    })
}

/// Value at 0 of the interpolating polynomial through `points`.
fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (ti, tj) = (points[i].0, points[i + level].0);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    p[0]
}

/// Residual of the governing equation on a kernel-like function, relative to
/// the largest magnitude on the stencil.
///
/// Heat: `E_t - a (E_xx - V E)`; Schrödinger: `i E_t + a (E_xx - V E)`, with
/// `a` from the convention. Derivatives are 4th-order central differences.
pub fn pde_residual_of<F>(
    eval: F,
    equation: EquationKind,
    convention: Convention,
    params: &PotentialParams,
    t: f64,
    x: f64,
    h: f64,
) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<Complex64>,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    if x - 3.0 * h <= 0.0 || t - 3.0 * h <= 0.0 {
        return Err(Error::Stencil(format!("stencil at (t={t}, x={x}, h={h}) reaches t <= 0 or x <= 0")));
    }
    let at = |tt: f64, xx: f64| -> Result<Complex64> {
        eval(tt, xx).map_err(|e| match e {
            Error::Caustic { t, .. } => Error::Stencil(format!("stencil crosses caustic near t = {t}")),
            other => other,
        })
    };
    let e0 = at(t, x)?;
    let xp1 = at(t, x + h)?;
    let xm1 = at(t, x - h)?;
    let xp2 = at(t, x + 2.0 * h)?;
    let xm2 = at(t, x - 2.0 * h)?;
    let tp1 = at(t + h, x)?;
    let tm1 = at(t - h, x)?;
    let tp2 = at(t + 2.0 * h, x)?;
    let tm2 = at(t - 2.0 * h, x)?;

    let e_t = (-tp2 + 8.0 * tp1 - 8.0 * tm1 + tm2) / (12.0 * h);
    let e_xx = (-xp2 + 16.0 * xp1 - 30.0 * e0 + 16.0 * xm1 - xm2) / (12.0 * h * h);
    let a = convention.operator_factor();
    let spatial = a * (e_xx - params.potential(x) * e0);
    let residual = match equation {
        EquationKind::Heat => e_t - spatial,
        EquationKind::Schrodinger => Complex64::i() * e_t + spatial,
    };
    let scale = [e0, xp1, xm1, xp2, xm2, tp1, tm1, tp2, tm2]
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    Ok(residual.norm() / (scale + 1e-300))
}

/// [`pde_residual_of`] applied to the kernel itself.
pub fn pde_residual(kernel: &NormalizedKernel, t: f64, x: f64, h: f64) -> Result<f64> {
    let spec = &kernel.spec;
    pde_residual_of(
        |tt, xx| kernel.evaluate_complex(tt, xx),
        spec.kind.equation(),
        spec.convention,
        &spec.params,
        t,
        x,
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: KernelKind, conv: Convention, k: f64, omega: f64, xi: f64) -> KernelSpec {
        KernelSpec::new(kind, conv, PotentialParams::new(k, omega).unwrap(), xi).unwrap()
    }

    #[test]
    fn nu_index_examples() {
        assert_eq!(nu_index(0.0).unwrap(), 0.5);
        assert_eq!(nu_index(-0.25).unwrap(), 0.0);
        assert_eq!(nu_index(0.75).unwrap(), 1.0);
        assert!(matches!(nu_index(-0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn spec_invariants_enforced() {
        let p = PotentialParams::new(1.0, 1.0).unwrap();
        assert!(KernelSpec::new(KernelKind::HeatFree, Convention::HalfFactor, p, 1.0).is_err());
        assert!(KernelSpec::new(KernelKind::HeatHarmonic, Convention::HalfFactor, p, 0.0).is_err());
        assert!(PotentialParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn heat_free_half_integer_example() {
        let s = spec(KernelKind::HeatFree, Convention::HalfFactor, 0.0, 0.0, 1.0);
        let v = heat_kernel(&NormalizedKernel::analytic(s), 1.0, 1.0).unwrap();
        let want = (1.0 - (-2.0_f64).exp()) / (2.0 * PI).sqrt();
        assert!((v.magnitude() - want).abs() < 1e-14 * want);
        assert_eq!(v.phase, 0.0);
    }

    #[test]
    fn heat_kernel_vanishes_at_boundary() {
        let s = spec(KernelKind::HeatHarmonic, Convention::HalfFactor, 1.0, 1.0, 1.0);
        let k = NormalizedKernel::analytic(s);
        let a = heat_kernel(&k, 0.5, 1e-3).unwrap().log_magnitude;
        let b = heat_kernel(&k, 0.5, 1e-6).unwrap().log_magnitude;
        // x^(nu+1/2) with nu + 1/2 = sqrt(5/4) + 1/2
        let slope = (a - b) / (1e3_f64).ln();
        assert!((slope - (1.25_f64.sqrt() + 0.5)).abs() < 1e-6);
        assert!(heat_kernel(&k, 0.5, 1e-300).unwrap().log_magnitude < -600.0);
    }

    #[test]
    fn heat_kernel_survives_tiny_times() {
        let s = spec(KernelKind::HeatHarmonic, Convention::UnitFactor, 2.0, 1.0, 1.0);
        let k = NormalizedKernel::analytic(s);
        let v = heat_kernel(&k, 1e-12, 1.0).unwrap();
        assert!(v.log_magnitude.is_finite());
        let off = heat_kernel(&k, 1e-12, 1.1).unwrap();
        assert!(off.log_magnitude < -1e9);
    }

    #[test]
    fn domain_errors() {
        let s = spec(KernelKind::HeatHarmonic, Convention::HalfFactor, 1.0, 1.0, 1.0);
        let k = NormalizedKernel::analytic(s);
        assert!(heat_kernel(&k, 0.0, 1.0).is_err());
        assert!(heat_kernel(&k, 1.0, -1.0).is_err());
        assert!(schrodinger_kernel(&k, 1.0, 1.0).is_err());
    }

    #[test]
    fn schrodinger_free_matches_image_charge() {
        let s = spec(KernelKind::SchrodingerFree, Convention::UnitFactor, 0.0, 0.0, 1.0);
        let v = schrodinger_kernel(&NormalizedKernel::analytic(s), 1.0, 1.0).unwrap();
        // (4 pi i t)^{-1/2} [e^{i(x-xi)^2/4t} - e^{i(x+xi)^2/4t}] at t = x = xi = 1
        let pref = (Complex64::new(0.0, 4.0 * PI)).powf(-0.5);
        let want = pref * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 1.0));
        assert!((v.to_complex() - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn schrodinger_caustic_detected() {
        let s = spec(KernelKind::SchrodingerHarmonic, Convention::HalfFactor, 0.75, 1.0, 1.0);
        let k = NormalizedKernel::analytic(s);
        assert!(matches!(schrodinger_kernel(&k, PI, 1.0), Err(Error::Caustic { .. })));
        let u = NormalizedKernel::analytic(KernelSpec { convention: Convention::UnitFactor, ..s });
        assert!(matches!(schrodinger_kernel(&u, PI / 2.0, 1.0), Err(Error::Caustic { .. })));
        assert!(schrodinger_kernel(&k, 1e-9, 1.0).is_ok());
    }

    #[test]
    fn causal_extension_examples() {
        let v = KernelValue { log_magnitude: -0.3, phase: 0.2 };
        assert!(causal_extension(v, -1.0).is_zero());
        assert!(causal_extension(v, 0.0).is_zero());
        assert_eq!(causal_extension(v, 1.0), v);
        assert_eq!(causal_extension(v, 0.0).to_complex(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pde_residual_examples() {
        let heat = NormalizedKernel::analytic(spec(
            KernelKind::HeatHarmonic,
            Convention::HalfFactor,
            1.0,
            1.0,
            1.0,
        ));
        assert!(pde_residual(&heat, 0.5, 1.2, 1e-3).unwrap() <= 1e-6);

        let sf = NormalizedKernel::analytic(spec(
            KernelKind::SchrodingerFree,
            Convention::UnitFactor,
            2.0,
            0.0,
            1.0,
        ));
        assert!(pde_residual(&sf, 0.7, 1.1, 1e-3).unwrap() <= 1e-6);

        let sh = NormalizedKernel::analytic(spec(
            KernelKind::SchrodingerHarmonic,
            Convention::UnitFactor,
            2.0,
            1.0,
            1.0,
        ));
        assert!(pde_residual(&sh, 0.3, 0.7, 1e-3).unwrap() <= 1e-6);
    }

    #[test]
    fn perturbed_exponent_is_detected() {
        let s = spec(KernelKind::HeatHarmonic, Convention::HalfFactor, 1.0, 1.0, 1.0);
        let k = NormalizedKernel::analytic(s);
        let perturbed = |t: f64, x: f64| -> Result<Complex64> {
            Ok(k.evaluate_complex(t, x)? * (0.01 * gaussian_exponent(&s, t, x)).exp())
        };
        let r = pde_residual_of(perturbed, EquationKind::Heat, s.convention, &s.params, 0.5, 1.2, 1e-3)
            .unwrap();
        assert!(r >= 1e-2, "residual {r}");
    }

    #[test]
    fn stencil_errors() {
        let k = NormalizedKernel::analytic(spec(
            KernelKind::SchrodingerHarmonic,
            Convention::HalfFactor,
            1.0,
            1.0,
            1.0,
        ));
        assert!(matches!(pde_residual(&k, 0.5, 2e-3, 1e-3), Err(Error::Stencil(_))));
        assert!(matches!(pde_residual(&k, PI + 1e-9, 1.0, 1e-3), Err(Error::Stencil(_))));
    }

    #[test]
    fn free_heat_normalization_recovers_sqrt_xi() {
        for xi in [0.5, 1.0, 2.0] {
            let s = spec(KernelKind::HeatFree, Convention::HalfFactor, 1.0, 0.0, xi);
            let r = normalization_constant(&s, &default_t_sequence()).unwrap();
            assert!((r.c0 - xi.sqrt()).abs() < 1e-6, "xi={xi}: c0={}", r.c0);
        }
    }

    #[test]
    fn neville_extrapolates_quadratics_exactly() {
        let pts = [(0.3, 1.0 + 0.3 - 2.0 * 0.09), (0.2, 1.0 + 0.2 - 2.0 * 0.04), (0.1, 1.0 + 0.1 - 0.02)];
        assert!((neville_at_zero(&pts) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wrap_phase_range() {
        for th in [-10.0, -PI, 0.0, PI, 3.0 * PI, 1e4] {
            let w = wrap_phase(th);
            assert!(w > -PI && w <= PI);
            assert!(((th - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((th - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
    }
}
