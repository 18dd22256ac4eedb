//! Independent references for the closed-form kernels: the eigenfunction
//! expansion of the heat semigroup and a Crank–Nicolson evolver on a
//! truncated half-line grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{heat_decay_hint, Convention, EquationKind, NormalizedKernel, PotentialParams};
use crate::quadrature::{integrate_half_line, integrate_half_line_complex, Integrand};
use crate::specfun::{laguerre_unchecked, ln_gamma};

fn require_harmonic(params: &PotentialParams) -> Result<f64> {
    if params.omega() > 0.0 {
        Ok(params.omega())
    } else {
        Err(Error::Domain("the spectrum is discrete only for omega > 0".into()))
    }
}

/// `E_n = omega (4n + 2 nu + 2)` for `-d_xx + V`, halved under [`Convention::HalfFactor`].
pub fn eigenvalue(params: &PotentialParams, n: usize, convention: Convention) -> Result<f64> {
    let w = require_harmonic(params)?;
    Ok(convention.operator_factor() * w * (4.0 * n as f64 + 2.0 * params.nu() + 2.0))
}

/// `ln N_n` with `N_n^2 = 2 omega^(nu+1) n! / Gamma(n + nu + 1)`.
fn ln_norm(params: &PotentialParams, n: usize) -> f64 {
    let nu = params.nu();
    0.5 * (std::f64::consts::LN_2 + (nu + 1.0) * params.omega().ln() + ln_gamma(n as f64 + 1.0)
        - ln_gamma(n as f64 + nu + 1.0))
}

fn eigenfunction_with_norm(params: &PotentialParams, n: usize, ln_n: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let nu = params.nu();
    let u = params.omega() * x * x;
    let envelope = (ln_n + (nu + 0.5) * x.ln() - 0.5 * u).exp();
    envelope * laguerre_unchecked(n, nu, u)
}

/// Normalized eigenfunction `N_n x^(nu+1/2) e^(-omega x^2/2) L_n^(nu)(omega x^2)`.
pub fn eigenfunction(params: &PotentialParams, n: usize, x: f64) -> Result<f64> {
    require_harmonic(params)?;
    Ok(eigenfunction_with_norm(params, n, ln_norm(params, n), x))
}

/// Truncated eigenbasis with cached normalizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub params: PotentialParams,
    pub convention: Convention,
    pub n_terms: usize,
    ln_norms: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(params: PotentialParams, convention: Convention, n_terms: usize) -> Result<Self> {
        require_harmonic(&params)?;
        if n_terms == 0 {
            return Err(Error::Size("need at least one term".into()));
        }
        let ln_norms = (0..n_terms + TAIL_TERMS).map(|n| ln_norm(&params, n)).collect();
        Ok(Self { params, convention, n_terms, ln_norms })
    }

    pub fn psi(&self, n: usize, x: f64) -> f64 {
        let ln_n = self.ln_norms.get(n).copied().unwrap_or_else(|| ln_norm(&self.params, n));
        eigenfunction_with_norm(&self.params, n, ln_n, x)
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.convention.operator_factor()
            * self.params.omega()
            * (4.0 * n as f64 + 2.0 * self.params.nu() + 2.0)
    }

    /// Bound on `|psi_n(x)|` from `|L_n^a(u)| <= binom(n + a, n) e^(u/2)` (`a >= 0`).
    fn psi_bound(&self, n: usize, x: f64) -> f64 {
        let nu = self.params.nu();
        let nf = n as f64;
        let ln_binom = ln_gamma(nf + nu + 1.0) - ln_gamma(nf + 1.0) - ln_gamma(nu + 1.0);
        (self.ln_norms.get(n).copied().unwrap_or_else(|| ln_norm(&self.params, n))
            + (nu + 0.5) * x.ln()
            + ln_binom)
            .exp()
    }
}

const TAIL_TERMS: usize = 2000;

/// Spectral sum and a rigorous bound on the omitted terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `sum_{n < N} exp(-E_n t) psi_n(x) psi_n(xi)`. Fails with
/// [`Error::TailTooLarge`] when the bound on the remaining terms exceeds
/// `tol * |value|`.
pub fn spectral_heat_kernel(
    basis: &SpectralBasis,
    xi: f64,
    t: f64,
    x: f64,
    tol: f64,
) -> Result<SpectralValue> {
    if !(t > 0.0 && x > 0.0 && xi > 0.0) {
        return Err(Error::Domain(format!("need t, x, xi > 0, got {t}, {x}, {xi}")));
    }
    let mut value = 0.0;
    for n in 0..basis.n_terms {
        // product first so the sum is exactly symmetric in (x, xi)
        value += (-basis.energy(n) * t).exp() * (basis.psi(n, x) * basis.psi(n, xi));
    }
    let mut tail_bound = 0.0;
    for n in basis.n_terms..basis.n_terms + TAIL_TERMS {
        let term = (-basis.energy(n) * t).exp() * basis.psi_bound(n, x) * basis.psi_bound(n, xi);
        tail_bound += term;
        if term < 1e-20 * tail_bound {
            break;
        }
    }
    // the scan stops once terms are negligible; dividing by 1 - gap covers
    // whatever lies beyond it
    let gap = (-4.0 * basis.convention.operator_factor() * basis.params.omega() * t).exp();
    tail_bound /= (1.0 - gap).max(1e-300);
    if tail_bound > tol * value.abs() {
        return Err(Error::TailTooLarge { tail: tail_bound, tol: tol * value.abs() });
    }
    Ok(SpectralValue { value, tail_bound })
}

/// Smallest number of terms whose tail bound at time `t` is below
/// `tol * value`, searched up to `max_terms`.
pub fn terms_needed(
    params: PotentialParams,
    convention: Convention,
    xi: f64,
    t: f64,
    x: f64,
    tol: f64,
    max_terms: usize,
) -> Result<usize> {
    let mut n = 8;
    loop {
        let basis = SpectralBasis::new(params, convention, n)?;
        match spectral_heat_kernel(&basis, xi, t, x, tol) {
            Ok(_) => return Ok(n),
            Err(Error::TailTooLarge { .. }) if n < max_terms => n = (2 * n).min(max_terms),
            Err(e) => return Err(e),
        }
    }
}

/// Rayleigh quotient `<psi_n, H psi_n> / <psi_n, psi_n>` of the sampled
/// eigenfunction under the grid operator `-D2 + V` used by [`cn_evolve`],
/// scaled by the convention factor. Converges to [`eigenvalue`] as `O(h^2)`.
pub fn discrete_rayleigh_quotient(
    params: &PotentialParams,
    convention: Convention,
    n: usize,
    h: f64,
    x_max: f64,
) -> Result<f64> {
    let grid = GridState::from_fn(h, x_max, |x| {
        Complex64::new(eigenfunction(params, n, x).unwrap_or(0.0), 0.0)
    })?;
    let u = &grid.values;
    let m = u.len();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..m {
        let left = if j > 0 { u[j - 1].re } else { 0.0 };
        let right = if j + 1 < m { u[j + 1].re } else { 0.0 };
        let x = grid.x(j);
        let hu = (2.0 * u[j].re - left - right) / (h * h) + params.potential(x) * u[j].re;
        num += u[j].re * hu;
        den += u[j].re * u[j].re;
    }
    Ok(convention.operator_factor() * num / den)
}

/// Values at interior nodes `x_j = j h`, `j = 1..N-1`, of a uniform grid on
/// `[0, x_max]` with Dirichlet conditions at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub h: f64,
    pub x_max: f64,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl GridState {
    pub fn from_fn<F: Fn(f64) -> Complex64>(h: f64, x_max: f64, f: F) -> Result<Self> {
        if !(h > 0.0) || !(x_max > 2.0 * h) {
            return Err(Error::Size(format!("bad grid: h = {h}, x_max = {x_max}")));
        }
        let cells = (x_max / h).round() as usize;
        if ((cells as f64) * h - x_max).abs() > 1e-9 * x_max {
            return Err(Error::Size(format!("x_max = {x_max} is not a multiple of h = {h}")));
        }
        let values = (1..cells).map(|j| f(j as f64 * h)).collect();
        Ok(Self { h, x_max, values, time: 0.0 })
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn x(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|j| self.x(j))
    }

    /// Discrete mass `sum |u_j|^2 h`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.h
    }

    /// Discrete integral `sum u_j h`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.h
    }

    /// `||u - g|| / ||g||` in the discrete L2 norm.
    pub fn relative_l2_error<F: FnMut(f64) -> Complex64>(&self, mut reference: F) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, v) in self.values.iter().enumerate() {
            let g = reference(self.x(j));
            num += (v - g).norm_sqr();
            den += g.norm_sqr();
        }
        (num / den).sqrt()
    }
}

/// Diagnostics of a [`cn_evolve`] run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveStats {
    pub steps: usize,
    pub dt: f64,
    /// Largest relative change of the discrete mass in a single step.
    pub max_step_mass_drift: f64,
}

/// Crank–Nicolson evolution to `t_final` with steps of at most `dt`.
///
/// Heat: `u_t = -a H u`; Schrödinger: `u_t = -i a H u` (the Cayley form),
/// with `H = -D2 + V`, `a` the convention factor and `D2` the 3-point
/// second difference.
pub fn cn_evolve(
    kind: EquationKind,
    params: &PotentialParams,
    convention: Convention,
    state: &GridState,
    t_final: f64,
    dt: f64,
) -> Result<(GridState, EvolveStats)> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let span = t_final - state.time;
    if !(span >= 0.0) {
        return Err(Error::Domain(format!("t_final {t_final} precedes state time {}", state.time)));
    }
    let steps = (span / dt).ceil() as usize;
    let mut out = state.clone();
    out.time = t_final;
    if steps == 0 {
        return Ok((out, EvolveStats { steps: 0, dt: 0.0, max_step_mass_drift: 0.0 }));
    }
    let step = span / steps as f64;
    let lambda = match kind {
        EquationKind::Heat => Complex64::new(1.0, 0.0),
        EquationKind::Schrodinger => Complex64::new(0.0, 1.0),
    };
    let h = state.h;
    let m = state.values.len();
    // (I + c H) u_new = (I - c H) u_old, c = lambda a dt / 2
    let c = lambda * convention.operator_factor() * step * 0.5;
    let off = -1.0 / (h * h);
    let diag: Vec<f64> = (0..m).map(|j| 2.0 / (h * h) + params.potential(state.x(j))).collect();

    // Thomas factorization of the constant left matrix
    let lower = c * off;
    let upper = c * off;
    let mut denom = vec![Complex64::new(0.0, 0.0); m];
    let mut cprime = vec![Complex64::new(0.0, 0.0); m];
    denom[0] = 1.0 + c * diag[0];
    cprime[0] = upper / denom[0];
    for j in 1..m {
        denom[j] = 1.0 + c * diag[j] - lower * cprime[j - 1];
        cprime[j] = upper / denom[j];
    }

    let mut u = out.values;
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    let mut max_drift: f64 = 0.0;
    for _ in 0..steps {
        let before: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        for j in 0..m {
            let left = if j > 0 { u[j - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if j + 1 < m { u[j + 1] } else { Complex64::new(0.0, 0.0) };
            rhs[j] = u[j] - c * (diag[j] * u[j] + off * (left + right));
        }
        // forward sweep then back substitution
        u[0] = rhs[0] / denom[0];
        for j in 1..m {
            u[j] = (rhs[j] - lower * u[j - 1]) / denom[j];
        }
        for j in (0..m - 1).rev() {
            let next = u[j + 1];
            u[j] -= cprime[j] * next;
        }
        if kind == EquationKind::Schrodinger && before > 0.0 {
            let after: f64 = u.iter().map(|v| v.norm_sqr()).sum();
            max_drift = max_drift.max(((after - before) / before).abs());
        }
    }
    out.values = u;
    Ok((out, EvolveStats { steps, dt: step, max_step_mass_drift: max_drift }))
}

/// Default far boundary for kernel evolutions: `max(xi + 12/sqrt(omega), 15)`.
pub fn default_x_max(params: &PotentialParams, xi: f64) -> f64 {
    let w = params.omega();
    let reach = if w > 0.0 { xi + 12.0 / w.sqrt() } else { 0.0 };
    reach.max(15.0)
}

/// Outcome of evolving a kernel snapshot with [`cn_evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnComparison {
    pub relative_l2_error: f64,
    pub max_step_mass_drift: f64,
    pub steps: usize,
    pub nodes: usize,
}

/// Evolves `E(t0, .)` from `t0` to `t0 + span` on a grid with spacing `h`
/// and compares with `E(t0 + span, .)`.
pub fn cn_kernel_comparison(
    kernel: &NormalizedKernel,
    t0: f64,
    span: f64,
    h: f64,
    dt: f64,
    x_max: f64,
) -> Result<CnComparison> {
    let spec = &kernel.spec;
    let x_max = (x_max / h).round() * h;
    let start = GridState::from_fn(h, x_max, |x| {
        kernel.evaluate_complex(t0, x).unwrap_or(Complex64::new(0.0, 0.0))
    })?
    .with_time(t0);
    let (end, stats) =
        cn_evolve(spec.kind.equation(), &spec.params, spec.convention, &start, t0 + span, dt)?;
    let mut failure = None;
    let err = end.relative_l2_error(|x| match kernel.evaluate_complex(t0 + span, x) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(CnComparison {
        relative_l2_error: err,
        max_step_mass_drift: stats.max_step_mass_drift,
        steps: stats.steps,
        nodes: end.values.len(),
    })
}

/// `|int_0^inf E_xi(t, x) f(x) dx - f(xi)|`.
///
/// Heat kernels use their own Gaussian envelope for truncation; Schrödinger
/// kernels rely on `f`'s decay hint (a windowed `f`), which is then required.
pub fn delta_limit_test<F: Fn(f64) -> f64>(
    kernel: &NormalizedKernel,
    f: &Integrand<F>,
    t: f64,
) -> Result<f64> {
    let spec = &kernel.spec;
    let target = (f.evaluate)(spec.xi);
    match spec.kind.equation() {
        EquationKind::Heat => {
            let integrand = Integrand::with_hint(
                |x: f64| match kernel.evaluate(t, x) {
                    Ok(v) => v.magnitude() * kernel.c0.re.signum() * (f.evaluate)(x),
                    Err(_) => 0.0,
                },
                heat_decay_hint(spec, t),
            );
            let r = integrate_half_line(&integrand, 1e-12)?;
            Ok((r.value - target).abs())
        }
        EquationKind::Schrodinger => {
            let hint = f.decay_hint.ok_or_else(|| {
                Error::Domain("Schrödinger delta limit needs a windowed test function".into())
            })?;
            let (value, _) = integrate_half_line_complex(
                |x: f64| {
                    kernel.evaluate_complex(t, x).unwrap_or(Complex64::new(0.0, 0.0))
                        * (f.evaluate)(x)
                },
                Some(hint),
                1e-11,
            )?;
            Ok((value - target).norm())
        }
    }
}
