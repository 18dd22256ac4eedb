//! Lie point symmetries of the heat and Schrödinger equations with potential
//! `k x^-2 + omega^2 x^2`, checked pointwise.
//!
//! Fields have the form `tau(t) d_t + chi(t,x) d_x + phi(t,x) u d_u` and are
//! written for the operators `u_t = u_xx - V u` and `i u_t = -u_xx + V u`
//! (the unit-factor time). Each field carries a closure returning its
//! coefficient jet; the jet is cross-checked against finite differences when
//! the field is built.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{EquationKind, PotentialParams};
use crate::sampling::symmetry_points;
use crate::specfun::{j_unchecked, ln_i_scaled};

/// Tolerance of the finite-difference self-check on construction.
pub const JET_CHECK_TOL: f64 = 1e-8;
const JET_CHECK_POINTS: usize = 50;
const FD_STEP: f64 = 1e-3;

/// Coefficients of a field and the partial derivatives the checks use.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub tau: f64,
    pub tau_t: f64,
    pub tau_tt: f64,
    pub chi: f64,
    pub chi_t: f64,
    pub chi_x: f64,
    pub chi_tt: f64,
    pub phi: Complex64,
    pub phi_t: Complex64,
    pub phi_x: Complex64,
    pub phi_xx: Complex64,
}

impl Jet {
    fn axpy(&mut self, a: f64, o: &Jet) {
        self.tau += a * o.tau;
        self.tau_t += a * o.tau_t;
        self.tau_tt += a * o.tau_tt;
        self.chi += a * o.chi;
        self.chi_t += a * o.chi_t;
        self.chi_x += a * o.chi_x;
        self.chi_tt += a * o.chi_tt;
        self.phi += a * o.phi;
        self.phi_t += a * o.phi_t;
        self.phi_x += a * o.phi_x;
        self.phi_xx += a * o.phi_xx;
    }
}

pub type JetFn = Arc<dyn Fn(f64, f64) -> Jet + Send + Sync>;

/// `tau d_t + chi d_x + phi u d_u`.
#[derive(Clone)]
pub struct VectorField {
    label: String,
    omega: f64,
    jet: JetFn,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("omega", &self.omega)
            .finish_non_exhaustive()
    }
}

/// Components of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub tau: f64,
    pub chi: f64,
    pub phi: Complex64,
}

impl Triple {
    pub fn scaled(&self, a: f64) -> Triple {
        Triple { tau: a * self.tau, chi: a * self.chi, phi: a * self.phi }
    }

    pub fn distance(&self, o: &Triple) -> f64 {
        (self.tau - o.tau).abs().max((self.chi - o.chi).abs()).max((self.phi - o.phi).norm())
    }
}

impl VectorField {
    /// Builds a field and rejects it if the supplied derivatives disagree with
    /// finite differences at 50 points.
    pub fn new<F>(label: impl Into<String>, omega: f64, jet: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Jet + Send + Sync + 'static,
    {
        let field = Self::unchecked(label, omega, Arc::new(jet));
        let defect = field.consistency_defect();
        if !(defect <= JET_CHECK_TOL) {
            return Err(Error::Structure(format!(
                "field {}: supplied derivatives disagree with finite differences ({defect:e})",
                field.label
            )));
        }
        Ok(field)
    }

    fn unchecked(label: impl Into<String>, omega: f64, jet: JetFn) -> Self {
        Self { label: label.into(), omega, jet }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Frequency of the algebra the field belongs to (0 for the free case).
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn jet(&self, t: f64, x: f64) -> Jet {
        (self.jet)(t, x)
    }

    pub fn at(&self, t: f64, x: f64) -> Triple {
        let j = self.jet(t, x);
        Triple { tau: j.tau, chi: j.chi, phi: j.phi }
    }

    /// `sum_i c_i v_i`.
    pub fn linear_combination(
        label: impl Into<String>,
        coefficients: &[f64],
        basis: &[VectorField],
    ) -> Result<Self> {
        if coefficients.len() != basis.len() || basis.is_empty() {
            return Err(Error::Size(format!(
                "{} coefficients for {} fields",
                coefficients.len(),
                basis.len()
            )));
        }
        let parts: Vec<(f64, JetFn)> =
            coefficients.iter().copied().zip(basis.iter().map(|v| v.jet.clone())).collect();
        let jet: JetFn = Arc::new(move |t, x| {
            let mut acc = Jet::default();
            for (c, f) in &parts {
                acc.axpy(*c, &f(t, x));
            }
            acc
        });
        Ok(Self::unchecked(label, basis[0].omega, jet))
    }

    /// Lie bracket `[v, w]` as a field. Its derivatives come from 4th-order
    /// central differences of the analytic bracket, so nested brackets are
    /// accurate to roughly 1e-10 relative.
    pub fn bracket(v: &VectorField, w: &VectorField) -> VectorField {
        let (v, w) = (v.clone(), w.clone());
        let label = format!("[{},{}]", v.label, w.label);
        let omega = v.omega;
        let jet: JetFn = Arc::new(move |t, x| {
            let c = |tt: f64, xx: f64| commutator_at(&v, &w, tt, xx);
            let h = FD_STEP;
            let at = c(t, x);
            let tp = [c(t + h, x), c(t - h, x), c(t + 2.0 * h, x), c(t - 2.0 * h, x)];
            let xp = [c(t, x + h), c(t, x - h), c(t, x + 2.0 * h), c(t, x - 2.0 * h)];
            let d1 = |p: [f64; 4]| (8.0 * (p[0] - p[1]) - (p[2] - p[3])) / (12.0 * h);
            let d2 = |p: [f64; 4], m: f64| {
                (16.0 * (p[0] + p[1]) - (p[2] + p[3]) - 30.0 * m) / (12.0 * h * h)
            };
            let d1c = |p: [Complex64; 4]| (8.0 * (p[0] - p[1]) - (p[2] - p[3])) / (12.0 * h);
            let d2c = |p: [Complex64; 4], m: Complex64| {
                (16.0 * (p[0] + p[1]) - (p[2] + p[3]) - 30.0 * m) / (12.0 * h * h)
            };
            let taus = tp.map(|q| q.tau);
            let chis_t = tp.map(|q| q.chi);
            let chis_x = xp.map(|q| q.chi);
            Jet {
                tau: at.tau,
                tau_t: d1(taus),
                tau_tt: d2(taus, at.tau),
                chi: at.chi,
                chi_t: d1(chis_t),
                chi_x: d1(chis_x),
                chi_tt: d2(chis_t, at.chi),
                phi: at.phi,
                phi_t: d1c(tp.map(|q| q.phi)),
                phi_x: d1c(xp.map(|q| q.phi)),
                phi_xx: d2c(xp.map(|q| q.phi), at.phi),
            }
        });
        Self::unchecked(label, omega, jet)
    }

    /// Largest relative disagreement between supplied derivatives and
    /// 4th-order central differences over the standard sample points.
    pub fn consistency_defect(&self) -> f64 {
        let h = FD_STEP;
        let d1 = |f: &dyn Fn(f64) -> Complex64, s: f64| {
            (8.0 * (f(s + h) - f(s - h)) - (f(s + 2.0 * h) - f(s - 2.0 * h))) / (12.0 * h)
        };
        let rel = |supplied: Complex64, fd: Complex64, base: Complex64| {
            (supplied - fd).norm() / 1f64.max(supplied.norm()).max(base.norm())
        };
        fn re(v: f64) -> Complex64 {
            Complex64::new(v, 0.0)
        }
        let mut worst: f64 = 0.0;
        for (t, x) in symmetry_points(JET_CHECK_POINTS) {
            let j = self.jet(t, x);
            let in_t = |g: fn(&Jet) -> Complex64| d1(&|s| g(&self.jet(s, x)), t);
            let in_x = |g: fn(&Jet) -> Complex64| d1(&|s| g(&self.jet(t, s)), x);
            let checks = [
                rel(re(j.tau_t), in_t(|q| re(q.tau)), re(j.tau)),
                rel(re(j.tau_tt), in_t(|q| re(q.tau_t)), re(j.tau_t)),
                rel(re(0.0), in_x(|q| re(q.tau)), re(j.tau)),
                rel(re(j.chi_t), in_t(|q| re(q.chi)), re(j.chi)),
                rel(re(j.chi_x), in_x(|q| re(q.chi)), re(j.chi)),
                rel(re(j.chi_tt), in_t(|q| re(q.chi_t)), re(j.chi_t)),
                rel(j.phi_t, in_t(|q| q.phi), j.phi),
                rel(j.phi_x, in_x(|q| q.phi), j.phi),
                rel(j.phi_xx, in_x(|q| q.phi_x), j.phi_x),
            ];
            for c in checks {
                worst = worst.max(if c.is_nan() { f64::INFINITY } else { c });
            }
        }
        worst
    }
}

fn require_harmonic(params: &PotentialParams) -> Result<f64> {
    let omega = params.omega();
    if omega > 0.0 {
        Ok(omega)
    } else {
        Err(Error::Domain(
            "symmetry basis needs omega > 0; use projective_field for the free case".into(),
        ))
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Four-dimensional algebra of `u_t = u_xx - (k/x^2 + omega^2 x^2) u`:
/// `d_t`, the two hyperbolic fields and `u d_u`.
pub fn heat_symmetry_basis(params: &PotentialParams) -> Result<Vec<VectorField>> {
    let w = require_harmonic(params)?;
    let v1 = VectorField::new("v1", w, |_, _| Jet { tau: 1.0, ..Jet::default() })?;
    let v2 = VectorField::new("v2", w, move |t, x| {
        let (ch, sh) = ((4.0 * w * t).cosh(), (4.0 * w * t).sinh());
        Jet {
            tau: ch,
            tau_t: 4.0 * w * sh,
            tau_tt: 16.0 * w * w * ch,
            chi: 2.0 * w * sh * x,
            chi_t: 8.0 * w * w * ch * x,
            chi_x: 2.0 * w * sh,
            chi_tt: 32.0 * w.powi(3) * sh * x,
            phi: c(-w * sh - 2.0 * w * w * ch * x * x, 0.0),
            phi_t: c(-4.0 * w * w * ch - 8.0 * w.powi(3) * sh * x * x, 0.0),
            phi_x: c(-4.0 * w * w * ch * x, 0.0),
            phi_xx: c(-4.0 * w * w * ch, 0.0),
        }
    })?;
    let v3 = VectorField::new("v3", w, move |t, x| {
        let (ch, sh) = ((4.0 * w * t).cosh(), (4.0 * w * t).sinh());
        Jet {
            tau: sh,
            tau_t: 4.0 * w * ch,
            tau_tt: 16.0 * w * w * sh,
            chi: 2.0 * w * ch * x,
            chi_t: 8.0 * w * w * sh * x,
            chi_x: 2.0 * w * ch,
            chi_tt: 32.0 * w.powi(3) * ch * x,
            phi: c(-w * ch - 2.0 * w * w * sh * x * x, 0.0),
            phi_t: c(-4.0 * w * w * sh - 8.0 * w.powi(3) * ch * x * x, 0.0),
            phi_x: c(-4.0 * w * w * sh * x, 0.0),
            phi_xx: c(-4.0 * w * w * sh, 0.0),
        }
    })?;
    let v4 = VectorField::new("v4", w, |_, _| Jet { phi: c(1.0, 0.0), ..Jet::default() })?;
    Ok(vec![v1, v2, v3, v4])
}

/// Five-dimensional algebra of `i u_t = -u_xx + (k/x^2 + omega^2 x^2) u`:
/// `d_t`, the two trigonometric fields, `u d_u` and the phase rotation `i u d_u`.
pub fn schrodinger_symmetry_basis(params: &PotentialParams) -> Result<Vec<VectorField>> {
    let w = require_harmonic(params)?;
    let v1 = VectorField::new("v1", w, |_, _| Jet { tau: 1.0, ..Jet::default() })?;
    let v2 = VectorField::new("v2", w, move |t, x| {
        let (cs, sn) = ((4.0 * w * t).cos(), (4.0 * w * t).sin());
        Jet {
            tau: -cs / (4.0 * w),
            tau_t: sn,
            tau_tt: 4.0 * w * cs,
            chi: 0.5 * sn * x,
            chi_t: 2.0 * w * cs * x,
            chi_x: 0.5 * sn,
            chi_tt: -8.0 * w * w * sn * x,
            phi: c(-0.25 * sn, 0.5 * w * cs * x * x),
            phi_t: c(-w * cs, -2.0 * w * w * sn * x * x),
            phi_x: c(0.0, w * cs * x),
            phi_xx: c(0.0, w * cs),
        }
    })?;
    let v3 = VectorField::new("v3", w, move |t, x| {
        let (cs, sn) = ((4.0 * w * t).cos(), (4.0 * w * t).sin());
        Jet {
            tau: sn / (4.0 * w),
            tau_t: cs,
            tau_tt: -4.0 * w * sn,
            chi: 0.5 * cs * x,
            chi_t: -2.0 * w * sn * x,
            chi_x: 0.5 * cs,
            chi_tt: -8.0 * w * w * cs * x,
            phi: c(-0.25 * cs, -0.5 * w * sn * x * x),
            phi_t: c(w * sn, -2.0 * w * w * cs * x * x),
            phi_x: c(0.0, -w * sn * x),
            phi_xx: c(0.0, -w * sn),
        }
    })?;
    let v4 = VectorField::new("v4", w, |_, _| Jet { phi: c(1.0, 0.0), ..Jet::default() })?;
    let v5 = VectorField::new("v5", w, |_, _| Jet { phi: c(0.0, 1.0), ..Jet::default() })?;
    Ok(vec![v1, v2, v3, v4, v5])
}

/// Projective field of the free (`omega = 0`) equation, already satisfying the
/// source constraints at `xi`: `t^2 d_t + x t d_x + phi u d_u` with
/// `phi = [i (x^2 - xi^2) - 2t]/4` (Schrödinger) or `-(x^2 - xi^2)/4 - t/2` (heat).
pub fn projective_field(kind: EquationKind, xi: f64) -> Result<VectorField> {
    if !(xi > 0.0) {
        return Err(Error::Domain(format!("xi must be positive, got {xi}")));
    }
    let unit = match kind {
        EquationKind::Heat => c(-1.0, 0.0),
        EquationKind::Schrodinger => c(0.0, 1.0),
    };
    VectorField::new("projective", 0.0, move |t, x| Jet {
        tau: t * t,
        tau_t: 2.0 * t,
        tau_tt: 2.0,
        chi: x * t,
        chi_t: x,
        chi_x: t,
        chi_tt: 0.0,
        phi: 0.25 * unit * (x * x - xi * xi) - 0.5 * t,
        phi_t: c(-0.5, 0.0),
        phi_x: 0.5 * unit * x,
        phi_xx: 0.5 * unit,
    })
}

/// Components of `[v, w]` at `(t, x)` from the supplied derivatives.
pub fn commutator_at(v: &VectorField, w: &VectorField, t: f64, x: f64) -> Triple {
    let (a, b) = (v.jet(t, x), w.jet(t, x));
    Triple {
        tau: a.tau * b.tau_t - b.tau * a.tau_t,
        chi: (a.tau * b.chi_t + a.chi * b.chi_x) - (b.tau * a.chi_t + b.chi * a.chi_x),
        phi: (a.tau * b.phi_t + a.chi * b.phi_x) - (b.tau * a.phi_t + b.chi * a.phi_x),
    }
}

/// `c[i][j][m]` with `[v_i, v_j] = sum_m c[i][j][m] v_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    pub c: Vec<Vec<Vec<f64>>>,
    /// Largest fit residual over all pairs, relative to
    /// `max(1, |[v_i, v_j]|, |v_i| |v_j|)` with sup norms over the points.
    pub residual: f64,
}

impl StructureTensor {
    pub fn dim(&self) -> usize {
        self.c.len()
    }
}

/// Minimum number of sample points for a structure-constant fit.
pub const MIN_FIT_POINTS: usize = 30;

/// Rows `(tau, chi, Re phi, Im phi)` of a triple.
fn rows(p: &Triple) -> [f64; 4] {
    [p.tau, p.chi, p.phi.re, p.phi.im]
}

/// Least-squares fit of every bracket onto the basis over `points`.
pub fn structure_constants(basis: &[VectorField], points: &[(f64, f64)]) -> Result<StructureTensor> {
    let n = basis.len();
    if n == 0 {
        return Err(Error::Size("empty basis".into()));
    }
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::Size(format!(
            "need at least {MIN_FIT_POINTS} sample points, got {}",
            points.len()
        )));
    }
    let m = 4 * points.len();
    let mut a = DMatrix::<f64>::zeros(m, n);
    for (p, &(t, x)) in points.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            for (r, val) in rows(&v.at(t, x)).into_iter().enumerate() {
                a[(4 * p + r, j)] = val;
            }
        }
    }
    // column equilibration before the SVD
    let scales: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    if scales.contains(&0.0) {
        return Err(Error::RankDeficient("a basis field vanishes on every sample point".into()));
    }
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient(format!(
            "sample points do not separate the basis (condition {:e})",
            smax / smin
        )));
    }

    let mut c = vec![vec![vec![0.0; n]; n]; n];
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let mut b = DVector::<f64>::zeros(m);
            for (p, &(t, x)) in points.iter().enumerate() {
                for (r, val) in rows(&commutator_at(&basis[i], &basis[j], t, x)).into_iter().enumerate() {
                    b[4 * p + r] = val;
                }
            }
            let y = svd.solve(&b, 0.0).map_err(|e| Error::RankDeficient(e.to_string()))?;
            let coef: Vec<f64> = (0..n).map(|k| y[k] / scales[k]).collect();
            let fit = &a * DVector::from_column_slice(&coef);
            // the bracket is a difference of products of the two fields, so
            // roundoff scales with |v_i| |v_j| rather than with |[v_i, v_j]|
            let scale = 1f64.max(b.amax()).max(a.column(i).amax() * a.column(j).amax());
            let r = (fit - &b).amax() / scale;
            residual = residual.max(r);
            for k in 0..n {
                c[i][j][k] = coef[k];
                c[j][i][k] = -coef[k];
            }
        }
    }
    Ok(StructureTensor { c, residual })
}

/// Symmetry-condition residual of `v` at `(t, x)`.
///
/// For `u_t = a (u_xx - V u)` with `a = 1` (heat) or `a = i` (Schrödinger) a
/// field is a symmetry iff `chi_x = tau'/2`, `phi_x = -chi_t / (2a)` and
/// `phi_t - a phi_xx + a (tau V_t + chi V_x + tau' V) = 0`. With
/// `chi = tau' x/2 + rho` the last condition is the cubic-in-`x` relation
/// `tau V_t + chi V_x + tau' V +- (tau''' x^2/8 + rho'' x/2 + sigma') = 0`;
/// here `tau'''`, `rho''` and `sigma'` enter through the supplied `phi_t`.
/// Returns the sum of the moduli of the last two conditions.
pub fn determining_residual(
    v: &VectorField,
    params: &PotentialParams,
    kind: EquationKind,
    t: f64,
    x: f64,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let j = v.jet(t, x);
    let shape = (j.chi_x - 0.5 * j.tau_t).abs();
    if shape > 1e-10 * 1f64.max(j.chi_x.abs()) {
        return Err(Error::Structure(format!(
            "{}: chi - tau' x/2 depends on x (chi_x - tau'/2 = {shape:e})",
            v.label
        )));
    }
    let a = match kind {
        EquationKind::Heat => c(1.0, 0.0),
        EquationKind::Schrodinger => c(0.0, 1.0),
    };
    // V does not depend on t, so the tau V_t term is absent.
    let w = j.chi * params.potential_dx(x) + j.tau_t * params.potential(x);
    let u_condition = j.phi_t - a * j.phi_xx + a * w;
    let ux_condition = j.phi_x + j.chi_t / (2.0 * a);
    Ok(u_condition.norm() + ux_condition.norm())
}

/// Source constraints `tau(0) = 0`, `chi(0, xi) = 0`, `phi(0, xi) + chi_x(0, xi) = 0`
/// as real rows (the last split into real and imaginary parts).
pub fn ic_constraint_matrix(basis: &[VectorField], xi: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, basis.len());
    for (j, v) in basis.iter().enumerate() {
        let q = v.jet(0.0, xi);
        let last = q.phi + q.chi_x;
        m[(0, j)] = q.tau;
        m[(1, j)] = q.chi;
        m[(2, j)] = last.re;
        m[(3, j)] = last.im;
    }
    m
}

/// Coefficients over `basis` of the field obeying the source constraints,
/// scaled so that `tau''(0) = 16 omega^2` (`2` for the free case).
pub fn ic_constraint_coefficients(basis: &[VectorField], xi: f64) -> Result<Vec<f64>> {
    if !(xi > 0.0) {
        return Err(Error::Domain(format!("xi must be positive, got {xi}")));
    }
    let n = basis.len();
    if n == 0 {
        return Err(Error::Size("empty basis".into()));
    }
    let m = ic_constraint_matrix(basis, xi);
    if n == 1 {
        let r = m.amax();
        return if r <= 1e-12 {
            Ok(vec![1.0])
        } else {
            Err(Error::NoSolution(format!("{} violates the source constraints by {r:e}", basis[0].label)))
        };
    }
    let size = n.max(m.nrows());
    let mut square = DMatrix::zeros(size, n);
    square.view_mut((0, 0), (m.nrows(), n)).copy_from(&m);
    let svd = square.svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested right singular vectors");
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let null: Vec<usize> =
        (0..n).filter(|&i| svd.singular_values[i] <= 1e-10 * smax).collect();
    let idx = match null.as_slice() {
        [] => return Err(Error::NoSolution("constraint matrix has full column rank".into())),
        [i] => *i,
        _ => {
            return Err(Error::RankDeficient(format!(
                "constraints leave a {}-dimensional family",
                null.len()
            )))
        }
    };
    let mut k: Vec<f64> = vt.row(idx).iter().copied().collect();
    let curvature: f64 = k.iter().zip(basis).map(|(c, v)| c * v.jet(0.0, xi).tau_tt).sum();
    let omega = basis[0].omega;
    let target = if omega > 0.0 { 16.0 * omega * omega } else { 2.0 };
    let scale = if curvature.abs() > 1e-12 {
        target / curvature
    } else {
        let big = k.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
        1.0 / big
    };
    let kmax = k.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for c in k.iter_mut() {
        // the SVD leaves rounding-level entries where the exact answer is 0
        if c.abs() <= 1e-13 * kmax {
            *c = 0.0;
        }
        *c *= scale;
    }
    Ok(k)
}

/// The field of the basis span fixed by the source constraints at `xi`.
/// A one-field basis (the projective field) is returned unchanged if it
/// already satisfies them.
pub fn ic_constrained_field(basis: &[VectorField], xi: f64) -> Result<VectorField> {
    let k = ic_constraint_coefficients(basis, xi)?;
    if basis.len() == 1 {
        return Ok(basis[0].clone());
    }
    VectorField::linear_combination(format!("constrained(xi={xi})"), &k, basis)
}

/// `(value, d_t, d_x)`
pub type RealJetFn = Arc<dyn Fn(f64, f64) -> (f64, f64, f64) + Send + Sync>;
/// `(log M, d_t log M, d_x log M)`
pub type LogJetFn = Arc<dyn Fn(f64, f64) -> (Complex64, Complex64, Complex64) + Send + Sync>;

/// Invariant `eta` of a field and the multiplier `M` of the ansatz `u = M F(eta)`.
#[derive(Clone)]
pub struct InvariantPair {
    eta: RealJetFn,
    log_multiplier: LogJetFn,
}

impl fmt::Debug for InvariantPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantPair").finish_non_exhaustive()
    }
}

impl InvariantPair {
    pub fn new<E, M>(eta: E, log_multiplier: M) -> Self
    where
        E: Fn(f64, f64) -> (f64, f64, f64) + Send + Sync + 'static,
        M: Fn(f64, f64) -> (Complex64, Complex64, Complex64) + Send + Sync + 'static,
    {
        Self { eta: Arc::new(eta), log_multiplier: Arc::new(log_multiplier) }
    }

    /// `eta = x / sinh(2 omega t)`, `M = sinh(2 omega t)^{-1/2} exp[-omega (x^2+xi^2) coth(2 omega t)/2]`.
    pub fn heat(omega: f64, xi: f64) -> Self {
        Self::new(
            move |t, x| {
                let (sh, ch) = ((2.0 * omega * t).sinh(), (2.0 * omega * t).cosh());
                (x / sh, -2.0 * omega * x * ch / (sh * sh), 1.0 / sh)
            },
            move |t, x| {
                let (sh, ch) = ((2.0 * omega * t).sinh(), (2.0 * omega * t).cosh());
                let r2 = x * x + xi * xi;
                (
                    c(-0.5 * sh.ln() - 0.5 * omega * r2 * ch / sh, 0.0),
                    c(-omega * ch / sh + omega * omega * r2 / (sh * sh), 0.0),
                    c(-omega * x * ch / sh, 0.0),
                )
            },
        )
    }

    /// `eta = x / sin(2 omega t)`, `M = sin(2 omega t)^{-1/2} exp[i omega (x^2+xi^2) cot(2 omega t)/2]`.
    pub fn schrodinger(omega: f64, xi: f64) -> Self {
        Self::new(
            move |t, x| {
                let (sn, cs) = ((2.0 * omega * t).sin(), (2.0 * omega * t).cos());
                (x / sn, -2.0 * omega * x * cs / (sn * sn), 1.0 / sn)
            },
            move |t, x| {
                let (sn, cs) = ((2.0 * omega * t).sin(), (2.0 * omega * t).cos());
                let r2 = x * x + xi * xi;
                (
                    -0.5 * c(sn, 0.0).ln() + c(0.0, 0.5 * omega * r2 * cs / sn),
                    c(-omega * cs / sn, -omega * omega * r2 / (sn * sn)),
                    c(0.0, omega * x * cs / sn),
                )
            },
        )
    }

    /// `eta = x / t`, `M = t^{-1/2} exp[-+ (x^2+xi^2)/(4t)]` (real for heat, imaginary
    /// exponent for Schrödinger).
    pub fn projective(kind: EquationKind, xi: f64) -> Self {
        let unit = match kind {
            EquationKind::Heat => c(-1.0, 0.0),
            EquationKind::Schrodinger => c(0.0, 1.0),
        };
        Self::new(
            |t, x| (x / t, -x / (t * t), 1.0 / t),
            move |t, x| {
                let r2 = x * x + xi * xi;
                (
                    c(-0.5 * t.ln(), 0.0) + unit * r2 / (4.0 * t),
                    c(-0.5 / t, 0.0) - unit * r2 / (4.0 * t * t),
                    unit * x / (2.0 * t),
                )
            },
        )
    }

    pub fn eta(&self, t: f64, x: f64) -> f64 {
        (self.eta)(t, x).0
    }

    pub fn multiplier(&self, t: f64, x: f64) -> Complex64 {
        (self.log_multiplier)(t, x).0.exp()
    }
}

/// `|tau eta_t + chi eta_x|`: zero when `eta` is invariant under `v`.
pub fn invariant_action(v: &VectorField, inv: &InvariantPair, t: f64, x: f64) -> f64 {
    let j = v.jet(t, x);
    let (_, eta_t, eta_x) = (inv.eta)(t, x);
    (j.tau * eta_t + j.chi * eta_x).abs()
}

/// Characteristic `phi u - tau u_t - chi u_x` of `v` on `u = M F(eta)`, divided
/// by `|M|` and maximized over three smooth profiles `F`. Zero when every
/// function of that form is invariant.
pub fn multiplier_defect(v: &VectorField, inv: &InvariantPair, t: f64, x: f64) -> f64 {
    let j = v.jet(t, x);
    let (eta, eta_t, eta_x) = (inv.eta)(t, x);
    let (_, l_t, l_x) = (inv.log_multiplier)(t, x);
    let zeroth = j.phi - j.tau * l_t - j.chi * l_x;
    let first = j.tau * eta_t + j.chi * eta_x;
    let profiles: [(f64, f64); 3] = [
        ((-eta * eta).exp(), -2.0 * eta * (-eta * eta).exp()),
        (eta.sin() + 2.0, eta.cos()),
        (1.0 / (1.0 + eta * eta), -2.0 * eta / (1.0 + eta * eta).powi(2)),
    ];
    profiles
        .iter()
        .map(|(f, df)| (zeroth * f - first * df).norm() / 1f64.max(f.abs()))
        .fold(0.0, f64::max)
}

/// Left side of the reduced radial ODE `eta^2 F'' + q(eta) F` for the profile
/// `f`, with `F''` by 4th-order differences; returns `|.| / max(1, |F|)`.
///
/// `q = -(lambda^2 eta^2 + k)` for heat and `lambda^2 eta^2 - k` for
/// Schrödinger, with `lambda = omega xi`, or `xi/2` when `omega = 0`.
pub fn reduced_ode_residual_with<F>(
    kind: EquationKind,
    params: &PotentialParams,
    xi: f64,
    eta: f64,
    f: F,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    let lambda = reduced_frequency(params, xi);
    let h = 1e-3 * eta;
    let f0 = f(eta);
    let f2 = (16.0 * (f(eta + h) + f(eta - h)) - (f(eta + 2.0 * h) + f(eta - 2.0 * h)) - 30.0 * f0)
        / (12.0 * h * h);
    let l2 = (lambda * eta).powi(2);
    let q = match kind {
        EquationKind::Heat => -(l2 + params.k()),
        EquationKind::Schrodinger => l2 - params.k(),
    };
    Ok((eta * eta * f2 + q * f0).abs() / 1f64.max(f0.abs()))
}

fn reduced_frequency(params: &PotentialParams, xi: f64) -> f64 {
    if params.omega() > 0.0 {
        params.omega() * xi
    } else {
        0.5 * xi
    }
}

/// The Bessel profile solving the reduced ODE: `sqrt(eta) I_nu(lambda eta)`
/// for heat, `sqrt(eta) J_nu(lambda eta)` for Schrödinger.
pub fn reduced_profile(kind: EquationKind, params: &PotentialParams, xi: f64) -> impl Fn(f64) -> f64 {
    let lambda = reduced_frequency(params, xi);
    let nu = params.nu();
    move |eta: f64| {
        let z = lambda * eta;
        let b = match kind {
            EquationKind::Heat => (ln_i_scaled(nu, z) + z).exp(),
            EquationKind::Schrodinger => j_unchecked(nu, z),
        };
        eta.sqrt() * b
    }
}

/// [`reduced_ode_residual_with`] on [`reduced_profile`].
pub fn reduced_ode_residual(
    kind: EquationKind,
    params: &PotentialParams,
    xi: f64,
    eta: f64,
) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::Domain(format!("xi must be positive, got {xi}")));
    }
    reduced_ode_residual_with(kind, params, xi, eta, reduced_profile(kind, params, xi))
}

/// Places where the shipped fields differ from their commonly printed forms.
pub fn basis_notices(kind: EquationKind) -> Vec<String> {
    match kind {
        EquationKind::Heat => vec![
            "constrained heat field: tau = 2 sinh^2(2 omega t); without the factor 2 it is \
             inconsistent with chi = 2 omega sinh(4 omega t) x under the source constraints"
                .into(),
        ],
        EquationKind::Schrodinger => vec![
            "Schrödinger v2/v3: chi = sin(4 omega t) x/2 and cos(4 omega t) x/2 respectively, the \
             assignment compatible with chi = tau' x/2 + rho(t); the interchanged trig factors fail \
             the symmetry condition"
                .into(),
        ],
    }
}
