//! Bessel functions of real order, generalized Laguerre polynomials and
//! log-gamma.
//!
//! `J_nu` is evaluated by its power series for small arguments, Miller's
//! backward recurrence (normalized with the Neumann sum) in the transition
//! region, and the Hankel expansion for large arguments. `I_nu` is only
//! exposed in the exponentially scaled form `e^{-z} I_nu(z)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Order of a Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::Domain(format!(
                "Bessel order must be finite and non-negative, got {nu}"
            )));
        }
        Ok(Self(nu))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_092;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// `ln Γ(x)` for `x > 0`.
pub fn gamma_ln(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_ln requires x > 0, got {x}")));
    }
    Ok(ln_gamma(x))
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    // Exact zeros at 1 and 2.
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x >= 15.0 {
        return ln_gamma_stirling(x);
    }
    let tmp = x + LANCZOS_G;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = LANCZOS_C0;
    let mut y = x;
    for c in LANCZOS {
        y += 1.0;
        ser += c / y;
    }
    tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

// Cody-Waite split of ln 2; `e * LN2_HI` is exact for |e| < 2^11.
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling series with the dominant `(x - 1/2) ln x` product carried in
/// extra precision, so that the result is within about one ulp.
fn ln_gamma_stirling(x: f64) -> f64 {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mantissa = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    let e = exp as f64;

    let a = x - 0.5;
    let (p_hi, p_lo) = two_prod(a, e * LN2_HI);
    let rest = a * (e * LN2_LO + mantissa.ln());
    let (s, s_err) = two_sum(p_hi, -x);

    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    s + (s_err + p_lo + rest + HALF_LN_2PI + series)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn check_arg(z: f64) -> Result<()> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::Domain(format!(
            "Bessel argument must be finite and non-negative, got {z}"
        )));
    }
    Ok(())
}

/// Bessel function of the first kind `J_nu(z)`.
pub fn bessel_j(order: BesselOrder, z: f64) -> Result<f64> {
    check_arg(z)?;
    Ok(j_unchecked(order.value(), z))
}

/// Exponentially scaled modified Bessel function `e^{-z} I_nu(z)`.
pub fn bessel_i_scaled(order: BesselOrder, z: f64) -> Result<f64> {
    check_arg(z)?;
    Ok(ln_i_scaled(order.value(), z).exp())
}

/// `ln(e^{-z} I_nu(z))`; `-inf` at `z = 0` for `nu > 0`.
pub(crate) fn ln_i_scaled(nu: f64, z: f64) -> f64 {
    let z = fault::distort(z);
    if z == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if z > asymptotic_threshold(nu) {
        ln_i_scaled_asymptotic(nu, z)
    } else {
        ln_i_scaled_series(nu, z)
    }
}

fn asymptotic_threshold(nu: f64) -> f64 {
    30.0_f64.max(2.0 * nu * nu)
}

fn ln_i_scaled_series(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ln_rescale = 0.0;
    let mut k = 0.0;
    loop {
        term *= q / ((k + 1.0) * (nu + k + 1.0));
        sum += term;
        k += 1.0;
        if term <= 1e-17 * sum {
            break;
        }
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            ln_rescale += 280.0 * std::f64::consts::LN_10;
        }
    }
    nu * (0.5 * z).ln() - ln_gamma(nu + 1.0) - z + sum.ln() + ln_rescale
}

fn ln_i_scaled_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * z);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum.ln() - 0.5 * (2.0 * PI * z).ln()
}

pub(crate) fn j_unchecked(nu: f64, z: f64) -> f64 {
    let z = fault::distort(z);
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if z <= 4.0 || 0.25 * z * z <= nu + 1.0 {
        j_series(nu, z)
    } else if z > 35.0_f64.max(2.0 * nu * nu) {
        j_hankel(nu, z)
    } else {
        j_miller(nu, z)
    }
}

fn j_series(nu: f64, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= q / ((k + 1.0) * (nu + k + 1.0));
        sum += term;
        k += 1.0;
        if term.abs() <= 1e-17 * sum.abs() || k > 300.0 {
            break;
        }
    }
    let lead = (nu * (0.5 * z).ln() - ln_gamma(nu + 1.0)).exp();
    lead * sum
}

/// Hankel expansion; `P cos(chi) - Q sin(chi)` with `chi = z - (nu/2 + 1/4) pi`.
fn j_hankel(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0_f64;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (8.0 * k as f64 * z);
        if next.abs() > a.abs() && k > 2 {
            break;
        }
        a = next;
        // a_k / z^k with alternating sign pattern for P (even k) and Q (odd k)
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() <= 1e-17 {
            break;
        }
    }
    let shift = (0.5 * nu + 0.25) * PI;
    let (sz, cz) = z.sin_cos();
    let (ss, cs) = shift.sin_cos();
    let cos_chi = cz * cs + sz * ss;
    let sin_chi = sz * cs - cz * ss;
    (2.0 / (PI * z)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Miller's backward recurrence over orders `nu + j`, normalized by
/// `(z/2)^nu = sum_k (nu + 2k) Γ(nu + k) / k! J_{nu+2k}(z)`.
fn j_miller(nu: f64, z: f64) -> f64 {
    let start = (z.ceil() as usize + 50) & !1;
    let mut above = 0.0; // f_{j+1}
    let mut current = 1e-300; // f_j, starting at j = start
    let mut norm_even: Vec<f64> = Vec::with_capacity(start / 2 + 1);
    let mut j = start;
    let f0 = loop {
        if j.is_multiple_of(2) {
            norm_even.push(current);
        }
        if j == 0 {
            break current;
        }
        let below = 2.0 * (nu + j as f64) / z * current - above;
        above = current;
        current = below;
        j -= 1;
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            for v in norm_even.iter_mut() {
                *v *= 1e-250;
            }
        }
    };
    // norm_even holds f_start, f_{start-2}, ..., f_0
    norm_even.reverse();
    let gamma_nu1 = ln_gamma(nu + 1.0).exp();
    let mut sum = gamma_nu1 * norm_even[0];
    let mut g = gamma_nu1; // Γ(nu + k) / k! at k = 1
    for (k, f) in norm_even.iter().enumerate().skip(1) {
        let kf = k as f64;
        if k > 1 {
            g *= (nu + kf - 1.0) / kf;
        }
        sum += (nu + 2.0 * kf) * g * f;
    }
    f0 * (0.5 * z).powf(nu) / sum
}

/// Generalized Laguerre polynomial `L_n^{(alpha)}(x)`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::Domain(format!(
            "Laguerre parameter must satisfy alpha > -1, got {alpha}"
        )));
    }
    Ok(laguerre_unchecked(n, alpha, x))
}

pub(crate) fn laguerre_unchecked(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for m in 1..n {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 + alpha - x) * cur - (mf + alpha) * prev) / (mf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Deliberate corruption of the Bessel routines, used to check that the
/// verification suites notice a broken special function. Off by default.
pub mod fault {
    use std::sync::atomic::{AtomicBool, Ordering};

    static BROKEN_BESSEL: AtomicBool = AtomicBool::new(false);

    /// Stretches every Bessel argument by 0.1% while enabled.
    pub fn set_broken_bessel(on: bool) {
        BROKEN_BESSEL.store(on, Ordering::SeqCst);
    }

    pub fn broken_bessel() -> bool {
        BROKEN_BESSEL.load(Ordering::Relaxed)
    }

    #[inline]
    pub(crate) fn distort(z: f64) -> f64 {
        if broken_bessel() {
            z * 1.001
        } else {
            z
        }
    }
}
