//! Test-only reference machinery: a double-double series oracle for the
//! Bessel functions and a few deterministic sampling helpers.

#![allow(dead_code)]

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Self::from(-q1)));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Self::from(-q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }.add(Self::from(q3))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `sum_k s^k (z^2/4)^k / (k! (nu+1)_k)` in double-double, `s = -1` for J and
/// `+1` for I. Slow and deliberately straightforward.
pub fn bessel_series_sum(nu: f64, z: f64, sign: f64) -> f64 {
    let (zz, zz_lo) = two_prod(z, z);
    let q = DoubleDouble { hi: 0.25 * zz * sign, lo: 0.25 * zz_lo * sign };
    let mut term = DoubleDouble::from(1.0);
    let mut sum = DoubleDouble::from(1.0);
    let mut k = 0.0;
    loop {
        let a = DoubleDouble::from(k + 1.0);
        let (b_hi, b_lo) = two_sum(nu, k + 1.0);
        let denom = a.mul(DoubleDouble { hi: b_hi, lo: b_lo });
        term = term.mul(q).div(denom);
        sum = sum.add(term);
        k += 1.0;
        if term.hi.abs() < 1e-34 * sum.hi.abs().max(1e-300) && k > 0.5 * z {
            break;
        }
        if k > 2000.0 {
            break;
        }
    }
    sum.to_f64()
}

/// Leading factor `(z/2)^nu / Γ(nu+1)` with `Γ` from an upward-shifted
/// Stirling series (independent of the crate's Lanczos evaluation).
pub fn series_lead(nu: f64, z: f64) -> f64 {
    (nu * (0.5 * z).ln() - stirling_ln_gamma(nu + 1.0)).exp()
}

pub fn stirling_ln_gamma(x: f64) -> f64 {
    let mut shift = 0.0;
    let mut y = x;
    while y < 20.0 {
        shift += y.ln();
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift
}

pub fn oracle_j(nu: f64, z: f64) -> f64 {
    series_lead(nu, z) * bessel_series_sum(nu, z, -1.0)
}

pub fn oracle_i_scaled(nu: f64, z: f64) -> f64 {
    series_lead(nu, z) * (-z).exp() * bessel_series_sum(nu, z, 1.0)
}

/// Radical-inverse Halton sample in base `base`.
pub fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic 2-D points on `[a0,b0] x [a1,b1]` (bases 2 and 3, skipping index 0).
pub fn halton_box(n: usize, a0: f64, b0: f64, a1: f64, b1: f64) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| (a0 + (b0 - a0) * halton(i, 2), a1 + (b1 - a1) * halton(i, 3)))
        .collect()
}
