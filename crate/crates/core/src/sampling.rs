//! Deterministic low-discrepancy points used for pointwise checks and fits.

/// Radical inverse of `index` in `base`.
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

/// `n` points of the (2, 3) Halton sequence mapped onto `[t0, t1] x [x0, x1]`,
/// starting at index 1.
pub fn halton_box(n: usize, t_range: (f64, f64), x_range: (f64, f64)) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            (
                t_range.0 + (t_range.1 - t_range.0) * halton(i, 2),
                x_range.0 + (x_range.1 - x_range.0) * halton(i, 3),
            )
        })
        .collect()
}

/// Default box for symmetry fits: `t in [0.05, 1.5]`, `x in [0.2, 3]`.
pub fn symmetry_points(n: usize) -> Vec<(f64, f64)> {
    halton_box(n, (0.05, 1.5), (0.2, 3.0))
}
