//! Four-point Lagrange interpolation on a uniform lattice.

use num_complex::Complex64;

/// Stencil start and the Lagrange weights (value, d/dx) for fractional node
/// coordinate `c` on a lattice of `n >= 4` nodes with spacing `dx`.
#[inline]
pub fn cubic_stencil(c: f64, n: usize, dx: f64) -> (usize, [f64; 4], [f64; 4]) {
    let cell = (c.floor() as isize).clamp(0, n as isize - 2);
    let start = (cell - 1).clamp(0, n as isize - 4) as usize;
    let s = c - start as f64;
    let (s0, s1, s2, s3) = (s, s - 1.0, s - 2.0, s - 3.0);
    let w = [-s1 * s2 * s3 / 6.0, s0 * s2 * s3 / 2.0, -s0 * s1 * s3 / 2.0, s0 * s1 * s2 / 6.0];
    let d = [
        -(s2 * s3 + s1 * s3 + s1 * s2) / (6.0 * dx),
        (s2 * s3 + s0 * s3 + s0 * s2) / (2.0 * dx),
        -(s1 * s3 + s0 * s3 + s0 * s1) / (2.0 * dx),
        (s1 * s2 + s0 * s2 + s0 * s1) / (6.0 * dx),
    ];
    (start, w, d)
}

/// Value and first derivative of the cubic interpolant of `values` at `x`.
#[inline]
pub fn cubic_with_derivative(values: &[Complex64], x_min: f64, dx: f64, x: f64) -> (Complex64, Complex64) {
    let (start, w, d) = cubic_stencil((x - x_min) / dx, values.len(), dx);
    let mut psi = Complex64::new(0.0, 0.0);
    let mut dpsi = Complex64::new(0.0, 0.0);
    for m in 0..4 {
        let v = values[start + m];
        psi += v * w[m];
        dpsi += v * d[m];
    }
    (psi, dpsi)
}

/// Density and current `(rho, 2 Im(conj(psi) psi'))` from the cubic interpolant.
#[inline]
pub fn density_and_current(values: &[Complex64], x_min: f64, dx: f64, x: f64) -> (f64, f64) {
    let (psi, dpsi) = cubic_with_derivative(values, x_min, dx, x);
    (psi.norm_sqr(), 2.0 * (psi.conj() * dpsi).im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let dx = 0.5;
        let f = |x: f64| Complex64::new(x * x * x - 2.0 * x + 1.0, 0.5 * x * x);
        let df = |x: f64| Complex64::new(3.0 * x * x - 2.0, x);
        let values: Vec<_> = (0..10).map(|i| f(-1.0 + i as f64 * dx)).collect();
        for &x in &[-1.0, -0.9, 0.3, 1.71, 2.4, 3.5] {
            let (v, d) = cubic_with_derivative(&values, -1.0, dx, x);
            assert!((v - f(x)).norm() < 1e-12, "{x}");
            assert!((d - df(x)).norm() < 1e-11, "{x}");
        }
    }
}
