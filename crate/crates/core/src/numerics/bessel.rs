//! Bessel functions needed by the radial problems.
//!
//! `bessel_i` sums the ascending series, which is accurate for the argument
//! range used here (x <= 30). `bessel_j` and its derivative use the periodic
//! integral representation, whose trapezoid rule converges geometrically; they
//! only serve the Neumann eigenvalue computation.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Largest argument for which the series evaluation is trusted.
pub const SERIES_X_MAX: f64 = 30.0;

fn bessel_i_series(n: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    let h2 = h * h;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= h2 / (k * (k + n as f64));
        sum += term;
        if term <= 1e-16 * sum {
            break;
        }
    }
    sum
}

/// Modified Bessel function `I_n(x)` or its derivative, for `n` in {0, 1, 2}.
pub fn bessel_i(n: u32, x: f64, derivative: bool) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("bessel_i: x = {x} must be finite and >= 0")));
    }
    if n > 2 {
        return Err(Error::Domain(format!("bessel_i: order {n} not supported")));
    }
    if !derivative {
        return Ok(bessel_i_series(n, x));
    }
    Ok(match n {
        0 => bessel_i_series(1, x),
        1 if x == 0.0 => 0.5,
        1 => bessel_i_series(0, x) - bessel_i_series(1, x) / x,
        _ if x == 0.0 => 0.0,
        _ => bessel_i_series(1, x) - 2.0 * bessel_i_series(2, x) / x,
    })
}

/// `I_1(x)` without the domain check; callers guarantee `x >= 0`.
pub(crate) fn i1(x: f64) -> f64 {
    bessel_i_series(1, x)
}

/// `I_1'(x)` without the domain check.
pub(crate) fn i1_prime(x: f64) -> f64 {
    if x == 0.0 {
        0.5
    } else {
        bessel_i_series(0, x) - bessel_i_series(1, x) / x
    }
}

fn trapezoid_points(x: f64, n: u32) -> usize {
    // Integrand bandwidth is about |x| + n.
    2 * (x.abs() as usize + n as usize) + 40
}

/// Bessel function of the first kind `J_n(x)`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let q = trapezoid_points(x, n);
    let h = PI / q as f64;
    let nf = n as f64;
    let mut s = 0.5 * (1.0 + (nf * PI).cos());
    for k in 1..q {
        let t = k as f64 * h;
        s += (nf * t - x * t.sin()).cos();
    }
    s / q as f64
}

/// Derivative `J_n'(x)`.
pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    let q = trapezoid_points(x, n);
    let h = PI / q as f64;
    let nf = n as f64;
    let mut s = 0.0;
    for k in 1..q {
        let t = k as f64 * h;
        s += t.sin() * (nf * t - x * t.sin()).sin();
    }
    s / q as f64
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Positive zeros of `J_n'` below `x_max`, ascending.
pub fn bessel_j_prime_zeros(n: u32, x_max: f64) -> Vec<f64> {
    let step = 0.05;
    let mut zeros = Vec::new();
    // j'_{n,1} > n, and J_n' is positive but below roundoff near 0 for large n.
    let mut a = (n as f64).max(1e-3);
    let mut fa = bessel_j_prime(n, a);
    while a < x_max {
        let b = a + step;
        let fb = bessel_j_prime(n, b);
        if (fa < 0.0) != (fb < 0.0) {
            let z = bisect(|x| bessel_j_prime(n, x), a, b);
            if z <= x_max {
                zeros.push(z);
            }
        }
        a = b;
        fa = fb;
    }
    zeros
}

/// First `count` eigenvalues of the Neumann Laplacian `-Δ` on the disk of
/// radius `r`, ascending, counted with multiplicity.
pub fn neumann_laplacian_eigs(r: f64, count: usize) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("neumann_laplacian_eigs: R = {r} must be positive")));
    }
    let mut x_max: f64 = 8.0;
    loop {
        // Orders above x_max have no zeros below it.
        let mut vals = vec![0.0];
        for n in 0..=(x_max.ceil() as u32) {
            let mult = if n == 0 { 1 } else { 2 };
            for z in bessel_j_prime_zeros(n, x_max) {
                for _ in 0..mult {
                    vals.push((z / r) * (z / r));
                }
            }
        }
        if vals.len() >= count {
            vals.sort_by(f64::total_cmp);
            vals.truncate(count);
            return Ok(vals);
        }
        x_max *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: alternating ascending series for J_n.
    fn j_series(n: u32, x: f64) -> f64 {
        let h = 0.5 * x;
        let mut term = 1.0;
        for k in 1..=n {
            term *= h / k as f64;
        }
        let mut sum = term;
        for k in 1..80 {
            let k = k as f64;
            term *= -h * h / (k * (k + n as f64));
            sum += term;
        }
        sum
    }

    // J_n' = (J_{n-1} - J_{n+1}) / 2 with J_{-1} = -J_1.
    fn j_prime_series(n: u32, x: f64) -> f64 {
        let lower = if n == 0 { -j_series(1, x) } else { j_series(n - 1, x) };
        0.5 * (lower - j_series(n + 1, x))
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_i(1, 0.0, false).unwrap(), 0.0);
        assert_eq!(bessel_i(0, 0.0, false).unwrap(), 1.0);
        assert!(bessel_i(0, -1.0, false).is_err());
    }

    #[test]
    fn derivative_recurrence() {
        let lhs = bessel_i(1, 2.0, true).unwrap();
        let rhs = bessel_i(0, 2.0, false).unwrap() - bessel_i(1, 2.0, false).unwrap() / 2.0;
        assert!((lhs - rhs).abs() < 1e-15);
        // Reference values of I_0(1), I_1(1), I_2(1).
        let refs = [1.2660658777520082, 0.565159103992485, 0.13574766976703828];
        for (n, r) in refs.iter().enumerate() {
            let v = bessel_i(n as u32, 1.0, false).unwrap();
            assert!((v - r).abs() < 1e-15 * r, "I_{n}(1) = {v}");
        }
    }

    #[test]
    fn bessel_ode_residual() {
        for n in 0..3u32 {
            for k in 1..=100 {
                let x = 0.3 * k as f64;
                let y = bessel_i(n, x, false).unwrap();
                let yp = bessel_i(n, x, true).unwrap();
                // I_n'' = (I_{n-2} + 2 I_n + I_{n+2}) / 4 with I_{-k} = I_k.
                let ypp = 0.25
                    * (bessel_i_series(n.abs_diff(2), x) + 2.0 * y + bessel_i_series(n + 2, x));
                let res = x * x * ypp + x * yp - (x * x + (n * n) as f64) * y;
                let scale = x * x * y.abs() + 1.0;
                assert!(res.abs() / scale < 1e-9, "n={n} x={x} res={res}");
            }
        }
    }

    #[test]
    fn j_matches_series() {
        for n in 0..4u32 {
            for k in 0..40 {
                let x = 0.25 * k as f64;
                assert!((bessel_j(n, x) - j_series(n, x)).abs() < 1e-13);
                assert!((bessel_j_prime(n, x) - j_prime_series(n, x)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn neumann_eigs_unit_disk() {
        assert_eq!(neumann_laplacian_eigs(1.0, 1).unwrap(), vec![0.0]);
        // Oracle: bisection on the sign change of the series derivative of J_1.
        let z = bisect(|x| j_prime_series(1, x), 1.5, 2.2);
        assert!((z - 1.8412).abs() < 1e-4);
        let e = neumann_laplacian_eigs(1.0, 3).unwrap();
        assert_eq!(e[0], 0.0);
        assert!((e[1] - z * z).abs() < 1e-8 && (e[2] - z * z).abs() < 1e-8);
        let e2 = neumann_laplacian_eigs(2.0, 3).unwrap();
        for (a, b) in e.iter().zip(&e2) {
            assert!((a / 4.0 - b).abs() < 1e-14);
        }
        // Next distinct values: j'_{2,1} = 3.0542 (x2), j'_{0,2} = 3.8317.
        let e = neumann_laplacian_eigs(1.0, 6).unwrap();
        assert!((e[3].sqrt() - 3.0542).abs() < 1e-4 && (e[4] - e[3]).abs() < 1e-12);
        assert!((e[5].sqrt() - 3.8317).abs() < 1e-4);
    }
}
