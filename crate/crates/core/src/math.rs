//! Thin wrappers around `libm` so the numerics do not depend on `std`.

pub use core::f64::consts::{E, PI, TAU};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

#[inline]
pub fn powf(x: f64, p: f64) -> f64 {
    libm::pow(x, p)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut e = n.unsigned_abs();
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}

#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub fn asinh(x: f64) -> f64 {
    libm::asinh(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `3^{1/4}`, the normalisation of the standard bubble.
pub const CUBE_ROOT_FOURTH: f64 = 1.316_074_012_952_492_5;

/// Reduce an angle to `[0, 2π)`.
#[inline]
pub fn reduce_angle(theta: f64) -> f64 {
    let r = libm::fmod(theta, TAU);
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: alloc::vec::Vec<f64> = x.iter().map(|v| ln(abs(*v))).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|v| ln(abs(*v))).collect();
    linear_fit(&lx, &ly).0
}

/// Pairwise summation; the result depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_power_of_three() {
        assert!((CUBE_ROOT_FOURTH - powf(3.0, 0.25)).abs() < 1e-15);
    }

    #[test]
    fn integer_powers() {
        assert_eq!(powi(2.0, 10), 1024.0);
        assert!((powi(2.0, -3) - 0.125).abs() < 1e-16);
        assert_eq!(powi(7.0, 0), 1.0);
    }

    #[test]
    fn angle_reduction() {
        assert!((reduce_angle(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert!(reduce_angle(4.0 * TAU + 0.25) - 0.25 < 1e-12);
    }

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 3.0];
        let y = [3.0, 5.0, 7.0];
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
        let xs = [1e-2, 1e-3, 1e-4];
        let ys: alloc::vec::Vec<f64> = xs.iter().map(|d| 3.0 * d * d).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
