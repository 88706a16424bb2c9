//! Degree-7 Genz–Malik rule on 3D boxes with an embedded degree-5 rule.

use crate::math;

/// One box `[lo, hi]` in parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Cube {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Cube { lo, hi }
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.hi[i] - self.lo[i]).product()
    }

    /// Halves along `axis`.
    pub fn split(&self, axis: usize) -> (Cube, Cube) {
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut a = *self;
        let mut b = *self;
        a.hi[axis] = mid;
        b.lo[axis] = mid;
        (a, b)
    }

    /// Splits into `n[i]` equal pieces along each axis.
    pub fn grid(&self, n: [usize; 3]) -> alloc::vec::Vec<Cube> {
        let mut out = alloc::vec::Vec::with_capacity(n[0] * n[1] * n[2]);
        let step =
            |i: usize, j: usize| self.lo[i] + (self.hi[i] - self.lo[i]) * j as f64 / n[i] as f64;
        for a in 0..n[0] {
            for b in 0..n[1] {
                for c in 0..n[2] {
                    out.push(Cube::new(
                        [step(0, a), step(1, b), step(2, c)],
                        [step(0, a + 1), step(1, b + 1), step(2, c + 1)],
                    ));
                }
            }
        }
        out
    }
}

/// Result of applying the rule to one box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
    /// Axis with the largest fourth difference.
    pub split_axis: usize,
}

pub const POINTS: usize = 33;

const L2: f64 = 0.358_568_582_800_318_1; // √(9/70)
const L4: f64 = 0.948_683_298_050_513_8; // √(9/10)
const L5: f64 = 0.688_247_201_611_685_3; // √(9/19)

const W1: f64 = -10936.0 / 19683.0;
const W2: f64 = 980.0 / 6561.0;
const W3: f64 = 620.0 / 19683.0;
const W4: f64 = 200.0 / 19683.0;
const W5: f64 = 6859.0 / 19683.0 / 8.0;

const E1: f64 = -1671.0 / 729.0;
const E2: f64 = 245.0 / 486.0;
const E3: f64 = -35.0 / 1458.0;
const E4: f64 = 25.0 / 729.0;

/// Applies the rule to `f` on `cube`.
pub fn apply(f: &dyn Fn([f64; 3]) -> f64, cube: &Cube) -> Estimate {
    let c = [
        0.5 * (cube.lo[0] + cube.hi[0]),
        0.5 * (cube.lo[1] + cube.hi[1]),
        0.5 * (cube.lo[2] + cube.hi[2]),
    ];
    let h = [
        0.5 * (cube.hi[0] - cube.lo[0]),
        0.5 * (cube.hi[1] - cube.lo[1]),
        0.5 * (cube.hi[2] - cube.lo[2]),
    ];
    let at = |d: [f64; 3]| f([c[0] + d[0] * h[0], c[1] + d[1] * h[1], c[2] + d[2] * h[2]]);

    let f0 = at([0.0; 3]);
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let mut best = (0usize, -1.0f64);
    for i in 0..3 {
        let mut d = [0.0; 3];
        d[i] = L2;
        let a = at(d);
        d[i] = -L2;
        let b = at(d);
        d[i] = L4;
        let p = at(d);
        d[i] = -L4;
        let m = at(d);
        s2 += a + b;
        s3 += p + m;
        let fourth = math::abs((a + b - 2.0 * f0) - (p + m - 2.0 * f0) / 7.0);
        if fourth > best.1 {
            best = (i, fourth);
        }
    }
    let mut s4 = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut d = [0.0; 3];
            d[i] = si * L4;
            d[j] = sj * L4;
            s4 += at(d);
        }
    }
    let mut s5 = 0.0;
    for a in [L5, -L5] {
        for b in [L5, -L5] {
            for cc in [L5, -L5] {
                s5 += at([a, b, cc]);
            }
        }
    }
    let vol = cube.volume();
    let hi = vol * (W1 * f0 + W2 * s2 + W3 * s3 + W4 * s4 + W5 * s5);
    let lo = vol * (E1 * f0 + E2 * s2 + E3 * s3 + E4 * s4);
    Estimate {
        value: hi,
        err: math::abs(hi - lo),
        split_axis: best.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let w = W1 + 6.0 * W2 + 6.0 * W3 + 12.0 * W4 + 8.0 * W5;
        let e = E1 + 6.0 * E2 + 6.0 * E3 + 12.0 * E4;
        assert!((w - 1.0).abs() < 1e-14);
        assert!((e - 1.0).abs() < 1e-14);
    }

    fn mono_exact(p: [u32; 3], cube: &Cube) -> f64 {
        (0..3)
            .map(|i| {
                let n = p[i] as i32 + 1;
                (math::powi(cube.hi[i], n) - math::powi(cube.lo[i], n)) / n as f64
            })
            .product()
    }

    #[test]
    fn exact_up_to_degree_seven() {
        let cube = Cube::new([-0.3, 0.1, 1.0], [0.9, 0.7, 2.5]);
        for a in 0..=7u32 {
            for b in 0..=(7 - a) {
                for c in 0..=(7 - a - b) {
                    let f = |x: [f64; 3]| {
                        math::powi(x[0], a as i32)
                            * math::powi(x[1], b as i32)
                            * math::powi(x[2], c as i32)
                    };
                    let est = apply(&f, &cube);
                    let want = mono_exact([a, b, c], &cube);
                    assert!(
                        (est.value - want).abs() < 1e-12 * want.abs().max(1.0),
                        "x^{a} y^{b} z^{c}"
                    );
                    if a + b + c <= 5 {
                        assert!(est.err < 1e-12 * want.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn split_axis_follows_variation() {
        let cube = Cube::new([0.0; 3], [1.0; 3]);
        let f = |x: [f64; 3]| libm::exp(5.0 * x[2]) + x[0];
        assert_eq!(apply(&f, &cube).split_axis, 2);
    }
}
