//! Oracles written independently of the library: a plain theta lattice sum
//! and real interval integrals of `y^k dy / |w|`.

#![allow(dead_code)]

use abelops::{c64, CMat2, CVec2, C64, PI};

pub const BRANCH: [f64; 5] = [0.0, 1.0, 2.0, 3.0, 4.0];

/// `Omega` of the default curve (purely imaginary).
pub const OMEGA_IM: [[f64; 2]; 2] = [
    [1.2535200070792203, 0.49766789975405807],
    [0.49766789975405807, 0.995_335_799_508_116_1],
];

pub fn omega() -> CMat2 {
    CMat2::new(
        c64(0.0, OMEGA_IM[0][0]),
        c64(0.0, OMEGA_IM[0][1]),
        c64(0.0, OMEGA_IM[1][0]),
        c64(0.0, OMEGA_IM[1][1]),
    )
}

/// `d1^i d2^j theta(z)` by direct summation over `|n_k| <= 14`.
pub fn theta_sum(omega: &CMat2, z: CVec2, i: u32, j: u32) -> C64 {
    let r = 14i64;
    let mut acc = c64(0.0, 0.0);
    for n1 in -r..=r {
        for n2 in -r..=r {
            let n = [n1 as f64, n2 as f64];
            let quad = omega[(0, 0)] * n[0] * n[0] + omega[(0, 1)] * 2.0 * n[0] * n[1] + omega[(1, 1)] * n[1] * n[1];
            let lin = z[0] * n[0] + z[1] * n[1];
            let e = (c64(0.0, PI) * quad + c64(0.0, 2.0 * PI) * lin).exp();
            let f = c64(0.0, 2.0 * PI * n[0]).powu(i) * c64(0.0, 2.0 * PI * n[1]).powu(j);
            acc += f * e;
        }
    }
    acc
}

/// `int_a^b y^k / sqrt|prod (y - y_m)| dy` for consecutive branch points, with
/// `y = a + (b - a)(1 - cos t)/2`, which turns the integrand smooth and even
/// in `t`, so the trapezoid rule converges spectrally.
pub fn interval_integral(branch: [f64; 5], a: f64, b: f64, k: i32) -> f64 {
    let n = 400;
    let h = PI / n as f64;
    let half = (b - a) / 2.0;
    let mut sum = 0.0;
    for s in 0..=n {
        let t = s as f64 * h;
        let y = a + half * (1.0 - t.cos());
        let rest: f64 = branch.iter().filter(|&&m| m != a && m != b).map(|&m| (y - m).abs()).product();
        let w = if s == 0 || s == n { 0.5 } else { 1.0 };
        sum += w * y.powi(k) / rest.sqrt();
    }
    sum * h
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}
