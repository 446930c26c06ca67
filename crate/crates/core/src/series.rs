//! Truncated Taylor series in two complex variables.
//!
//! A [`Jet`] of order `n` stores the coefficients `c[i][j]` of
//! `sum_{i+j<=n} c[i][j] h1^i h2^j`, i.e. `c[i][j] = d1^i d2^j f / (i! j!)`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    coef: Vec<C64>,
}

#[inline]
fn slot(i: usize, j: usize) -> usize {
    let n = i + j;
    n * (n + 1) / 2 + j
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet {
            order,
            coef: vec![C64::new(0.0, 0.0); slot(0, order) + 1],
        }
    }

    pub fn constant(order: usize, c: C64) -> Self {
        let mut j = Jet::zero(order);
        j.coef[0] = c;
        j
    }

    /// The coordinate function `x_dir` expanded at a point whose `dir`
    /// coordinate is `at`.
    pub fn coordinate(order: usize, dir: usize, at: C64) -> Self {
        let mut j = Jet::constant(order, at);
        if order >= 1 {
            if dir == 0 {
                j.set(1, 0, C64::new(1.0, 0.0));
            } else {
                j.set(0, 1, C64::new(1.0, 0.0));
            }
        }
        j
    }

    /// Builds a jet from a coefficient function `(i, j) -> c[i][j]`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut j = Jet::zero(order);
        for n in 0..=order {
            for b in 0..=n {
                j.set(n - b, b, f(n - b, b));
            }
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> C64 {
        self.coef[0]
    }

    /// Taylor coefficient of `h1^i h2^j`; zero beyond the order.
    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        if i + j > self.order {
            C64::new(0.0, 0.0)
        } else {
            self.coef[slot(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        let s = slot(i, j);
        self.coef[s] = v;
    }

    /// Partial derivative `d1^i d2^j` at the expansion point.
    pub fn partial(&self, i: usize, j: usize) -> C64 {
        self.coeff(i, j) * (factorial(i) * factorial(j))
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            order,
            coef: self.coef[..slot(0, order) + 1].to_vec(),
        }
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet {
            order: self.order,
            coef: self.coef.iter().map(|c| c * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Derivative in direction `dir` (0 or 1); the order drops by one.
    pub fn diff(&self, dir: usize) -> Jet {
        if self.order == 0 {
            return Jet::zero(0);
        }
        Jet::from_fn(self.order - 1, |i, j| {
            if dir == 0 {
                self.coeff(i + 1, j) * (i + 1) as f64
            } else {
                self.coeff(i, j + 1) * (j + 1) as f64
            }
        })
    }

    /// Applies `d1^i d2^j`.
    pub fn diff_multi(&self, i: usize, j: usize) -> Jet {
        if i + j > self.order {
            return Jet::zero(0);
        }
        let mut out = self.clone();
        for _ in 0..i {
            out = out.diff(0);
        }
        for _ in 0..j {
            out = out.diff(1);
        }
        out
    }

    fn homogeneous(&self, n: usize) -> Vec<C64> {
        (0..=n).map(|b| self.coeff(n - b, b)).collect()
    }

    fn set_homogeneous(&mut self, n: usize, h: &[C64]) {
        for (b, v) in h.iter().enumerate() {
            self.set(n - b, b, *v);
        }
    }

    fn mul_homogeneous(a: &[C64], b: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
        for (p, x) in a.iter().enumerate() {
            for (q, y) in b.iter().enumerate() {
                out[p + q] += x * y;
            }
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let n_max = self.order;
        let f: Vec<Vec<C64>> = (0..=n_max).map(|n| self.homogeneous(n)).collect();
        let mut g: Vec<Vec<C64>> = vec![vec![C64::new(1.0, 0.0)]];
        for n in 1..=n_max {
            let mut acc = vec![C64::new(0.0, 0.0); n + 1];
            for k in 1..=n {
                let prod = Jet::mul_homogeneous(&f[k], &g[n - k]);
                for (a, p) in acc.iter_mut().zip(prod) {
                    *a += p * k as f64;
                }
            }
            g.push(acc.into_iter().map(|v| v / n as f64).collect());
        }
        let e0 = f[0][0].exp();
        let mut out = Jet::zero(n_max);
        for (n, h) in g.iter().enumerate() {
            let scaled: Vec<C64> = h.iter().map(|v| v * e0).collect();
            out.set_homogeneous(n, &scaled);
        }
        out
    }

    /// Natural logarithm (principal branch for the constant term).
    pub fn ln(&self) -> Jet {
        let n_max = self.order;
        let f0 = self.coef[0];
        let u: Vec<Vec<C64>> = (0..=n_max)
            .map(|n| self.homogeneous(n).into_iter().map(|v| v / f0).collect())
            .collect();
        let mut h: Vec<Vec<C64>> = vec![vec![f0.ln()]];
        for n in 1..=n_max {
            let mut acc: Vec<C64> = u[n].iter().map(|v| v * n as f64).collect();
            for k in 1..n {
                let prod = Jet::mul_homogeneous(&u[k], &h[n - k]);
                for (a, p) in acc.iter_mut().zip(prod) {
                    *a -= p * (n - k) as f64;
                }
            }
            h.push(acc.into_iter().map(|v| v / n as f64).collect());
        }
        let mut out = Jet::zero(n_max);
        for (n, v) in h.iter().enumerate() {
            out.set_homogeneous(n, v);
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let n_max = self.order;
        let f0 = self.coef[0];
        let u: Vec<Vec<C64>> = (0..=n_max)
            .map(|n| self.homogeneous(n).into_iter().map(|v| v / f0).collect())
            .collect();
        let mut g: Vec<Vec<C64>> = vec![vec![C64::new(1.0, 0.0)]];
        for n in 1..=n_max {
            let mut acc = vec![C64::new(0.0, 0.0); n + 1];
            for k in 1..=n {
                let prod = Jet::mul_homogeneous(&u[k], &g[n - k]);
                for (a, p) in acc.iter_mut().zip(prod) {
                    *a -= p;
                }
            }
            g.push(acc);
        }
        let mut out = Jet::zero(n_max);
        for (n, v) in g.iter().enumerate() {
            let scaled: Vec<C64> = v.iter().map(|c| c / f0).collect();
            out.set_homogeneous(n, &scaled);
        }
        out
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut out = Jet::constant(self.order, C64::new(1.0, 0.0));
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Evaluates the truncated polynomial at displacement `h`.
    pub fn eval_at(&self, h: [C64; 2]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..=self.order {
            for b in 0..=n {
                acc += self.coeff(n - b, b) * h[0].powu((n - b) as u32) * h[1].powu(b as u32);
            }
        }
        acc
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        Jet::from_fn(order, |i, j| self.coeff(i, j) + rhs.coeff(i, j))
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        Jet::from_fn(order, |i, j| self.coeff(i, j) - rhs.coeff(i, j))
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for n in 0..=order {
            for p in 0..=n {
                let a = self.homogeneous(p);
                let b = rhs.homogeneous(n - p);
                let prod = Jet::mul_homogeneous(&a, &b);
                for (k, v) in prod.into_iter().enumerate() {
                    let cur = out.coeff(n - k, k);
                    out.set(n - k, k, cur + v);
                }
            }
        }
        out
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl Mul<C64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: C64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: C64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: C64) -> Jet {
        self.coef[0] += rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn sample(order: usize) -> Jet {
        Jet::from_fn(order, |i, j| c64(0.3 * i as f64 - 0.1, 0.2 * j as f64 + 0.05 * (i * j) as f64))
    }

    #[test]
    fn exp_ln_roundtrip() {
        let f = sample(5) + c64(1.5, 0.2);
        let g = f.ln().exp();
        assert!((&g - &f).max_abs() < 1e-13);
    }

    #[test]
    fn recip_times_self_is_one() {
        let f = sample(4) + c64(0.7, -0.4);
        let p = &f * &f.recip();
        assert!((p.value() - 1.0).norm() < 1e-14);
        for n in 1..=4 {
            for b in 0..=n {
                assert!(p.coeff(n - b, b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn exp_of_linear_is_exponential() {
        let a = c64(0.4, -0.3);
        let b = c64(-1.1, 0.2);
        let lin = Jet::coordinate(4, 0, c64(0.0, 0.0)).scale(a)
            + Jet::coordinate(4, 1, c64(0.0, 0.0)).scale(b);
        let e = lin.exp();
        let expect = a.powu(2) * b / 2.0;
        assert!((e.coeff(2, 1) - expect).norm() < 1e-15);
    }

    #[test]
    fn product_rule() {
        let f = sample(3);
        let g = sample(3).scale(c64(0.0, 1.0)) + c64(2.0, 0.0);
        let lhs = (&f * &g).diff(0);
        let rhs = &f.diff(0) * &g.truncate(2) + &f.truncate(2) * &g.diff(0);
        assert!((&lhs - &rhs).max_abs() < 1e-14);
    }
}
