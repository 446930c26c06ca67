//! Genus-2 Riemann theta function
//! `theta(z) = sum_n exp(pi i <Omega n, n> + 2 pi i <n, z>)`
//! with derivatives, lattice reduction, the four real tori and divisor
//! root-finding.

use std::io::Write;

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::curve::{JacobianPoint, Lattice};
use crate::series::Jet;
use crate::{mat_vec, CMat2, CVec2, Error, Result, C64, I, PI, TAU};

/// Largest admissible truncation radius (in `sqrt(pi)`-scaled units).
pub const MAX_RADIUS: f64 = 60.0;
const DIVISOR_THRESHOLD: f64 = 1e-12;

/// Multi-index `(k1, k2)` of a partial derivative, total order at most 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivIndex(usize, usize);

impl DerivIndex {
    pub const VALUE: DerivIndex = DerivIndex(0, 0);

    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        if k1 + k2 > 3 {
            return Err(Error::DerivOrder(k1, k2));
        }
        Ok(DerivIndex(k1, k2))
    }

    pub fn k1(self) -> usize {
        self.0
    }

    pub fn k2(self) -> usize {
        self.1
    }

    pub fn order(self) -> usize {
        self.0 + self.1
    }
}

/// Theta Taylor jet with an absolute error bound on every coefficient
/// (scaled by the coefficient's factorials).
#[derive(Debug, Clone)]
pub struct ThetaJet {
    pub jet: Jet,
    pub err: f64,
}

#[derive(Debug, Clone)]
pub struct ThetaContext {
    omega: CMat2,
    lattice: Lattice,
    tol: f64,
    /// `Im Omega`.
    imag: Matrix2<f64>,
    /// Shortest nonzero lattice vector in the norm `sqrt(pi <Y k, k>)`.
    shortest: f64,
    lambda_min: f64,
}

/// One of the four real tori `T_1..T_4` at parameter `(t1, t2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusSpec {
    pub index: u8,
    pub t: [f64; 2],
}

impl TorusSpec {
    pub fn shift(&self) -> [f64; 2] {
        match self.index {
            1 => [0.0, 0.0],
            2 => [0.5, 0.0],
            3 => [0.0, 0.5],
            _ => [0.5, 0.5],
        }
    }
}

fn neumaier(acc: &mut (C64, C64), x: C64) {
    let (s, c) = acc;
    let t = *s + x;
    let comp = |s: f64, x: f64, t: f64| {
        if s.abs() >= x.abs() {
            (s - t) + x
        } else {
            (x - t) + s
        }
    };
    c.re += comp(s.re, x.re, t.re);
    c.im += comp(s.im, x.im, t.im);
    *s = t;
}

impl ThetaContext {
    pub fn new(omega: CMat2, tol: f64) -> Result<Self> {
        let asym = (omega[(0, 1)] - omega[(1, 0)]).norm();
        if asym > 1e-8 * (1.0 + omega.norm()) {
            return Err(Error::Config(format!("period matrix not symmetric (|Omega12 - Omega21| = {asym:e})")));
        }
        let imag = omega.map(|c| c.im);
        let imag = (imag + imag.transpose()) * 0.5;
        let eig = imag.symmetric_eigenvalues();
        let lambda_min = eig.min();
        if lambda_min <= 0.0 {
            return Err(Error::Config("imaginary part of the period matrix is not positive definite".into()));
        }
        // shortest vector by enumeration over a box large enough for 2x2
        let bound = ((eig.max() / lambda_min).sqrt().ceil() as i64 + 2).min(50);
        let mut shortest = f64::INFINITY;
        for k1 in -bound..=bound {
            for k2 in -bound..=bound {
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let (a, b) = (k1 as f64, k2 as f64);
                let q = imag[(0, 0)] * a * a + 2.0 * imag[(0, 1)] * a * b + imag[(1, 1)] * b * b;
                shortest = shortest.min((PI * q).sqrt());
            }
        }
        Ok(ThetaContext {
            omega,
            lattice: Lattice::new(omega),
            tol,
            imag,
            shortest,
            lambda_min,
        })
    }

    pub fn omega(&self) -> CMat2 {
        self.omega
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Fundamental-domain representative and the exact factor with
    /// `theta(z_raw) = prefactor * theta(z0.z)`.
    pub fn lattice_reduce(&self, z_raw: CVec2) -> (JacobianPoint, C64) {
        let p = self.lattice.reduce(z_raw);
        (p, self.prefactor(p.m, p.z))
    }

    fn prefactor(&self, m: [i64; 2], z0: CVec2) -> C64 {
        let mf = [C64::new(m[0] as f64, 0.0), C64::new(m[1] as f64, 0.0)];
        let om = mat_vec(&self.omega, mf);
        let quad = om[0] * mf[0] + om[1] * mf[1];
        let lin = mf[0] * z0[0] + mf[1] * z0[1];
        (-I * PI * quad - I * TAU * lin).exp()
    }

    fn tail(&self, radius: f64, order: usize, shift: f64) -> f64 {
        let r = (radius - 0.5 * self.shortest).max(1.0);
        let euclid = r / (PI * self.lambda_min).sqrt() + shift + 1.0;
        let poly = (TAU * euclid).powi(order as i32);
        4.0 / (self.shortest * self.shortest) * (1.0 + r * r) * (-r * r).exp() * poly
    }

    fn radius_for(&self, order: usize, shift: f64) -> Result<f64> {
        let mut r = (1.0f64).max((1.0 / self.tol).ln().sqrt());
        while self.tail(r, order, shift) > self.tol {
            r += 0.25;
            if r > MAX_RADIUS {
                return Err(Error::ThetaRadius {
                    radius: r,
                    bound: self.tail(MAX_RADIUS, order, shift),
                });
            }
        }
        Ok(r)
    }

    /// Taylor jet of `theta` of the given order at `z`, with error bound.
    pub fn jet(&self, z: CVec2, order: usize) -> Result<ThetaJet> {
        self.jet_with_radius(z, order, None)
    }

    /// As [`ThetaContext::jet`] but with a forced truncation radius.
    pub fn jet_with_radius(&self, z: CVec2, order: usize, radius: Option<f64>) -> Result<ThetaJet> {
        for c in z {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::Config(format!("non-finite theta argument {c}")));
            }
        }
        // centered representative keeps the summation ellipsoid near the origin
        let p = self.lattice.reduce_centered(z);
        let (a0, _) = self.lattice.real_coordinates(p.z);
        let mnorm = ((p.m[0] * p.m[0] + p.m[1] * p.m[1]) as f64).sqrt();
        let shift = (a0[0] * a0[0] + a0[1] * a0[1]).sqrt() + mnorm;
        let radius = match radius {
            Some(r) => r,
            None => self.radius_for(order, shift)?,
        };
        let prefactor = self.prefactor(p.m, p.z);
        let y = &self.imag;
        // Euclidean box containing the ellipsoid pi <Y(k + a0), k + a0> <= R^2
        let yinv = y.try_inverse().expect("positive definite");
        let r2 = radius * radius / PI;
        let h0 = (r2 * yinv[(0, 0)]).sqrt();
        let h1 = (r2 * yinv[(1, 1)]).sqrt();
        let mut jet = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); (order + 1) * (order + 2) / 2];
        let mut abs_sum = 0.0;
        let mut count = 0usize;
        let fact: Vec<f64> = (0..=order)
            .scan(1.0, |f, k| {
                if k > 0 {
                    *f *= k as f64;
                }
                Some(*f)
            })
            .collect();
        for k1 in ((-a0[0] - h0).floor() as i64)..=((-a0[0] + h0).ceil() as i64) {
            for k2 in ((-a0[1] - h1).floor() as i64)..=((-a0[1] + h1).ceil() as i64) {
                let x = [k1 as f64 + a0[0], k2 as f64 + a0[1]];
                let q = y[(0, 0)] * x[0] * x[0] + 2.0 * y[(0, 1)] * x[0] * x[1] + y[(1, 1)] * x[1] * x[1];
                if PI * q > radius * radius {
                    continue;
                }
                count += 1;
                let kc = [C64::new(k1 as f64, 0.0), C64::new(k2 as f64, 0.0)];
                let ok = mat_vec(&self.omega, kc);
                let expo = I * PI * (ok[0] * kc[0] + ok[1] * kc[1]) + I * TAU * (kc[0] * p.z[0] + kc[1] * p.z[1]);
                let e = expo.exp();
                let f1 = I * TAU * ((k1 - p.m[0]) as f64);
                let f2 = I * TAU * ((k2 - p.m[1]) as f64);
                let mut idx = 0;
                let mut term_max: f64 = 0.0;
                for n in 0..=order {
                    for b in 0..=n {
                        let a = n - b;
                        let t = e * f1.powu(a as u32) * f2.powu(b as u32) / (fact[a] * fact[b]);
                        term_max = term_max.max(t.norm());
                        neumaier(&mut jet[idx], t);
                        idx += 1;
                    }
                }
                abs_sum += term_max;
            }
        }
        let scale = prefactor.norm();
        let a_quad = y[(0, 0)] * a0[0] * a0[0] + 2.0 * y[(0, 1)] * a0[0] * a0[1] + y[(1, 1)] * a0[1] * a0[1];
        let tail = self.tail(radius, order, shift) * (PI * a_quad).exp() * scale;
        let roundoff = (8.0 + (count as f64).sqrt()) * f64::EPSILON * abs_sum * scale;
        let mut out = Jet::zero(order);
        let mut idx = 0;
        for n in 0..=order {
            for b in 0..=n {
                let (s, c) = jet[idx];
                out.set(n - b, b, (s + c) * prefactor);
                idx += 1;
            }
        }
        Ok(ThetaJet {
            jet: out,
            err: tail + roundoff,
        })
    }

    /// `d^k theta(z)` with an error bound.
    pub fn eval(&self, z: CVec2, d: DerivIndex) -> Result<(C64, f64)> {
        let tj = self.jet(z, d.order())?;
        let fact: f64 = (1..=d.0).chain(1..=d.1).map(|k| k as f64).product();
        Ok((tj.jet.partial(d.0, d.1), tj.err * fact))
    }

    pub fn theta(&self, z: CVec2) -> Result<C64> {
        Ok(self.eval(z, DerivIndex::VALUE)?.0)
    }

    /// Partial derivative of any order from the Taylor jet.
    pub fn partial(&self, z: CVec2, i: usize, j: usize) -> Result<C64> {
        Ok(self.jet(z, i + j)?.jet.partial(i, j))
    }

    /// Taylor jet of `log theta` at `z`.
    pub fn log_jet(&self, z: CVec2, order: usize) -> Result<Jet> {
        let tj = self.jet(z, order)?;
        let p = self.lattice.reduce_centered(z);
        let reduced = tj.jet.value() / self.prefactor(p.m, p.z);
        if reduced.norm() < DIVISOR_THRESHOLD {
            return Err(Error::DivisorProximity(reduced.norm()));
        }
        Ok(tj.jet.ln())
    }

    /// `d^k log theta(z)`; fails near the theta divisor.
    pub fn log_deriv(&self, z: CVec2, d: DerivIndex) -> Result<C64> {
        Ok(self.log_jet(z, d.order())?.partial(d.0, d.1))
    }

    /// Reduced point of the torus `T_j` at `spec.t`.
    pub fn torus_point(&self, spec: TorusSpec) -> JacobianPoint {
        let s = spec.shift();
        let z = [C64::new(s[0], spec.t[0]), C64::new(s[1], spec.t[1])];
        self.lattice.reduce(z)
    }

    /// Imaginary parameters `t = Y s` of the grid point `s` of the unit square.
    pub fn torus_grid_parameter(&self, s: [f64; 2]) -> [f64; 2] {
        let y = &self.imag;
        [
            y[(0, 0)] * s[0] + y[(0, 1)] * s[1],
            y[(1, 0)] * s[0] + y[(1, 1)] * s[1],
        ]
    }

    /// Theta on an `n x n` grid of the torus `T_index`; rows are computed in
    /// parallel and gathered in order.
    pub fn torus_grid(&self, index: u8, n: usize) -> Result<Vec<([f64; 2], C64)>> {
        let rows: Vec<Result<Vec<([f64; 2], C64)>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let s = [i as f64 / n as f64, j as f64 / n as f64];
                        let t = self.torus_grid_parameter(s);
                        let p = self.torus_point(TorusSpec { index, t });
                        Ok((t, self.theta(crate::vadd(p.z, self.lattice.point(p.m, p.n)))?))
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(n * n);
        for r in rows {
            out.extend(r?);
        }
        Ok(out)
    }

    /// Writes a torus grid as CSV with columns `t1, t2, re, im`.
    pub fn write_grid_csv<W: Write>(&self, index: u8, n: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t1", "t2", "re", "im"])?;
        for (t, v) in self.torus_grid(index, n)? {
            w.serialize((t[0], t[1], v.re, v.im))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Root of `t -> theta(path(t))` in `[lo, hi]`.
    ///
    /// A sign change of the real restriction is refined by bisection;
    /// otherwise the smallest sampled `|theta|` seeds a Gauss-Newton
    /// iteration in real `t`. Both stop after 60 iterations.
    pub fn divisor_solve<P>(&self, path: P, lo: f64, hi: f64) -> Result<f64>
    where
        P: Fn(f64) -> CVec2,
    {
        const SAMPLES: usize = 64;
        const ITER: usize = 60;
        let g = |t: f64| self.theta(path(t));
        let ts: Vec<f64> = (0..=SAMPLES)
            .map(|k| lo + (hi - lo) * k as f64 / SAMPLES as f64)
            .collect();
        let vals: Vec<C64> = ts.iter().map(|&t| g(t)).collect::<Result<_>>()?;
        let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let accept = 1e-10 * scale.max(1.0);
        let real = vals.iter().all(|v| v.im.abs() <= 1e-10 * scale);
        if real {
            for k in 0..SAMPLES {
                let (fa, fb) = (vals[k].re, vals[k + 1].re);
                if fa == 0.0 {
                    return Ok(ts[k]);
                }
                if fa * fb < 0.0 {
                    let (mut a, mut b, mut fa) = (ts[k], ts[k + 1], fa);
                    for _ in 0..ITER {
                        let m = 0.5 * (a + b);
                        let fm = g(m)?.re;
                        if fm == 0.0 || (b - a) < 1e-15 * (1.0 + m.abs()) {
                            return Ok(m);
                        }
                        if fa * fm < 0.0 {
                            b = m;
                        } else {
                            a = m;
                            fa = fm;
                        }
                    }
                    let m = 0.5 * (a + b);
                    let r = g(m)?.norm();
                    return if r < accept { Ok(m) } else { Err(Error::NoRoot(r)) };
                }
            }
        }
        let (kbest, _) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("samples");
        let mut t = ts[kbest];
        let h = 1e-5 * (hi - lo);
        let mut best = vals[kbest].norm();
        for _ in 0..ITER {
            let v = g(t)?;
            best = best.min(v.norm());
            if v.norm() < 1e-14 * scale {
                break;
            }
            let dz = {
                let a = path(t + h);
                let b = path(t - h);
                [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
            };
            let jet = self.jet(path(t), 1)?.jet;
            let dg = jet.partial(1, 0) * dz[0] + jet.partial(0, 1) * dz[1];
            if dg.norm() == 0.0 {
                break;
            }
            let step = (v.conj() * dg).re / dg.norm_sqr();
            t = (t - step).clamp(lo, hi);
            if step.abs() < 1e-16 * (1.0 + t.abs()) {
                break;
            }
        }
        let r = g(t)?.norm();
        best = best.min(r);
        if r < accept {
            Ok(t)
        } else {
            Err(Error::NoRoot(best))
        }
    }
}

/// Brute-force theta derivative over the box `|k_i| <= radius` with
/// compensated summation and no lattice reduction.
pub fn brute_force(omega: &CMat2, z: CVec2, d: DerivIndex, radius: i64) -> C64 {
    let mut acc = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for k1 in -radius..=radius {
        for k2 in -radius..=radius {
            let kc = [C64::new(k1 as f64, 0.0), C64::new(k2 as f64, 0.0)];
            let ok = mat_vec(omega, kc);
            let expo = I * PI * (ok[0] * kc[0] + ok[1] * kc[1]) + I * TAU * (kc[0] * z[0] + kc[1] * z[1]);
            let t = expo.exp() * (I * TAU * k1 as f64).powu(d.0 as u32) * (I * TAU * k2 as f64).powu(d.1 as u32);
            neumaier(&mut acc, t);
        }
    }
    acc.0 + acc.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn ctx() -> ThetaContext {
        let om = CMat2::new(c64(0.0, 1.2535200070792203), c64(0.0, 0.49766789975405807), c64(0.0, 0.49766789975405807), c64(0.0, 0.99533579950811615));
        ThetaContext::new(om, 1e-14).unwrap()
    }

    #[test]
    fn rejects_fourth_order_index() {
        assert!(matches!(DerivIndex::new(2, 2), Err(Error::DerivOrder(2, 2))));
        assert!(DerivIndex::new(1, 2).is_ok());
    }

    #[test]
    fn theta_at_origin_is_real_positive() {
        let t = ctx().theta([c64(0.0, 0.0); 2]).unwrap();
        assert!(t.re > 0.0 && t.im.abs() < 1e-12);
        let d1 = ctx().eval([c64(0.0, 0.0); 2], DerivIndex::new(1, 0).unwrap()).unwrap().0;
        assert!(d1.norm() < 1e-12);
    }

    #[test]
    fn matches_brute_force() {
        let c = ctx();
        let z = [c64(0.1, 0.2), c64(-0.3, 0.1)];
        for (i, j) in [(0, 0), (1, 0), (1, 1), (0, 3), (2, 1)] {
            let d = DerivIndex::new(i, j).unwrap();
            let (v, err) = c.eval(z, d).unwrap();
            let b = brute_force(&c.omega(), z, d, 40);
            assert!((v - b).norm() < 1e-12 * (1.0 + b.norm()), "{i}{j}: {v} vs {b}");
            assert!(err < 1e-11 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn log_deriv_near_divisor_errors() {
        let c = ctx();
        let half = [c64(0.5, 0.0) + c.omega()[(0, 0)] * 0.5, c64(0.5, 0.0) + c.omega()[(1, 0)] * 0.5];
        // odd half-period: theta vanishes identically there
        let r = c.log_deriv(half, DerivIndex::new(1, 0).unwrap());
        assert!(matches!(r, Err(Error::DivisorProximity(_))), "{r:?}");
    }
}
