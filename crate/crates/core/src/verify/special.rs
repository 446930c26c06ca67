//! Distinguished points of the Jacobian and slice grids in `x`.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::constants::Geometry;
use crate::serial::vec2;
use crate::{c64, CVec2, Error, Result, I, PI};

#[derive(Debug, Clone)]
pub struct SpecialPoints {
    /// `(Omega_12/2 + 1/2, Omega_22/2 + 1/2)`.
    pub p1: CVec2,
    /// `(Omega_11/2 + 1/2, Omega_21/2 + 1/2)`.
    pub p2: CVec2,
    /// A zero of theta on `T_4`, if the line search found one.
    pub p3: Option<CVec2>,
    /// The grid point of `T_4` with the largest `|theta|`.
    pub p4: CVec2,
    /// `(Omega_11/2 - Omega_21/2, Omega_12/2 - Omega_22/2)`.
    pub cprime: CVec2,
}

impl SpecialPoints {
    pub fn locate(geo: &Geometry) -> Self {
        let o = geo.theta.omega();
        let h = 0.5;
        let p1 = [o[(0, 1)] * h + h, o[(1, 1)] * h + h];
        let p2 = [o[(0, 0)] * h + h, o[(1, 0)] * h + h];
        let cprime = [o[(0, 0)] * h - o[(1, 0)] * h, o[(0, 1)] * h - o[(1, 1)] * h];
        let p3 = t4_zero(geo).ok().map(|(z, _)| z);
        let p4 = t4_peak(geo, 20);
        SpecialPoints { p1, p2, p3, p4, cprime }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "p1": vec2(self.p1),
            "p2": vec2(self.p2),
            "p3": self.p3.map(vec2),
            "p4": vec2(self.p4),
            "cprime": vec2(self.cprime),
        })
    }
}

/// Point `shift + i Y s` of a real torus for `s` in the unit square.
fn torus_z(geo: &Geometry, shift: [f64; 2], s: [f64; 2]) -> CVec2 {
    let t = geo.theta.torus_grid_parameter(s);
    [c64(shift[0], t[0]), c64(shift[1], t[1])]
}

/// Scans lines `s2 = const` of `T_4` for a sign change of the (real) theta
/// restriction and refines it. Returns the zero and `|theta|` there.
pub fn t4_zero(geo: &Geometry) -> Result<(CVec2, f64)> {
    const LINES: usize = 24;
    let mut best = f64::INFINITY;
    for k in 0..LINES {
        let s2 = (k as f64 + 0.5) / LINES as f64;
        let path = |s1: f64| torus_z(geo, [0.5, 0.5], [s1, s2]);
        match geo.theta.divisor_solve(path, 0.0, 1.0) {
            Ok(t) => {
                let z = path(t);
                return Ok((z, geo.theta.theta(z)?.norm()));
            }
            Err(Error::NoRoot(r)) => best = best.min(r),
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoRoot(best))
}

fn t4_peak(geo: &Geometry, n: usize) -> CVec2 {
    let mut best = (0.0, torus_z(geo, [0.5, 0.5], [0.0, 0.0]));
    for i in 0..n {
        for j in 0..n {
            let z = torus_z(geo, [0.5, 0.5], [i as f64 / n as f64, j as f64 / n as f64]);
            if let Ok(v) = geo.theta.theta(z) {
                if v.norm() > best.0 {
                    best = (v.norm(), z);
                }
            }
        }
    }
    best.1
}

/// Minimum of the invariant modulus `|theta(i t)| exp(-pi t Y^-1 t)` on
/// `T_1`, which is well defined on the torus: grid values, then Newton steps
/// on its logarithm from the smallest grid points.
#[derive(Debug, Clone)]
pub struct TorusMinimum {
    pub grid_min: f64,
    pub refined_min: f64,
    pub max: f64,
    pub at: [f64; 2],
}

pub fn t1_minimum(geo: &Geometry, n: usize, starts: usize) -> Result<TorusMinimum> {
    let th = &geo.theta;
    let yinv = th
        .omega()
        .map(|c| c.im)
        .try_inverse()
        .ok_or(Error::NearZero { what: "det Im Omega", value: 0.0 })?;
    let weight = |t: &Vector2<f64>| (-PI * t.dot(&(yinv * t))).exp();
    let modulus = |t: &Vector2<f64>| -> Result<f64> { Ok(th.theta([c64(0.0, t[0]), c64(0.0, t[1])])?.norm() * weight(t)) };
    let grid: Vec<(Vector2<f64>, f64)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let s = [(k / n) as f64 / n as f64, (k % n) as f64 / n as f64];
            let p = th.torus_grid_parameter(s);
            let t = Vector2::new(p[0], p[1]);
            Ok((t, modulus(&t)?))
        })
        .collect::<Result<_>>()?;
    let max = grid.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1));
    let grid_min = grid[order[0]].1;
    let mut best = (grid_min, grid[order[0]].0);
    for &k in order.iter().take(starts) {
        let (mut t, mut val) = grid[k];
        for _ in 0..30 {
            let j = th.jet([c64(0.0, t[0]), c64(0.0, t[1])], 2)?.jet;
            // log of the modulus: log theta(i t) - pi t Y^-1 t
            let v = j.value();
            let g1 = [I * j.partial(1, 0) / v, I * j.partial(0, 1) / v];
            let corr = yinv * t * (2.0 * PI);
            let grad = Vector2::new(g1[0].re - corr[0], g1[1].re - corr[1]);
            let h = |a: usize, b: usize| {
                let d = match (a, b) {
                    (0, 0) => j.partial(2, 0),
                    (1, 1) => j.partial(0, 2),
                    _ => j.partial(1, 1),
                };
                (-d / v + g1[a] * g1[b]).re - 2.0 * PI * yinv[(a, b)]
            };
            let hess = Matrix2::new(h(0, 0), h(0, 1), h(1, 0), h(1, 1));
            let step0 = match hess.try_inverse() {
                Some(inv) if (grad.dot(&(inv * grad))) > 0.0 => -(inv * grad),
                _ => -grad * 1e-2,
            };
            let mut step = step0;
            let mut accepted = false;
            for _ in 0..20 {
                let cand = t + step;
                let m = modulus(&cand)?;
                if m <= val {
                    t = cand;
                    val = m;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || step.norm() < 1e-13 {
                break;
            }
        }
        if val < best.0 {
            best = (val, t);
        }
    }
    Ok(TorusMinimum {
        grid_min,
        refined_min: best.0,
        max,
        at: [best.1[0], best.1[1]],
    })
}

/// The two slices on which coefficients are scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slice {
    /// `x` real.
    RealX,
    /// `x = (1/2, 1/2) + i y` with `y` real.
    ImaginaryShifted,
}

/// `p = origin + s1 axes[0] + s2 axes[1]` at cell centres `s = (k + 1/2) / grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub slice: Slice,
    pub grid: usize,
    pub origin: [f64; 2],
    pub axes: [[f64; 2]; 2],
}

impl SliceSpec {
    pub fn window(slice: Slice, grid: usize, lo: [f64; 2], hi: [f64; 2]) -> Self {
        SliceSpec {
            slice,
            grid,
            origin: lo,
            axes: [[hi[0] - lo[0], 0.0], [0.0, hi[1] - lo[1]]],
        }
    }

    /// The imaginary-shifted slice over one cell spanned by the rows of `Im Omega`.
    pub fn magnetic_cell(geo: &Geometry, grid: usize) -> Self {
        let o = geo.theta.omega();
        SliceSpec {
            slice: Slice::ImaginaryShifted,
            grid,
            origin: [0.0, 0.0],
            axes: [[o[(0, 0)].im, o[(0, 1)].im], [o[(1, 0)].im, o[(1, 1)].im]],
        }
    }

    pub fn parameter(&self, s: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + s[0] * self.axes[0][0] + s[1] * self.axes[1][0],
            self.origin[1] + s[0] * self.axes[0][1] + s[1] * self.axes[1][1],
        ]
    }

    pub fn point(&self, p: [f64; 2]) -> CVec2 {
        match self.slice {
            Slice::RealX => [c64(p[0], 0.0), c64(p[1], 0.0)],
            Slice::ImaginaryShifted => [c64(0.5, p[0]), c64(0.5, p[1])],
        }
    }

    /// Parameters and points, row-major in `s`.
    pub fn points(&self) -> Vec<([f64; 2], CVec2)> {
        let n = self.grid;
        (0..n * n)
            .map(|k| {
                let s = [((k / n) as f64 + 0.5) / n as f64, ((k % n) as f64 + 0.5) / n as f64];
                let p = self.parameter(s);
                (p, self.point(p))
            })
            .collect()
    }

    /// Column names of the two slice parameters.
    pub fn parameter_names(&self) -> [&'static str; 2] {
        match self.slice {
            Slice::RealX => ["x1", "x2"],
            Slice::ImaginaryShifted => ["y1", "y2"],
        }
    }

    pub fn describe(&self) -> String {
        match self.slice {
            Slice::RealX => "x = (x1, x2) real".to_string(),
            Slice::ImaginaryShifted => "x = (1/2 + i y1, 1/2 + i y2)".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_points_lie_on_the_slice() {
        let s = SliceSpec::window(Slice::ImaginaryShifted, 3, [-1.0, -1.0], [1.0, 1.0]);
        for (p, x) in s.points() {
            assert_eq!(x[0].re, 0.5);
            assert_eq!(x[1].re, 0.5);
            assert_eq!([x[0].im, x[1].im], p);
        }
        let r = SliceSpec::window(Slice::RealX, 4, [0.0, 0.0], [1.0, 1.0]);
        assert!(r.points().iter().all(|(_, x)| x[0].im == 0.0 && x[1].im == 0.0));
        assert_eq!(r.points().len(), 16);
    }
}
