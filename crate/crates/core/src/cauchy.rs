//! Cauchy-integral differentiation of analytic functions of one and two
//! complex variables.
//!
//! Mixed partials in two variables come from one-dimensional contours along
//! a few fixed directions `u`: the Taylor coefficient of `t^m` of
//! `t -> f(x + t u)` is `sum_{i+j=m} c[i][j] u1^i u2^j`, and `m + 1`
//! directions determine the `m + 1` coefficients of total degree `m`.

use nalgebra::{DMatrix, DVector};

use crate::series::Jet;
use crate::{CVec2, Error, Result, C64, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyOpts {
    /// Contour radius per complex coordinate.
    pub radius: f64,
    /// Trapezoid nodes per contour.
    pub nodes: usize,
    /// Relative tolerance of the mean-value check that guards against a
    /// singularity inside the contour disc.
    pub mean_value_tol: f64,
    /// Absolute mismatch always accepted; keeps fields that vanish
    /// identically from tripping the relative check on rounding noise.
    pub mean_value_floor: f64,
}

impl Default for CauchyOpts {
    fn default() -> Self {
        CauchyOpts {
            radius: 0.05,
            nodes: 32,
            mean_value_tol: 1e-6,
            mean_value_floor: 1e-9,
        }
    }
}

const DIRECTIONS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (0.0, 1.0),
    (1.0, 1.0),
    (1.0, -1.0),
    (1.0, 2.0),
    (2.0, 1.0),
    (1.0, -2.0),
    (2.0, -1.0),
];

pub const MAX_ORDER: usize = DIRECTIONS.len() - 1;

/// Taylor coefficients `a_0..=a_order` of `t -> g(t)` at `t = 0` from a circle
/// of radius `r`. The samples are returned too so callers can run checks.
fn circle_coefficients<G>(g: G, order: usize, opts: &CauchyOpts) -> Result<(Vec<C64>, f64)>
where
    G: Fn(C64) -> Result<C64>,
{
    let m = opts.nodes;
    let r = opts.radius;
    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let phi = TAU * k as f64 / m as f64;
        samples.push(g(C64::from_polar(r, phi))?);
    }
    let scale = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let coeffs = (0..=order)
        .map(|n| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, s) in samples.iter().enumerate() {
                let phi = TAU * (k * n) as f64 / m as f64;
                acc += s * C64::from_polar(1.0, -phi);
            }
            acc / (m as f64 * r.powi(n as i32))
        })
        .collect();
    Ok((coeffs, scale))
}

fn check_mean_value(center: C64, mean: C64, scale: f64, opts: &CauchyOpts) -> Result<()> {
    let gap = (center - mean).norm();
    let mismatch = gap / scale.max(center.norm()).max(f64::MIN_POSITIVE);
    if mismatch > opts.mean_value_tol && gap > opts.mean_value_floor {
        Err(Error::ContourSingular(mismatch))
    } else {
        Ok(())
    }
}

/// Taylor coefficients of a function of one complex variable at `s0`.
pub fn taylor_1d<F>(f: F, s0: C64, order: usize, opts: &CauchyOpts) -> Result<Vec<C64>>
where
    F: Fn(C64) -> Result<C64>,
{
    let center = f(s0)?;
    let (coeffs, scale) = circle_coefficients(|t| f(s0 + t), order, opts)?;
    check_mean_value(center, coeffs[0], scale, opts)?;
    let mut out = coeffs;
    out[0] = center;
    Ok(out)
}

/// Taylor jet of order `order` of `f` at `x`, from `order + 1` directional
/// contours of `opts.nodes` nodes each.
pub fn jet<F>(f: F, x: CVec2, order: usize, opts: &CauchyOpts) -> Result<Jet>
where
    F: Fn(CVec2) -> Result<C64>,
{
    assert!(order <= MAX_ORDER, "Cauchy jet order {order} too high");
    let center = f(x)?;
    let mut jet = Jet::constant(order, center);
    if order == 0 {
        return Ok(jet);
    }
    let ndir = order + 1;
    let mut dir_coeffs = Vec::with_capacity(ndir);
    for &(u1, u2) in DIRECTIONS.iter().take(ndir) {
        let (c, scale) = circle_coefficients(
            |t| f([x[0] + t * u1, x[1] + t * u2]),
            order,
            opts,
        )?;
        check_mean_value(center, c[0], scale, opts)?;
        dir_coeffs.push(c);
    }
    for m in 1..=order {
        // rows: directions 0..=m, columns: (i, j) = (m - b, b)
        let a = DMatrix::from_fn(m + 1, m + 1, |d, b| {
            let (u1, u2) = DIRECTIONS[d];
            u1.powi((m - b) as i32) * u2.powi(b as i32)
        });
        let lu = a.lu();
        let re = DVector::from_fn(m + 1, |d, _| dir_coeffs[d][m].re);
        let im = DVector::from_fn(m + 1, |d, _| dir_coeffs[d][m].im);
        let sr = lu.solve(&re).expect("direction matrix is invertible");
        let si = lu.solve(&im).expect("direction matrix is invertible");
        for b in 0..=m {
            jet.set(m - b, b, C64::new(sr[b], si[b]));
        }
    }
    Ok(jet)
}

/// A single partial derivative `d1^i d2^j f(x)`.
pub fn partial<F>(f: F, x: CVec2, d: (usize, usize), opts: &CauchyOpts) -> Result<C64>
where
    F: Fn(CVec2) -> Result<C64>,
{
    let (i, j) = d;
    if i + j == 0 {
        return f(x);
    }
    if j == 0 || i == 0 {
        let dir = if j == 0 { 0 } else { 1 };
        let n = i + j;
        let center = f(x)?;
        let (c, scale) = circle_coefficients(
            |t| {
                let mut y = x;
                y[dir] += t;
                f(y)
            },
            n,
            opts,
        )?;
        check_mean_value(center, c[0], scale, opts)?;
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        return Ok(c[n] * fact);
    }
    Ok(jet(f, x, i + j, opts)?.partial(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn f(x: CVec2) -> Result<C64> {
        Ok((x[0] * c64(0.7, 0.1) + x[1] * x[0] * 0.3).exp() + x[1].sin())
    }

    #[test]
    fn jet_matches_closed_form() {
        let x = [c64(0.2, -0.1), c64(0.4, 0.3)];
        let j = jet(f, x, 3, &CauchyOpts::default()).unwrap();
        let a = c64(0.7, 0.1);
        let e = (x[0] * a + x[1] * x[0] * 0.3).exp();
        let d1 = e * (a + x[1] * 0.3);
        let d12 = e * (x[0] * 0.3) * (a + x[1] * 0.3) + e * 0.3;
        let d22 = e * (x[0] * 0.3).powu(2) - x[1].sin();
        assert!((j.partial(1, 0) - d1).norm() < 1e-12);
        assert!((j.partial(1, 1) - d12).norm() < 1e-11);
        assert!((j.partial(0, 2) - d22).norm() < 1e-11);
    }

    #[test]
    fn pole_inside_contour_is_reported() {
        let g = |x: CVec2| Ok(C64::new(1.0, 0.0) / (x[0] - c64(0.01, 0.0)));
        let r = jet(g, [c64(0.0, 0.0), c64(0.0, 0.0)], 1, &CauchyOpts::default());
        assert!(matches!(r, Err(Error::ContourSingular(_))));
    }

    #[test]
    fn one_dimensional_taylor() {
        let c = taylor_1d(|s| Ok(s.exp()), c64(0.3, 0.0), 4, &CauchyOpts::default()).unwrap();
        let e = 0.3f64.exp();
        assert!((c[4].re - e / 24.0).abs() < 1e-10);
    }
}
