//! The two reality regimes: the twisted basis with `c` on `T_1` (smooth real
//! coefficients on the imaginary-shifted slice) and the basis with real
//! `c, c'` (real periodic coefficients with a singularity at `x = -c`).
//! Both run through [`scan`]; only the basis and the check names differ.

use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use crate::cauchy::{self, CauchyOpts};
use crate::constants::sample_points;
use crate::operators::baker::Component;
use crate::operators::magnetic::{magnetic_multiplier, MagneticTranslation};
use crate::operators::reconstruct::{LambdaSpec, OrderProfile, Reconstruction, Reconstructor};
use crate::operators::BakerBasis;
use crate::series::Jet;
use crate::serial::{complex, vec2};
use crate::{c64, vadd, CVec2, Error, Result, C64, I, TAU};

use super::operators::sampler;
use super::special::{Slice, SliceSpec};
use super::{record, CheckResult, Measured, Suite};

/// `-Laplacian` plus lower-order terms: the operator of `D20 + D02`.
fn hamiltonian() -> LambdaSpec {
    LambdaSpec::second(1, 1).add(&LambdaSpec::second(2, 2))
}

fn reconstructor(s: &Suite, basis: BakerBasis) -> Result<Arc<Reconstructor>> {
    Ok(Arc::new(Reconstructor::new(basis, hamiltonian(), OrderProfile::full(2), sampler(s))?))
}

/// Reconstructions over a list of points, in order.
fn scan(r: &Reconstructor, points: &[CVec2]) -> Result<Vec<Arc<Reconstruction>>> {
    points.par_iter().map(|x| r.reconstruct(*x)).collect()
}

/// Largest `|Im|` over all coefficients after writing `d_x^alpha` as
/// `phase^|alpha| d^alpha` in the slice coordinates, relative to
/// `max(1, max |coefficient|)` at the point.
fn imag_residual(rec: &Reconstruction, phase: C64) -> f64 {
    let mut worst: f64 = 0.0;
    for row in &rec.entries {
        for entry in row {
            for (&(i, j), v) in entry {
                worst = worst.max((v * phase.powu((i + j) as u32)).im.abs());
            }
        }
    }
    worst / rec.max_abs().max(1.0)
}

fn local_diff(a: &Reconstruction, b: &Reconstruction) -> f64 {
    a.to_local().sub(&b.to_local()).max_abs_coefficient() / a.max_abs().max(b.max_abs()).max(1.0)
}

fn fail_all(s: &Suite, names: &[&str], e: Error) -> Vec<CheckResult> {
    let msg = e.to_string();
    names.iter().map(|n| record(&s.cfg, n, Err(Error::Config(msg.clone())))).collect()
}

const THEOREM2: [&str; 6] = [
    "theorem2_reality",
    "theorem2_smooth",
    "theorem2_jump",
    "theorem2_potential_periodicity",
    "theorem2_translation_commutation",
    "theorem2_multipliers",
];

pub(super) fn theorem2(s: &Suite) -> Vec<CheckResult> {
    let c = s.cfg.c;
    let cprime = s.cprime();
    let basis = match BakerBasis::section2_twisted(s.geo.clone(), c, cprime) {
        Ok(b) => b,
        Err(e) => return fail_all(s, &THEOREM2, e),
    };
    let r = match reconstructor(s, basis.clone()) {
        Ok(r) => r,
        Err(e) => return fail_all(s, &THEOREM2, e),
    };
    let om = s.geo.theta.omega();
    let cell = SliceSpec::magnetic_cell(&s.geo, s.cfg.grid);
    let fine = SliceSpec::magnetic_cell(&s.geo, 2 * s.cfg.grid);
    let cell_meta = json!({ "slice": cell.describe(), "axes": cell.axes, "grid": cell.grid, "c": vec2(c), "cprime": vec2(cprime) });
    let points: Vec<CVec2> = cell.points().into_iter().map(|(_, x)| x).collect();
    let coarse = scan(&r, &points);

    let reality = coarse.as_ref().map_err(copy_err).map(|recs| {
        // x = 1/2 + i y, so d_x = -i d_y
        let worst = recs.iter().map(|rec| imag_residual(rec, -I)).fold(0.0, f64::max);
        Measured::new(worst, recs.len(), cell_meta.clone())
    });

    let smooth = coarse.as_ref().map_err(copy_err).and_then(|recs| {
        let fine_points: Vec<CVec2> = fine.points().into_iter().map(|(_, x)| x).collect();
        let f = scan(&r, &fine_points)?;
        let m_coarse = recs.iter().map(|x| x.max_abs()).fold(0.0, f64::max);
        let m_fine = f.iter().map(|x| x.max_abs()).fold(0.0, f64::max);
        Ok(Measured::new(
            m_fine / m_coarse,
            recs.len() + f.len(),
            json!({ "max_coarse": m_coarse, "max_fine": m_fine, "grids": [cell.grid, fine.grid] }),
        ))
    });

    let probes: Vec<CVec2> = [[0.13, 0.21], [0.62, 0.35], [0.4, 0.8], [0.85, 0.55]]
        .iter()
        .map(|&u| cell.point(cell.parameter(u)))
        .collect();
    let shift = |x: CVec2, j: usize| vadd(x, [om[(j, 0)], om[(j, 1)]]);
    // A_k = (i/2) (coefficient of d_{x_k} in H_11)
    let potential = |rec: &Reconstruction| -> [C64; 2] {
        [I * 0.5 * rec.coefficient(0, 0, (1, 0)), I * 0.5 * rec.coefficient(0, 0, (0, 1))]
    };

    let jump = (|| {
        let mut worst: f64 = 0.0;
        let mut detail = Vec::new();
        for x in &probes {
            let ra = r.reconstruct(*x)?;
            let a = potential(&ra);
            for j in 0..2 {
                let rb = r.reconstruct(shift(*x, j))?;
                let b = potential(&rb);
                for k in 0..2 {
                    let want = if j == k { TAU } else { 0.0 };
                    let d = b[k] - a[k];
                    worst = worst.max((d - want).norm());
                    detail.push(json!({ "k": k + 1, "j": j + 1, "jump": complex(d) }));
                }
            }
        }
        Ok(Measured::new(worst, detail.len(), json!({ "normalization": "A_k = (i/2) [H_11]_{d_k}", "jumps": detail })))
    })();

    let u_at = |x: CVec2| -> Result<C64> {
        let rec = r.reconstruct(x)?;
        let a = potential(&rec);
        let opts = CauchyOpts {
            nodes: 16,
            ..CauchyOpts::default()
        };
        let mut div = C64::new(0.0, 0.0);
        for (k, alpha) in [(1, 0), (0, 1)].into_iter().enumerate() {
            let dir = if k == 0 { (1, 0) } else { (0, 1) };
            div += cauchy::partial(|y| Ok(I * 0.5 * r.reconstruct(y)?.coefficient(0, 0, alpha)), x, dir, &opts)?;
        }
        Ok(rec.coefficient(0, 0, (0, 0)) - a[0] * a[0] - a[1] * a[1] + I * div)
    };
    let periodicity = (|| {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for x in probes.iter().take(2) {
            let u0 = u_at(*x)?;
            for j in 0..2 {
                let u1 = u_at(shift(*x, j))?;
                worst = worst.max((u1 - u0).norm());
                n += 1;
            }
        }
        Ok(Measured::new(worst, n, json!({ "potential": "u = h - sum_k (A_k^2 - i d_k A_k)" })))
    })();

    let commutation = (|| {
        let opts = CauchyOpts::default();
        let tests: [fn(CVec2) -> C64; 5] = [
            |y| (y[0] * 0.7 - y[1] * 0.3).exp(),
            |y| y[0] * y[0] * y[1] + y[1] * 2.0,
            |y| (y[0] * 1.3 + y[1] * 0.4).sin(),
            |y| (y[0] * y[1] * 0.5).cos() + y[0],
            |y| (y[1] * c64(0.2, 0.4)).exp() * (y[0] + 1.0),
        ];
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for x in probes.iter().take(2) {
            let h_x = r.reconstruct(*x)?.to_local();
            for j in 0..2 {
                let t = MagneticTranslation::new(&om, j);
                let xs = shift(*x, j);
                let h_s = r.reconstruct(xs)?.to_local();
                for f in tests {
                    let jf: Jet = cauchy::jet(|y| Ok(f(y)), xs, 2, &opts)?;
                    let lhs = h_s.entries[0][0].apply(&jf) * t.twist(*x);
                    let jg: Jet = cauchy::jet(|y| t.apply(|w| Ok(f(w)), y), *x, 2, &opts)?;
                    let rhs = h_x.entries[0][0].apply(&jg);
                    let scale = lhs.norm().max(rhs.norm()).max(jf.max_abs());
                    worst = worst.max((lhs - rhs).norm() / scale);
                    n += 1;
                }
            }
        }
        Ok(Measured::new(worst, n, json!({ "operator": "H_11", "test_functions": 5 })))
    })();

    let multipliers = (|| {
        let xs = sample_points(s.cfg.seed.wrapping_add(21), 10, 0.2);
        let zs = sample_points(s.cfg.seed.wrapping_add(22), 10, 0.3);
        let mut worst: f64 = 0.0;
        for (x, z) in xs.iter().zip(&zs) {
            let p = basis.at(*z)?;
            for j in 0..2 {
                let t = MagneticTranslation::new(&om, j);
                let mu = magnetic_multiplier(&s.geo, c, *z, j)?;
                for which in Component::BOTH {
                    let lhs = t.apply(|y| p.eval(which, y), *x)?;
                    let rhs = mu * p.eval(which, *x)?;
                    worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
                }
            }
        }
        Ok(Measured::new(worst, 40, json!({ "pairs": 10, "components": 2 })))
    })();

    vec![
        record(&s.cfg, THEOREM2[0], reality),
        record(&s.cfg, THEOREM2[1], smooth),
        record(&s.cfg, THEOREM2[2], jump),
        record(&s.cfg, THEOREM2[3], periodicity),
        record(&s.cfg, THEOREM2[4], commutation),
        record(&s.cfg, THEOREM2[5], multipliers),
    ]
}

fn copy_err(e: &Error) -> Error {
    Error::Config(e.to_string())
}

const THEOREM1: [&str; 3] = ["theorem1_reality", "theorem1_periodicity", "theorem1_blowup"];

/// Distance on `R^2 / Z^2`.
fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = |u: f64, v: f64| {
        let t = (u - v).rem_euclid(1.0);
        t.min(1.0 - t)
    };
    d(a[0], b[0]).hypot(d(a[1], b[1]))
}

pub(super) fn theorem1(s: &Suite) -> Vec<CheckResult> {
    let c = s.cfg.theorem1_c;
    let cprime = s.cfg.theorem1_cprime;
    let r = match reconstructor(s, BakerBasis::section2(s.geo.clone(), c, cprime)) {
        Ok(r) => r,
        Err(e) => return fail_all(s, &THEOREM1, e),
    };
    let sing = [-c[0].re, -c[1].re];
    let cell = SliceSpec::window(Slice::RealX, s.cfg.grid, [0.0, 0.0], [1.0, 1.0]);
    const EXCLUSION: f64 = 0.15;
    let points: Vec<CVec2> = cell
        .points()
        .into_iter()
        .filter(|(p, _)| torus_distance(*p, sing) > EXCLUSION)
        .map(|(_, x)| x)
        .collect();

    let reality = scan(&r, &points).map(|recs| {
        let worst = recs.iter().map(|rec| imag_residual(rec, c64(1.0, 0.0))).fold(0.0, f64::max);
        Measured::new(
            worst,
            recs.len(),
            json!({ "slice": cell.describe(), "grid": cell.grid, "excluded_radius": EXCLUSION, "singular_point": sing }),
        )
    });

    let periodicity = (|| {
        let probes = [[0.31, 0.62], [0.7, 0.2], [0.55, 0.9], [0.2, 0.4]];
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for p in probes {
            let x = [c64(p[0], 0.0), c64(p[1], 0.0)];
            let a = r.reconstruct(x)?;
            for j in 0..2 {
                let mut y = x;
                y[j] += 1.0;
                let b = r.reconstruct(y)?;
                worst = worst.max(local_diff(&a, &b));
                n += 1;
            }
        }
        Ok(Measured::new(worst, n, json!({ "shifts": "x + e_j" })))
    })();

    let blowup = (|| {
        let half_widths = [0.1, 0.05, 0.025];
        let stencil = [(-1.0, -1.0), (-1.0, 0.0), (-1.0, 1.0), (0.0, -1.0), (0.0, 1.0), (1.0, -1.0), (1.0, 0.0), (1.0, 1.0), (0.25, 0.25)];
        let mut maxima = Vec::new();
        for h in half_widths {
            let pts: Vec<CVec2> = stencil
                .iter()
                .map(|(a, b)| [c64(sing[0] + h * a, 0.0), c64(sing[1] + h * b, 0.0)])
                .collect();
            let m = scan(&r, &pts)?.iter().map(|x| x.max_abs()).fold(0.0, f64::max);
            maxima.push(m);
        }
        let ratios: Vec<f64> = maxima.windows(2).map(|w| w[1] / w[0]).collect();
        let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Measured::new(
            worst,
            half_widths.len() * stencil.len(),
            json!({
                "half_widths": half_widths,
                "max_abs_coefficient": maxima,
                "growth_ratios": ratios,
                "analysis": "coefficients grow like |x + c|^-2 near the singular point, so each halving multiplies the maximum by about 4; a factor above 10 per halving would require a pole of order above 3",
            }),
        ))
    })();

    vec![
        record(&s.cfg, THEOREM1[0], reality),
        record(&s.cfg, THEOREM1[1], periodicity),
        record(&s.cfg, THEOREM1[2], blowup),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_distance_wraps() {
        assert!((torus_distance([0.95, 0.0], [0.05, 0.0]) - 0.1).abs() < 1e-12);
        assert!((torus_distance([-0.13, -0.29], [0.87, 0.71])).abs() < 1e-12);
    }
}
