//! Magnetic translations `T~_j f(x) = f(x + Omega_j) exp(2 pi i x_j)` and
//! their real-coordinate variant `T*_j phi(y) = phi(y + e_j) exp(2 pi y_j)`.

use crate::constants::Geometry;
use crate::{vadd, CMat2, CVec2, Result, C64, I, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticTranslation {
    /// 0 or 1.
    pub index: usize,
    /// Row `index` of `Omega`.
    pub shift: CVec2,
}

impl MagneticTranslation {
    pub fn new(omega: &CMat2, index: usize) -> Self {
        assert!(index < 2, "translation index {index}");
        MagneticTranslation {
            index,
            shift: [omega[(index, 0)], omega[(index, 1)]],
        }
    }

    pub fn both(omega: &CMat2) -> [MagneticTranslation; 2] {
        [MagneticTranslation::new(omega, 0), MagneticTranslation::new(omega, 1)]
    }

    pub fn twist(&self, x: CVec2) -> C64 {
        (I * TAU * x[self.index]).exp()
    }

    pub fn apply<F>(&self, f: F, x: CVec2) -> Result<C64>
    where
        F: Fn(CVec2) -> Result<C64>,
    {
        Ok(f(vadd(x, self.shift))? * self.twist(x))
    }
}

/// `T*_j` acting on functions of `y in R^2`; `e_j` is row `j` of `Im Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealMagneticTranslation {
    pub index: usize,
    pub e: [f64; 2],
}

impl RealMagneticTranslation {
    pub fn new(omega: &CMat2, index: usize) -> Self {
        assert!(index < 2, "translation index {index}");
        RealMagneticTranslation {
            index,
            e: [omega[(index, 0)].im, omega[(index, 1)].im],
        }
    }

    pub fn apply<F>(&self, f: F, y: [f64; 2]) -> Result<C64>
    where
        F: Fn([f64; 2]) -> Result<C64>,
    {
        let shifted = [y[0] + self.e[0], y[1] + self.e[1]];
        Ok(f(shifted)? * (TAU * y[self.index]).exp())
    }
}

/// `mu_j(z) = exp(-pi i Omega_jj - 2 pi i (z_j + c_j) - sum_k Omega_jk d_k log theta(z))`.
pub fn magnetic_multiplier(geo: &Geometry, c: CVec2, z: CVec2, index: usize) -> Result<C64> {
    let om = geo.periods.omega;
    let lj = geo.theta.log_jet(z, 1)?;
    let grad = [lj.partial(1, 0), lj.partial(0, 1)];
    let j = index;
    let expo = -I * PI * om[(j, j)] - I * TAU * (z[j] + c[j]) - om[(j, 0)] * grad[0] - om[(j, 1)] * grad[1];
    Ok(expo.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn translations_commute_on_a_test_function() {
        let om = CMat2::new(c64(0.0, 1.2), c64(0.0, 0.5), c64(0.0, 0.5), c64(0.0, 0.9));
        let [t1, t2] = MagneticTranslation::both(&om);
        let f = |x: CVec2| Ok((x[0] * 0.7 - x[1] * 0.2).sin() + x[1] * x[0]);
        let x = [c64(0.3, 0.1), c64(-0.2, 0.4)];
        let a = t1.apply(|y| t2.apply(f, y), x).unwrap();
        let b = t2.apply(|y| t1.apply(f, y), x).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }
}
