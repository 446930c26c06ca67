//! Baker-Akhiezer basis functions of the module `M_c`.
//!
//! Three bases are supported: `(psi_1, psi_2)` built from `K`, the pair
//! `(psi, psi_{c'})`, and `(psi, psi~_{c'})` with the exponential twist that
//! makes both components eigenfunctions of the same magnetic translations.

use std::sync::Arc;

use crate::cauchy::{self, CauchyOpts};
use crate::constants::{ConstantsTable, Geometry};
use crate::series::Jet;
use crate::theta::DerivIndex;
use crate::{mat_vec, vadd, vsub, CVec2, Error, Result, C64, I, TAU};

/// Which basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::First, Component::Second];

    pub fn index(self) -> usize {
        match self {
            Component::First => 0,
            Component::Second => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// `(psi_1, psi_2)`; `beta0 = (b c1 + d) / 2`.
    Section3 { k: CVec2, beta0: C64 },
    /// `(psi, psi_{c'})`.
    Section2 { cprime: CVec2 },
    /// `(psi, psi~_{c'})`; `rate = 2 pi i Omega^{-1} c'`.
    Section2Twisted { cprime: CVec2, rate: CVec2 },
}

#[derive(Debug, Clone)]
pub struct BakerBasis {
    geo: Arc<Geometry>,
    c: CVec2,
    kind: BasisKind,
}

const POLE_FLOOR: f64 = 1e-12;

/// Twist centre `(1/2, 1/2)`.
const HALF: [f64; 2] = [0.5, 0.5];

impl BakerBasis {
    pub fn section3(geo: Arc<Geometry>, table: &ConstantsTable, c: CVec2) -> Self {
        BakerBasis {
            geo,
            c,
            kind: BasisKind::Section3 {
                k: table.k(),
                beta0: table.ops.beta0,
            },
        }
    }

    pub fn section2(geo: Arc<Geometry>, c: CVec2, cprime: CVec2) -> Self {
        BakerBasis {
            geo,
            c,
            kind: BasisKind::Section2 { cprime },
        }
    }

    pub fn section2_twisted(geo: Arc<Geometry>, c: CVec2, cprime: CVec2) -> Result<Self> {
        let inv = geo
            .periods
            .omega
            .try_inverse()
            .ok_or(Error::NearZero { what: "det Omega", value: 0.0 })?;
        let w = mat_vec(&inv, cprime);
        let rate = [w[0] * I * TAU, w[1] * I * TAU];
        Ok(BakerBasis {
            geo,
            c,
            kind: BasisKind::Section2Twisted { cprime, rate },
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn c(&self) -> CVec2 {
        self.c
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geo
    }

    /// Precomputes the `z`-dependent pieces.
    pub fn at(&self, z: CVec2) -> Result<BakerPoint> {
        let th = &self.geo.theta;
        let theta_z = th.theta(z)?;
        let (_, pref) = th.lattice_reduce(z);
        let reduced = (theta_z / pref).norm();
        if reduced < POLE_FLOOR {
            return Err(Error::PoleProximity(reduced));
        }
        let grad = th.log_jet(z, 1)?;
        let l = [grad.partial(1, 0), grad.partial(0, 1)];
        // z-only factors of the second component
        let second = match self.kind {
            BasisKind::Section3 { k, .. } => th.theta(vadd(z, [k[0] * 2.0, k[1] * 2.0]))? / (theta_z * theta_z),
            BasisKind::Section2 { cprime } | BasisKind::Section2Twisted { cprime, .. } => {
                th.theta(vsub(z, cprime))? / (theta_z * theta_z)
            }
        };
        Ok(BakerPoint {
            basis: self.clone(),
            z,
            theta_z,
            l,
            second,
        })
    }

    pub fn eval(&self, which: Component, z: CVec2, x: CVec2) -> Result<C64> {
        self.at(z)?.eval(which, x)
    }

    /// `d_x^d` of a basis function by Cauchy integrals around `x`.
    pub fn x_partial(&self, which: Component, z: CVec2, x: CVec2, d: DerivIndex, opts: &CauchyOpts) -> Result<C64> {
        let p = self.at(z)?;
        cauchy::partial(|y| p.eval(which, y), x, (d.k1(), d.k2()), opts)
    }
}

/// A basis evaluated at a fixed `z`.
#[derive(Debug, Clone)]
pub struct BakerPoint {
    basis: BakerBasis,
    z: CVec2,
    theta_z: C64,
    /// Gradient of `log theta` at `z`.
    l: CVec2,
    /// `theta(z + 2K) / theta(z)^2` or `theta(z - c') / theta(z)^2`.
    second: C64,
}

impl BakerPoint {
    pub fn z(&self) -> CVec2 {
        self.z
    }

    pub fn grad_log_theta(&self) -> CVec2 {
        self.l
    }

    /// `(numerator shift, denominator shift or None, z-only factor, exponent rates)`.
    fn parts(&self, which: Component) -> (CVec2, Option<CVec2>, C64, CVec2) {
        let b = &self.basis;
        let c = b.c;
        let z = self.z;
        let l = self.l;
        match (b.kind, which) {
            (BasisKind::Section3 { k, beta0 }, Component::First) => (
                vadd(z, c),
                Some(vsub(c, k)),
                C64::new(1.0, 0.0) / self.theta_z,
                [-(l[0] - beta0), -l[1]],
            ),
            (BasisKind::Section3 { k, beta0 }, Component::Second) => (
                vsub(vadd(z, c), [k[0] * 2.0, k[1] * 2.0]),
                Some(vsub(c, k)),
                self.second,
                [-(l[0] + beta0), -l[1]],
            ),
            (_, Component::First) => (vadd(z, c), None, C64::new(1.0, 0.0) / self.theta_z, [-l[0], -l[1]]),
            (BasisKind::Section2 { cprime }, Component::Second) => (vadd(vadd(z, c), cprime), None, self.second, [-l[0], -l[1]]),
            (BasisKind::Section2Twisted { cprime, rate }, Component::Second) => (
                vadd(vadd(z, c), cprime),
                None,
                self.second,
                [rate[0] - l[0], rate[1] - l[1]],
            ),
        }
    }

    fn twist_offset(&self, which: Component) -> C64 {
        match (self.basis.kind, which) {
            (BasisKind::Section2Twisted { rate, .. }, Component::Second) => -(rate[0] * HALF[0] + rate[1] * HALF[1]),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Direct evaluation from theta values.
    pub fn eval(&self, which: Component, x: CVec2) -> Result<C64> {
        let th = &self.basis.geo.theta;
        let (num, den, factor, rate) = self.parts(which);
        let mut v = th.theta(vadd(num, x))? * factor;
        if let Some(den) = den {
            let t = th.theta(vadd(den, x))?;
            let (_, pref) = th.lattice_reduce(vadd(den, x));
            if (t / pref).norm() < POLE_FLOOR {
                return Err(Error::PoleProximity((t / pref).norm()));
            }
            v /= t;
        }
        let expo = rate[0] * x[0] + rate[1] * x[1] + self.twist_offset(which);
        Ok(v * expo.exp())
    }

    /// Exact Taylor jet in `x` from theta log-jets.
    pub fn jet(&self, which: Component, x: CVec2, order: usize) -> Result<Jet> {
        let th = &self.basis.geo.theta;
        let (num, den, factor, rate) = self.parts(which);
        let mut log = th.log_jet(vadd(num, x), order)?;
        if let Some(den) = den {
            log = &log - &th.log_jet(vadd(den, x), order).map_err(|e| match e {
                Error::DivisorProximity(v) => Error::PoleProximity(v),
                other => other,
            })?;
        }
        let lin = &Jet::coordinate(order, 0, x[0]).scale(rate[0]) + &Jet::coordinate(order, 1, x[1]).scale(rate[1]);
        let log = &log + &lin;
        Ok(log.exp().scale(factor * self.twist_offset(which).exp()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn geo() -> Arc<Geometry> {
        Arc::new(Geometry::from_branch([0.0, 1.0, 2.0, 3.0, 4.0]).unwrap())
    }

    #[test]
    fn psi_at_zero_x_is_theta_quotient() {
        let g = geo();
        let c = [c64(0.0, 0.13), c64(0.0, 0.29)];
        let basis = BakerBasis::section2(g.clone(), c, [c64(0.31, 0.0), c64(0.17, 0.0)]);
        let z = [c64(0.1, 0.2), c64(-0.3, 0.1)];
        let v = basis.eval(Component::First, z, [c64(0.0, 0.0); 2]).unwrap();
        let expect = g.theta.theta(vadd(z, c)).unwrap() / g.theta.theta(z).unwrap();
        assert!((v - expect).norm() < 1e-13 * expect.norm());
    }

    #[test]
    fn exact_jet_matches_direct_value_and_cauchy() {
        let g = geo();
        let table = ConstantsTable::compute(&g).unwrap();
        let basis = BakerBasis::section3(g, &table, [c64(0.0, 0.13), c64(0.0, 0.29)]);
        let z = [c64(0.2, 0.1), c64(0.05, -0.2)];
        let x = [c64(0.1, 0.05), c64(-0.07, 0.12)];
        let p = basis.at(z).unwrap();
        for which in Component::BOTH {
            let jet = p.jet(which, x, 3).unwrap();
            let val = p.eval(which, x).unwrap();
            assert!((jet.value() - val).norm() < 1e-12 * val.norm());
            let d = DerivIndex::new(2, 1).unwrap();
            let c = basis.x_partial(which, z, x, d, &CauchyOpts::default()).unwrap();
            assert!((jet.partial(2, 1) - c).norm() < 1e-8 * c.norm().max(1.0), "{which:?}");
        }
    }
}
