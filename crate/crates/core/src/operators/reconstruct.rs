//! Numeric reconstruction of the matrix operator `L(lambda)` from
//! `L(lambda) Phi = lambda Phi` sampled at many `z` for fixed `x`.
//!
//! Each row of `L` is an unknown vector of coefficients of `d^alpha psi_1`
//! and `d^alpha psi_2` for every multi-index of total degree up to the
//! profile order; it is the least-squares solution over sample points `z`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::constants::{sample_points, Geometry};
use crate::operators::baker::{BakerBasis, BakerPoint, Component};
use crate::operators::diffpoly::{CoefficientField, DiffPoly, LocalMatrix, LocalOp, MatrixOperator, MultiIndex};
use crate::series::Jet;
use crate::serial::complex;
use crate::{CVec2, Error, Result, C64};

/// A spectral function: a sum of products of partials of `log theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSpec {
    terms: Vec<(C64, Vec<MultiIndex>)>,
}

impl LambdaSpec {
    /// `d^alpha log theta`.
    pub fn log_partial(alpha: MultiIndex) -> Self {
        LambdaSpec {
            terms: vec![(C64::new(1.0, 0.0), vec![alpha])],
        }
    }

    /// `d_{z_i} d_{z_j} log theta` with `i, j` in `{1, 2}`.
    pub fn second(i: usize, j: usize) -> Self {
        LambdaSpec::log_partial(index_of(&[i, j]))
    }

    /// `d_{z_i} d_{z_j} d_{z_k} log theta`.
    pub fn third(i: usize, j: usize, k: usize) -> Self {
        LambdaSpec::log_partial(index_of(&[i, j, k]))
    }

    pub fn add(&self, other: &LambdaSpec) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        LambdaSpec { terms }
    }

    pub fn mul(&self, other: &LambdaSpec) -> Self {
        let mut terms = Vec::new();
        for (a, fa) in &self.terms {
            for (b, fb) in &other.terms {
                let mut f = fa.clone();
                f.extend(fb.iter().copied());
                terms.push((a * b, f));
            }
        }
        LambdaSpec { terms }
    }

    /// Pole order on the theta divisor, which is the operator order.
    pub fn order(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, f)| f.iter().map(|(i, j)| i + j).sum::<usize>())
            .max()
            .unwrap_or(0)
    }

    fn max_factor_order(&self) -> usize {
        self.terms.iter().flat_map(|(_, f)| f.iter().map(|(i, j)| i + j)).max().unwrap_or(0)
    }

    pub fn eval(&self, geo: &Geometry, z: CVec2) -> Result<C64> {
        let lj = geo.theta.log_jet(z, self.max_factor_order())?;
        Ok(self
            .terms
            .iter()
            .map(|(s, f)| f.iter().fold(*s, |acc, &(i, j)| acc * lj.partial(i, j)))
            .sum())
    }
}

fn index_of(dirs: &[usize]) -> MultiIndex {
    dirs.iter().fold((0, 0), |(a, b), &d| if d == 1 { (a + 1, b) } else { (a, b + 1) })
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(s, fs)| {
                let fac: Vec<String> = fs.iter().map(|(i, j)| format!("D{i}{j}")).collect();
                if *s == C64::new(1.0, 0.0) {
                    fac.join("*")
                } else {
                    format!("({s})*{}", fac.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Parses the `Display` form without scalar factors, e.g. `D20`,
/// `D20 + D02` or `D20*D02`.
impl std::str::FromStr for LambdaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse spectral function {s:?}; expected e.g. D20, D20+D02, D20*D02"));
        let mut terms = Vec::new();
        for term in s.split('+') {
            let mut factors = Vec::new();
            for f in term.split('*') {
                let f = f.trim();
                let digits = f.strip_prefix('D').or_else(|| f.strip_prefix('d')).ok_or_else(bad)?;
                let d: Vec<usize> = digits.chars().map(|c| c.to_digit(10).map(|v| v as usize)).collect::<Option<_>>().ok_or_else(bad)?;
                match d.as_slice() {
                    [i, j] if (1..=3).contains(&(i + j)) => factors.push((*i, *j)),
                    _ => return Err(bad()),
                }
            }
            terms.push((C64::new(1.0, 0.0), factors));
        }
        Ok(LambdaSpec { terms })
    }
}

/// Full set of multi-indices up to `order`, graded by total degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderProfile {
    pub order: usize,
}

impl OrderProfile {
    pub fn full(order: usize) -> Self {
        OrderProfile { order }
    }

    pub fn keys(&self) -> Vec<MultiIndex> {
        (0..=self.order)
            .flat_map(|n| (0..=n).rev().map(move |i| (i, n - i)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOpts {
    pub seed: u64,
    pub sigma: f64,
    /// Fit samples per unknown.
    pub oversample: f64,
    /// Fraction of samples kept out of the fit.
    pub holdout: f64,
    /// Samples with `|theta(z)|` below this quantile are dropped.
    pub reject_quantile: f64,
    pub max_condition: f64,
    pub max_residual: f64,
}

impl Default for SamplerOpts {
    fn default() -> Self {
        SamplerOpts {
            seed: 42,
            sigma: 0.35,
            oversample: 3.0,
            holdout: 0.2,
            reject_quantile: 0.1,
            max_condition: 1e10,
            max_residual: 1e-7,
        }
    }
}

/// Reconstructed coefficients at one `x`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub x: CVec2,
    pub keys: Vec<MultiIndex>,
    /// `entries[row][col][alpha]`.
    pub entries: [[BTreeMap<MultiIndex, C64>; 2]; 2],
    pub condition: [f64; 2],
    pub heldout_residual: [f64; 2],
    pub fit_samples: usize,
    pub heldout_samples: usize,
}

impl Reconstruction {
    pub fn coefficient(&self, row: usize, col: usize, alpha: MultiIndex) -> C64 {
        self.entries[row][col].get(&alpha).copied().unwrap_or_default()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .flat_map(|m| m.values())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Largest order carrying a coefficient above `tol` (relative to the row scale).
    pub fn effective_order(&self, row: usize, col: usize, tol: f64) -> usize {
        let scale = self.entries[row]
            .iter()
            .flat_map(|m| m.values())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        self.entries[row][col]
            .iter()
            .filter(|(_, c)| c.norm() > tol * scale)
            .map(|((i, j), _)| i + j)
            .max()
            .unwrap_or(0)
    }

    pub fn to_local(&self) -> LocalMatrix {
        let op = |r: usize, c: usize| {
            LocalOp::from_terms(self.entries[r][c].iter().map(|(k, v)| (*k, Jet::constant(0, *v))).collect())
        };
        LocalMatrix {
            entries: [[op(0, 0), op(0, 1)], [op(1, 0), op(1, 1)]],
        }
    }

    pub fn to_json(&self) -> Value {
        let entry = |r: usize, c: usize| {
            let m: serde_json::Map<String, Value> = self.entries[r][c]
                .iter()
                .map(|((i, j), v)| (format!("{i},{j}"), complex(*v)))
                .collect();
            Value::Object(m)
        };
        json!({
            "x": crate::serial::vec2(self.x),
            "entries": [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]],
            "condition": self.condition,
            "heldout_residual": self.heldout_residual,
            "fit_samples": self.fit_samples,
            "heldout_samples": self.heldout_samples,
        })
    }
}

struct Sample {
    point: BakerPoint,
    lambda: C64,
}

type CacheKey = [u64; 4];

fn cache_key(x: CVec2) -> CacheKey {
    [x[0].re.to_bits(), x[0].im.to_bits(), x[1].re.to_bits(), x[1].im.to_bits()]
}

/// Fixed samples for one basis and spectral function; reconstructs at any `x`.
pub struct Reconstructor {
    basis: BakerBasis,
    lambda: LambdaSpec,
    profile: OrderProfile,
    opts: SamplerOpts,
    samples: Vec<Sample>,
    n_fit: usize,
    cache: Mutex<HashMap<CacheKey, Arc<Reconstruction>>>,
}

impl fmt::Debug for Reconstructor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reconstructor")
            .field("lambda", &self.lambda.to_string())
            .field("profile", &self.profile)
            .field("samples", &self.samples.len())
            .finish()
    }
}

impl Reconstructor {
    pub fn new(basis: BakerBasis, lambda: LambdaSpec, profile: OrderProfile, opts: SamplerOpts) -> Result<Self> {
        let unknowns = 2 * profile.keys().len();
        let n_fit = (opts.oversample * unknowns as f64).ceil() as usize;
        let n_total = (n_fit as f64 / (1.0 - opts.holdout)).ceil() as usize;
        let pool_size = (n_total as f64 / (1.0 - opts.reject_quantile)).ceil() as usize + 2;
        let geo = basis.geometry().clone();
        let pool = sample_points(opts.seed, pool_size, opts.sigma);
        let mags: Vec<f64> = pool
            .iter()
            .map(|z| geo.theta.theta(*z).map(|t| t.norm()))
            .collect::<Result<_>>()?;
        let mut sorted = mags.clone();
        sorted.sort_by(f64::total_cmp);
        let threshold = sorted[((sorted.len() as f64) * opts.reject_quantile).floor() as usize];
        let mut samples = Vec::with_capacity(n_total);
        for (z, m) in pool.iter().zip(&mags) {
            if samples.len() == n_total {
                break;
            }
            if *m < threshold {
                continue;
            }
            let point = basis.at(*z)?;
            let lambda_z = lambda.eval(&geo, *z)?;
            samples.push(Sample { point, lambda: lambda_z });
        }
        if samples.len() < n_total {
            return Err(Error::Config(format!("sampler produced {} of {n_total} points", samples.len())));
        }
        Ok(Reconstructor {
            basis,
            lambda,
            profile,
            opts,
            samples,
            n_fit,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn basis(&self) -> &BakerBasis {
        &self.basis
    }

    pub fn lambda(&self) -> &LambdaSpec {
        &self.lambda
    }

    pub fn profile(&self) -> OrderProfile {
        self.profile
    }

    /// Sample points `z` used by the fit followed by the held-out ones.
    pub fn sample_z(&self) -> Vec<CVec2> {
        self.samples.iter().map(|s| s.point.z()).collect()
    }

    pub fn reconstruct(&self, x: CVec2) -> Result<Arc<Reconstruction>> {
        let key = cache_key(x);
        if let Some(r) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(self.solve(x)?);
        self.cache.lock().expect("cache lock").insert(key, Arc::clone(&r));
        Ok(r)
    }

    fn solve(&self, x: CVec2) -> Result<Reconstruction> {
        let keys = self.profile.keys();
        let nk = keys.len();
        let order = self.profile.order;
        // per sample: both basis jets at x
        let jets: Vec<[Jet; 2]> = self
            .samples
            .iter()
            .map(|s| Ok([s.point.jet(Component::First, x, order)?, s.point.jet(Component::Second, x, order)?]))
            .collect::<Result<_>>()?;
        let row_of = |jet: &[Jet; 2]| -> Vec<C64> {
            jet.iter().flat_map(|j| keys.iter().map(move |&(a, b)| j.partial(a, b))).collect()
        };
        let mut entries: [[BTreeMap<MultiIndex, C64>; 2]; 2] = Default::default();
        let mut condition = [0.0; 2];
        let mut heldout_residual = [0.0; 2];
        for row in 0..2 {
            let mut a = DMatrix::<C64>::zeros(self.samples.len(), 2 * nk);
            let mut y = DVector::<C64>::zeros(self.samples.len());
            for (s, (sample, jet)) in self.samples.iter().zip(&jets).enumerate() {
                let rhs = sample.lambda * jet[row].value();
                let scale = 1.0 / rhs.norm().max(f64::MIN_POSITIVE);
                for (col, v) in row_of(jet).into_iter().enumerate() {
                    a[(s, col)] = v * scale;
                }
                y[s] = rhs * scale;
            }
            let fit = a.rows(0, self.n_fit).into_owned();
            let cols: Vec<f64> = (0..fit.ncols()).map(|j| fit.column(j).norm().max(f64::MIN_POSITIVE)).collect();
            let mut scaled = fit.clone();
            for (j, cn) in cols.iter().enumerate() {
                scaled.column_mut(j).unscale_mut(*cn);
            }
            let svd = scaled.svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            let cond = smax / smin.max(f64::MIN_POSITIVE);
            condition[row] = cond;
            if !(cond <= self.opts.max_condition) {
                return Err(Error::RankDeficient(cond));
            }
            let sol_scaled = svd
                .solve(&y.rows(0, self.n_fit).into_owned(), 0.0)
                .map_err(|_| Error::RankDeficient(cond))?;
            let sol = DVector::from_iterator(sol_scaled.len(), sol_scaled.iter().zip(&cols).map(|(s, c)| s / *c));
            let nh = self.samples.len() - self.n_fit;
            let held = a.rows(self.n_fit, nh) * &sol - y.rows(self.n_fit, nh);
            let res = held.norm() / y.rows(self.n_fit, nh).norm();
            heldout_residual[row] = res;
            if !(res <= self.opts.max_residual) {
                return Err(Error::ReconstructionFailed(res));
            }
            for (col, entry) in entries[row].iter_mut().enumerate() {
                for (n, k) in keys.iter().enumerate() {
                    entry.insert(*k, sol[col * nk + n]);
                }
            }
        }
        Ok(Reconstruction {
            x,
            keys,
            entries,
            condition,
            heldout_residual,
            fit_samples: self.n_fit,
            heldout_samples: self.samples.len() - self.n_fit,
        })
    }

    /// The reconstructed operator as coefficient closures over `x`.
    pub fn matrix_operator(self: &Arc<Self>) -> MatrixOperator {
        let entry = |row: usize, col: usize| {
            DiffPoly::from_terms(self.profile.keys().into_iter().map(|alpha| {
                let me = Arc::clone(self);
                let name = format!("L{}{}[{},{}]", row + 1, col + 1, alpha.0, alpha.1);
                (alpha, CoefficientField::closure(&name, move |x| Ok(me.reconstruct(x)?.coefficient(row, col, alpha))))
            }))
        };
        MatrixOperator::new([[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_keys_are_graded() {
        assert_eq!(OrderProfile::full(2).keys(), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn lambda_orders() {
        assert_eq!(LambdaSpec::second(1, 2).order(), 2);
        assert_eq!(LambdaSpec::third(1, 1, 2).order(), 3);
        assert_eq!(LambdaSpec::second(1, 1).mul(&LambdaSpec::second(2, 2)).order(), 4);
        assert_eq!(LambdaSpec::third(2, 1, 2), LambdaSpec::log_partial((1, 2)));
    }

    #[test]
    fn lambda_parses_its_display_form() {
        let l = LambdaSpec::second(1, 1).mul(&LambdaSpec::second(2, 2)).add(&LambdaSpec::third(1, 1, 2));
        let back: LambdaSpec = l.to_string().parse().unwrap();
        assert_eq!(back, l);
        assert!("D40".parse::<LambdaSpec>().is_err());
        assert!("x11".parse::<LambdaSpec>().is_err());
    }
}
