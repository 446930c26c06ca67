//! Differential polynomials `sum_alpha a_alpha(x) d^alpha` in two variables
//! and 2x2 matrices of them.
//!
//! A [`DiffPoly`] is an expression tree over coefficient closures. It is
//! evaluated by localizing at a point `x`: each coefficient becomes a Taylor
//! jet and composition, commutators and division act on jets by the Leibniz
//! rule. Only leaf closures are ever differentiated (by Cauchy integrals).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::cauchy::{self, CauchyOpts};
use crate::series::Jet;
use crate::{CVec2, Error, Result, C64};

/// `(i, j)` stands for `d_{x1}^i d_{x2}^j`.
pub type MultiIndex = (usize, usize);

type ValueFn = dyn Fn(CVec2) -> Result<C64> + Send + Sync;
type JetFn = dyn Fn(CVec2, usize, &CauchyOpts) -> Result<Jet> + Send + Sync;

#[derive(Clone)]
enum FieldKind {
    Const(C64),
    Closure(Arc<ValueFn>),
    /// Coefficient of a composite operator; jets come from localization.
    Derived(Arc<JetFn>),
}

/// A named coefficient function of `x`.
#[derive(Clone)]
pub struct CoefficientField {
    name: Arc<str>,
    kind: FieldKind,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Const(c) => write!(f, "{}={c}", self.name),
            _ => write!(f, "{}(x)", self.name),
        }
    }
}

impl CoefficientField {
    pub fn constant(name: &str, c: C64) -> Self {
        CoefficientField {
            name: name.into(),
            kind: FieldKind::Const(c),
        }
    }

    pub fn closure<F>(name: &str, f: F) -> Self
    where
        F: Fn(CVec2) -> Result<C64> + Send + Sync + 'static,
    {
        CoefficientField {
            name: name.into(),
            kind: FieldKind::Closure(Arc::new(f)),
        }
    }

    fn derived(name: String, f: Arc<JetFn>) -> Self {
        CoefficientField {
            name: name.into(),
            kind: FieldKind::Derived(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.kind {
            FieldKind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, x: CVec2) -> Result<C64> {
        match &self.kind {
            FieldKind::Const(c) => Ok(*c),
            FieldKind::Closure(f) => f(x),
            FieldKind::Derived(f) => Ok(f(x, 0, &CauchyOpts::default())?.value()),
        }
    }

    /// Taylor jet at `x`; closures are differentiated by Cauchy integrals.
    pub fn jet(&self, x: CVec2, order: usize, opts: &CauchyOpts) -> Result<Jet> {
        match &self.kind {
            FieldKind::Const(c) => Ok(Jet::constant(order, *c)),
            FieldKind::Closure(f) => {
                if order > cauchy::MAX_ORDER {
                    return Err(Error::OrderOverflow {
                        order,
                        cap: cauchy::MAX_ORDER,
                    });
                }
                cauchy::jet(|y| f(y), x, order, opts)
            }
            FieldKind::Derived(f) => f(x, order, opts),
        }
    }

    /// `d^alpha` of the field at `x`.
    pub fn partial(&self, x: CVec2, alpha: MultiIndex, opts: &CauchyOpts) -> Result<C64> {
        Ok(self.jet(x, alpha.0 + alpha.1, opts)?.partial(alpha.0, alpha.1))
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// An operator localized at a point: coefficient jets per multi-index.
#[derive(Debug, Clone, Default)]
pub struct LocalOp {
    terms: BTreeMap<MultiIndex, Jet>,
}

impl LocalOp {
    pub fn zero() -> Self {
        LocalOp::default()
    }

    pub fn from_terms(terms: BTreeMap<MultiIndex, Jet>) -> Self {
        LocalOp { terms }
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Jet> {
        &self.terms
    }

    pub fn order(&self) -> usize {
        self.terms.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    /// Value of the coefficient of `d^alpha` (zero if absent).
    pub fn coefficient(&self, alpha: MultiIndex) -> C64 {
        self.terms.get(&alpha).map_or(C64::new(0.0, 0.0), Jet::value)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|j| j.value().norm()).fold(0.0, f64::max)
    }

    fn accumulate(&mut self, key: MultiIndex, jet: Jet) {
        match self.terms.get_mut(&key) {
            Some(cur) => *cur = &*cur + &jet,
            None => {
                self.terms.insert(key, jet);
            }
        }
    }

    pub fn add(&self, other: &LocalOp) -> LocalOp {
        let mut out = self.clone();
        for (k, j) in &other.terms {
            out.accumulate(*k, j.clone());
        }
        out
    }

    pub fn scale(&self, s: C64) -> LocalOp {
        LocalOp {
            terms: self.terms.iter().map(|(k, j)| (*k, j.scale(s))).collect(),
        }
    }

    pub fn sub(&self, other: &LocalOp) -> LocalOp {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn truncate(&self, order: usize) -> LocalOp {
        LocalOp {
            terms: self.terms.iter().map(|(k, j)| (*k, j.truncate(order))).collect(),
        }
    }

    /// `self o other` by the Leibniz rule
    /// `(a d^alpha)(b d^beta) = sum_{gamma <= alpha} C(alpha, gamma) a (d^gamma b) d^(alpha - gamma + beta)`.
    pub fn compose(&self, other: &LocalOp) -> LocalOp {
        let mut out = LocalOp::zero();
        for (&(a1, a2), a) in &self.terms {
            for (&(b1, b2), b) in &other.terms {
                for g1 in 0..=a1 {
                    for g2 in 0..=a2 {
                        let db = b.diff_multi(g1, g2);
                        let c = binom(a1, g1) * binom(a2, g2);
                        let coef = (a * &db).scale(C64::new(c, 0.0));
                        out.accumulate((a1 - g1 + b1, a2 - g2 + b2), coef);
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &LocalOp) -> LocalOp {
        self.compose(other).sub(&other.compose(self))
    }

    /// Right division `self = q o h + r` eliminating every term with
    /// `d_{x1}`-degree at least two, highest total degree first.
    pub fn right_divide(&self, h: &LocalOp) -> Result<(LocalOp, LocalOp)> {
        let lead = h.terms.get(&(2, 0)).ok_or(Error::LeadingVanishes)?;
        if lead.value().norm() < 1e-14 || h.order() != 2 {
            return Err(Error::LeadingVanishes);
        }
        let lead_inv = lead.recip();
        let mut rem = self.clone();
        let mut quot = LocalOp::zero();
        loop {
            let next = rem
                .terms
                .keys()
                .filter(|(i, _)| *i >= 2)
                .max_by_key(|(i, j)| (i + j, *i))
                .copied();
            let Some(key) = next else { break };
            let a = rem.terms.remove(&key).expect("present");
            let q = &a * &lead_inv;
            let qkey = (key.0 - 2, key.1);
            let step = LocalOp::from_terms([(qkey, q.clone())].into());
            let mut sub = step.compose(h);
            // the leading term cancels exactly by construction
            sub.terms.remove(&key);
            rem = rem.sub(&sub);
            quot.accumulate(qkey, q);
        }
        Ok((quot, rem))
    }

    /// `(L f)(x)` from a Taylor jet of `f` of order at least `self.order()`.
    pub fn apply(&self, f: &Jet) -> C64 {
        self.terms
            .iter()
            .map(|(&(i, j), a)| a.value() * f.partial(i, j))
            .sum()
    }
}

enum Node {
    Terms(BTreeMap<MultiIndex, CoefficientField>),
    Sum(Vec<(C64, DiffPoly)>),
    Compose(DiffPoly, DiffPoly),
    Quotient(DiffPoly, DiffPoly),
    Remainder(DiffPoly, DiffPoly),
}

/// A differential polynomial with coefficient closures.
#[derive(Clone)]
pub struct DiffPoly(Arc<Node>);

impl fmt::Debug for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Terms(t) => f.debug_map().entries(t.iter()).finish(),
            Node::Sum(v) => f.debug_list().entries(v.iter()).finish(),
            Node::Compose(a, b) => write!(f, "({a:?}) o ({b:?})"),
            Node::Quotient(a, b) => write!(f, "quot({a:?}, {b:?})"),
            Node::Remainder(a, b) => write!(f, "rem({a:?}, {b:?})"),
        }
    }
}

type Cache = HashMap<(usize, usize), LocalOp>;

fn structural_divide(a: &BTreeSet<MultiIndex>, h: &BTreeSet<MultiIndex>) -> (BTreeSet<MultiIndex>, BTreeSet<MultiIndex>) {
    let mut rem = a.clone();
    let mut quot = BTreeSet::new();
    loop {
        let next = rem
            .iter()
            .filter(|(i, _)| *i >= 2)
            .max_by_key(|(i, j)| (i + j, *i))
            .copied();
        let Some(key) = next else { break };
        rem.remove(&key);
        let q = (key.0 - 2, key.1);
        quot.insert(q);
        for k in compose_keys(&[q].into(), h) {
            if k != key {
                rem.insert(k);
            }
        }
    }
    (quot, rem)
}

fn compose_keys(a: &BTreeSet<MultiIndex>, b: &BTreeSet<MultiIndex>) -> BTreeSet<MultiIndex> {
    let mut out = BTreeSet::new();
    for &(a1, a2) in a {
        for &(b1, b2) in b {
            for g1 in 0..=a1 {
                for g2 in 0..=a2 {
                    out.insert((a1 - g1 + b1, a2 - g2 + b2));
                }
            }
        }
    }
    out
}

impl DiffPoly {
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, CoefficientField)>,
    {
        DiffPoly(Arc::new(Node::Terms(terms.into_iter().collect())))
    }

    pub fn zero() -> Self {
        DiffPoly::from_terms([])
    }

    /// Multiplication by a field.
    pub fn multiplication(field: CoefficientField) -> Self {
        DiffPoly::from_terms([((0, 0), field)])
    }

    pub fn constant(name: &str, c: C64) -> Self {
        DiffPoly::multiplication(CoefficientField::constant(name, c))
    }

    /// Multi-indices that may carry a nonzero coefficient.
    pub fn keys(&self) -> BTreeSet<MultiIndex> {
        match &*self.0 {
            Node::Terms(t) => t.keys().copied().collect(),
            Node::Sum(v) => v.iter().flat_map(|(_, p)| p.keys()).collect(),
            Node::Compose(a, b) => compose_keys(&a.keys(), &b.keys()),
            Node::Quotient(a, h) => structural_divide(&a.keys(), &h.keys()).0,
            Node::Remainder(a, h) => structural_divide(&a.keys(), &h.keys()).1,
        }
    }

    pub fn order(&self) -> usize {
        self.keys().iter().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn add(&self, other: &DiffPoly) -> DiffPoly {
        self.linear(&[(C64::new(1.0, 0.0), other.clone())])
    }

    pub fn sub(&self, other: &DiffPoly) -> DiffPoly {
        self.linear(&[(C64::new(-1.0, 0.0), other.clone())])
    }

    pub fn scale(&self, s: C64) -> DiffPoly {
        DiffPoly(Arc::new(Node::Sum(vec![(s, self.clone())])))
    }

    fn linear(&self, rest: &[(C64, DiffPoly)]) -> DiffPoly {
        let mut v = vec![(C64::new(1.0, 0.0), self.clone())];
        v.extend(rest.iter().cloned());
        DiffPoly(Arc::new(Node::Sum(v)))
    }

    pub fn compose(&self, other: &DiffPoly) -> DiffPoly {
        DiffPoly(Arc::new(Node::Compose(self.clone(), other.clone())))
    }

    pub fn commutator(&self, other: &DiffPoly) -> DiffPoly {
        self.compose(other).sub(&other.compose(self))
    }

    /// `self = Q o h + R`; see [`LocalOp::right_divide`].
    pub fn right_divide(&self, h: &DiffPoly) -> Result<(DiffPoly, DiffPoly)> {
        if !h.keys().contains(&(2, 0)) || h.order() != 2 {
            return Err(Error::LeadingVanishes);
        }
        Ok((
            DiffPoly(Arc::new(Node::Quotient(self.clone(), h.clone()))),
            DiffPoly(Arc::new(Node::Remainder(self.clone(), h.clone()))),
        ))
    }

    /// Coefficient jets of order `order` at `x`.
    pub fn localize(&self, x: CVec2, order: usize, opts: &CauchyOpts) -> Result<LocalOp> {
        self.localize_cached(x, order, opts, &mut HashMap::new())
    }

    fn localize_cached(&self, x: CVec2, order: usize, opts: &CauchyOpts, cache: &mut Cache) -> Result<LocalOp> {
        let id = (Arc::as_ptr(&self.0) as *const u8 as usize, order);
        if let Some(op) = cache.get(&id) {
            return Ok(op.clone());
        }
        let op = match &*self.0 {
            Node::Terms(t) => {
                let mut out = BTreeMap::new();
                for (k, f) in t {
                    out.insert(*k, f.jet(x, order, opts)?);
                }
                LocalOp::from_terms(out)
            }
            Node::Sum(v) => {
                let mut out = LocalOp::zero();
                for (s, p) in v {
                    out = out.add(&p.localize_cached(x, order, opts, cache)?.scale(*s));
                }
                out
            }
            Node::Compose(a, b) => {
                let la = a.localize_cached(x, order, opts, cache)?;
                let lb = b.localize_cached(x, order + a.order(), opts, cache)?;
                la.compose(&lb).truncate(order)
            }
            Node::Quotient(a, h) | Node::Remainder(a, h) => {
                let extra = a.order();
                let la = a.localize_cached(x, order + extra, opts, cache)?;
                let lh = h.localize_cached(x, order + extra, opts, cache)?;
                let (q, r) = la.right_divide(&lh)?;
                let picked = if matches!(&*self.0, Node::Quotient(..)) { q } else { r };
                picked.truncate(order)
            }
        };
        cache.insert(id, op.clone());
        Ok(op)
    }

    /// Global coefficient map; composite coefficients localize lazily.
    pub fn terms(&self) -> BTreeMap<MultiIndex, CoefficientField> {
        if let Node::Terms(t) = &*self.0 {
            return t.clone();
        }
        self.keys()
            .into_iter()
            .map(|k| {
                let me = self.clone();
                let f: Arc<JetFn> = Arc::new(move |x, order, opts| {
                    let local = me.localize(x, order, opts)?;
                    Ok(local.terms.get(&k).cloned().unwrap_or_else(|| Jet::zero(order)))
                });
                (k, CoefficientField::derived(format!("coef{k:?}"), f))
            })
            .collect()
    }

    /// `(self f)(x)` for an analytic test function `f`, with all derivatives
    /// taken by Cauchy integrals.
    pub fn apply<F>(&self, f: F, x: CVec2, opts: &CauchyOpts) -> Result<C64>
    where
        F: Fn(CVec2) -> Result<C64>,
    {
        let local = self.localize(x, 0, opts)?;
        let fj = cauchy::jet(f, x, local.order(), opts)?;
        Ok(local.apply(&fj))
    }
}

/// A 2x2 matrix of differential polynomials.
#[derive(Clone, Debug)]
pub struct MatrixOperator {
    pub entries: [[DiffPoly; 2]; 2],
}

/// A matrix operator localized at a point.
#[derive(Debug, Clone)]
pub struct LocalMatrix {
    pub entries: [[LocalOp; 2]; 2],
}

impl LocalMatrix {
    pub fn compose(&self, other: &LocalMatrix) -> LocalMatrix {
        let e = |i: usize, j: usize| {
            self.entries[i][0]
                .compose(&other.entries[0][j])
                .add(&self.entries[i][1].compose(&other.entries[1][j]))
        };
        LocalMatrix {
            entries: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn sub(&self, other: &LocalMatrix) -> LocalMatrix {
        let e = |i: usize, j: usize| self.entries[i][j].sub(&other.entries[i][j]);
        LocalMatrix {
            entries: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn commutator(&self, other: &LocalMatrix) -> LocalMatrix {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn truncate(&self, order: usize) -> LocalMatrix {
        let e = |i: usize, j: usize| self.entries[i][j].truncate(order);
        LocalMatrix {
            entries: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(LocalOp::max_abs_coefficient)
            .fold(0.0, f64::max)
    }

    /// `(L Phi)_row(x)` from jets of the two components of `Phi`.
    pub fn apply_row(&self, row: usize, phi: [&Jet; 2]) -> C64 {
        self.entries[row][0].apply(phi[0]) + self.entries[row][1].apply(phi[1])
    }

    pub fn order(&self) -> usize {
        self.entries.iter().flatten().map(LocalOp::order).max().unwrap_or(0)
    }
}

impl MatrixOperator {
    pub fn new(entries: [[DiffPoly; 2]; 2]) -> Self {
        MatrixOperator { entries }
    }

    pub fn entry(&self, i: usize, j: usize) -> &DiffPoly {
        &self.entries[i][j]
    }

    pub fn compose(&self, other: &MatrixOperator) -> MatrixOperator {
        let e = |i: usize, j: usize| {
            self.entries[i][0]
                .compose(&other.entries[0][j])
                .add(&self.entries[i][1].compose(&other.entries[1][j]))
        };
        MatrixOperator::new([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    pub fn sub(&self, other: &MatrixOperator) -> MatrixOperator {
        let e = |i: usize, j: usize| self.entries[i][j].sub(&other.entries[i][j]);
        MatrixOperator::new([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    pub fn commutator(&self, other: &MatrixOperator) -> MatrixOperator {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn order(&self) -> usize {
        self.entries.iter().flatten().map(DiffPoly::order).max().unwrap_or(0)
    }

    pub fn localize(&self, x: CVec2, order: usize, opts: &CauchyOpts) -> Result<LocalMatrix> {
        let mut cache = HashMap::new();
        let mut e = |i: usize, j: usize| self.entries[i][j].localize_cached(x, order, opts, &mut cache);
        Ok(LocalMatrix {
            entries: [[e(0, 0)?, e(0, 1)?], [e(1, 0)?, e(1, 1)?]],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn d(i: usize, j: usize) -> DiffPoly {
        DiffPoly::from_terms([((i, j), CoefficientField::constant("1", c64(1.0, 0.0)))])
    }

    #[test]
    fn leibniz_commutator_is_multiplication_by_derivative() {
        let f = DiffPoly::multiplication(CoefficientField::closure("x1x2", |x| Ok(x[0] * x[1])));
        let comm = d(1, 0).commutator(&f);
        let x = [c64(0.3, -0.2), c64(0.7, 0.1)];
        let local = comm.localize(x, 0, &CauchyOpts::default()).unwrap();
        assert!((local.coefficient((0, 0)) - x[1]).norm() < 1e-12);
        assert!(local.coefficient((1, 0)).norm() < 1e-12);
    }

    #[test]
    fn composition_acts_as_successive_application() {
        let a = DiffPoly::from_terms([
            ((1, 1), CoefficientField::closure("a", |x| Ok(x[0].exp()))),
            ((0, 0), CoefficientField::constant("k", c64(2.0, 0.0))),
        ]);
        let b = DiffPoly::from_terms([((2, 0), CoefficientField::closure("b", |x| Ok(x[1] * x[0])))]);
        let f = |x: CVec2| Ok((x[0] * 0.3 + x[1] * 0.5).sin());
        let x = [c64(0.1, 0.05), c64(-0.2, 0.1)];
        let opts = CauchyOpts::default();
        let lhs = a.compose(&b).apply(f, x, &opts).unwrap();
        let bf = |y: CVec2| b.apply(f, y, &opts);
        let rhs = a.apply(bf, x, &opts).unwrap();
        assert!((lhs - rhs).norm() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn self_commutator_vanishes() {
        let a = DiffPoly::from_terms([
            ((2, 0), CoefficientField::constant("-1", c64(-1.0, 0.0))),
            ((0, 0), CoefficientField::closure("u", |x| Ok(x[0].cos() * x[1]))),
        ]);
        let local = a.commutator(&a).localize([c64(0.2, 0.0), c64(0.1, 0.0)], 0, &CauchyOpts::default()).unwrap();
        assert_eq!(local.max_abs_coefficient(), 0.0);
    }

    #[test]
    fn right_division_recomposes() {
        let h = DiffPoly::from_terms([
            ((2, 0), CoefficientField::constant("-1", c64(-1.0, 0.0))),
            ((0, 1), CoefficientField::constant("c1", c64(1.3, 0.0))),
            ((0, 0), CoefficientField::closure("u", |x| Ok((x[0] * x[1]).exp()))),
        ]);
        let a = d(3, 0);
        let (q, r) = a.right_divide(&h).unwrap();
        assert!(r.keys().iter().all(|(i, _)| *i < 2));
        let x = [c64(0.1, 0.2), c64(0.3, -0.1)];
        let opts = CauchyOpts::default();
        let recomposed = q.compose(&h).add(&r).sub(&a).localize(x, 0, &opts).unwrap();
        assert!(recomposed.max_abs_coefficient() < 1e-8);
    }

    #[test]
    fn dividing_by_first_order_fails() {
        assert!(matches!(d(2, 0).right_divide(&d(1, 0)), Err(Error::LeadingVanishes)));
    }
}
