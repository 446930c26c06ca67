mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use abelops::config::RunConfig;
use abelops::operators::reconstruct::LambdaSpec;
use abelops::operators::LocalOp;
use abelops::series::Jet;
use abelops::theta::ThetaContext;
use abelops::{c64, CVec2, C64, PI};
use proptest::prelude::*;

fn theta() -> &'static ThetaContext {
    static T: OnceLock<ThetaContext> = OnceLock::new();
    T.get_or_init(|| ThetaContext::new(common::omega(), 1e-14).unwrap())
}

fn point(r: f64) -> impl Strategy<Value = CVec2> {
    (-r..r, -r..r, -r..r, -r..r).prop_map(|(a, b, c, d)| [c64(a, b), c64(c, d)])
}

/// Constant-coefficient operator of order at most 2.
fn const_op() -> impl Strategy<Value = LocalOp> {
    proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 6).prop_map(|cs| {
        let keys = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        let terms: BTreeMap<_, _> = keys.iter().zip(cs).map(|(k, (re, im))| (*k, Jet::constant(0, c64(re, im)))).collect();
        LocalOp::from_terms(terms)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quasi_periodic(z in point(0.6), m1 in -1i64..=1, m2 in -1i64..=1, n1 in -2i64..=2, n2 in -2i64..=2) {
        let th = theta();
        let p = th.lattice().point([m1, m2], [n1, n2]);
        let o = th.omega();
        let m = [m1 as f64, m2 as f64];
        let quad = o[(0, 0)] * m[0] * m[0] + o[(0, 1)] * 2.0 * m[0] * m[1] + o[(1, 1)] * m[1] * m[1];
        let factor = (c64(0.0, -PI) * quad - c64(0.0, 2.0 * PI) * (z[0] * m[0] + z[1] * m[1])).exp();
        let lhs = th.theta([z[0] + p[0], z[1] + p[1]]).unwrap();
        let rhs = factor * th.theta(z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(rhs.norm()));
    }

    #[test]
    fn even(z in point(1.0)) {
        let th = theta();
        let a = th.theta(z).unwrap();
        let b = th.theta([-z[0], -z[1]]).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn real_on_t1(t1 in 0.0..1.3f64, t2 in 0.0..1.0f64) {
        let v = theta().theta([c64(0.0, t1), c64(0.0, t2)]).unwrap();
        prop_assert!(v.im.abs() <= 1e-10 * (1.0 + v.norm()));
    }

    #[test]
    fn reduction_is_idempotent(z in point(5.0)) {
        let lat = theta().lattice();
        let p = lat.reduce(z);
        let q = lat.reduce(p.z);
        prop_assert_eq!(q.m, [0, 0]);
        prop_assert_eq!(q.n, [0, 0]);
        prop_assert!(lat.distance(z, p.z) < 1e-10);
    }

    #[test]
    fn constant_coefficient_operators_commute(a in const_op(), b in const_op()) {
        prop_assert!(a.commutator(&b).max_abs_coefficient() < 1e-12);
    }

    #[test]
    fn composition_is_associative(a in const_op(), b in const_op(), c in const_op()) {
        let l = a.compose(&b).compose(&c);
        let r = a.compose(&b.compose(&c));
        prop_assert!(l.sub(&r).max_abs_coefficient() < 1e-10);
    }

    #[test]
    fn spectral_function_display_round_trips(terms in proptest::collection::vec(proptest::collection::vec((0usize..=3, 0usize..=3).prop_filter("order 1..=3", |(i, j)| (1..=3).contains(&(i + j))), 1..3), 1..4)) {
        let text = terms
            .iter()
            .map(|f| f.iter().map(|(i, j)| format!("D{i}{j}")).collect::<Vec<_>>().join("*"))
            .collect::<Vec<_>>()
            .join(" + ");
        let l: LambdaSpec = text.parse().unwrap();
        prop_assert_eq!(l.to_string(), text);
        let again: LambdaSpec = l.to_string().parse().unwrap();
        prop_assert_eq!(again, l);
    }

    #[test]
    fn config_hash_tracks_seed(a in any::<u64>(), b in any::<u64>()) {
        let mut x = RunConfig::default();
        let mut y = RunConfig::default();
        x.seed = a;
        y.seed = b;
        prop_assert_eq!(x.hash() == y.hash(), a == b);
    }
}

#[test]
fn jet_constant_has_no_slope() {
    let j = Jet::constant(2, C64::new(3.0, 1.0));
    assert_eq!(j.partial(1, 0), c64(0.0, 0.0));
    assert_eq!(j.value(), c64(3.0, 1.0));
}
