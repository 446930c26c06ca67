mod common;

use std::sync::OnceLock;

use abelops::constants::{sample_points, ConstantsTable, Geometry};
use abelops::{c64, vscale, CVec2, C64};
use common::{omega, theta_sum, BRANCH};

struct Fixture {
    geo: Geometry,
    table: ConstantsTable,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let geo = Geometry::from_branch(BRANCH).unwrap();
        let table = ConstantsTable::compute(&geo).unwrap();
        Fixture { geo, table }
    })
}

fn close(got: C64, want: C64, tol: f64) -> bool {
    (got - want).norm() <= tol * want.norm().max(1.0)
}

fn th(z: CVec2, i: u32, j: u32) -> C64 {
    theta_sum(&omega(), z, i, j)
}

#[test]
fn frozen_constants() {
    let t = &fixture().table;
    let k = t.k();
    assert!(close(k[0], c64(0.26362443385586476, 0.24883394987702867), 1e-11), "{k:?}");
    assert!(close(k[1], c64(0.5272488677117295, 0.4976678997540577), 1e-11), "{k:?}");
    assert!(close(t.riemann.y0, c64(0.58578643762690495, 0.0), 1e-12));
    assert!(close(t.ops.c1, c64(1.0812612311256136, 0.0), 1e-9), "{}", t.ops.c1);
    assert!(close(t.ops.c2, c64(0.014761828112660354, 0.012055923467651134), 1e-9), "{}", t.ops.c2);
    assert!(close(t.ops.c3, c64(-10.021200776177423, 0.0), 1e-9), "{}", t.ops.c3);
    assert!(close(t.ops.beta0, c64(-0.27031530778140506, 0.0), 1e-9), "{}", t.ops.beta0);
    assert!(close(t.expansion.a2, c64(22.19704472736117, -3.837922557812927), 1e-8), "{}", t.expansion.a2);
}

#[test]
fn k_lies_on_the_divisor_with_vanishing_first_partial() {
    let k = fixture().table.k();
    let scale = th(k, 2, 0).norm();
    assert!(th(k, 0, 0).norm() < 1e-9 * scale.max(1.0));
    assert!(th(k, 1, 0).norm() < 1e-8 * scale.max(1.0));
    assert!(scale > 1e-6);
}

/// The Fay constants from direct summation: `c2 = -theta_11(K) / theta(3K)`
/// and `c3 = d1^2 log theta (3K)`.
#[test]
fn fay_constants_match_direct_summation() {
    let t = &fixture().table;
    let k = t.k();
    let k3 = vscale(c64(3.0, 0.0), k);
    let t3 = th(k3, 0, 0);
    let c2 = -th(k, 2, 0) / t3;
    let g = th(k3, 1, 0) / t3;
    let c3 = th(k3, 2, 0) / t3 - g * g;
    assert!(close(t.fay.c2, c2, 1e-9), "{} vs {c2}", t.fay.c2);
    assert!(close(t.fay.c3, c3, 1e-9), "{} vs {c3}", t.fay.c3);
}

fn fay_residual(k: CVec2, c2: C64, c3: C64) -> f64 {
    let two_k = vscale(c64(2.0, 0.0), k);
    sample_points(11, 25, 0.35)
        .into_iter()
        .map(|z| {
            let t = th(z, 0, 0);
            let g = th(z, 1, 0) / t;
            let lhs = th(z, 2, 0) / t - g * g;
            let q = th([z[0] - two_k[0], z[1] - two_k[1]], 0, 0) * th([z[0] + two_k[0], z[1] + two_k[1]], 0, 0) / (t * t);
            (lhs - c3 - c2 * q).norm() / lhs.norm().max(c3.norm()).max((c2 * q).norm())
        })
        .fold(0.0, f64::max)
}

#[test]
fn fay_identity_holds_and_detects_perturbation() {
    let t = &fixture().table;
    let k = t.k();
    assert!(fay_residual(k, t.fay.c2, t.fay.c3) < 1e-8);
    let shifted = fay_residual(k, t.fay.c2, t.fay.c3 + 1e-3);
    assert!(shifted > 1e-8, "perturbed c3 still passes: {shifted:e}");
}

/// The leading quadratic coefficient equals `theta_11(K) theta_12(K)`.
#[test]
fn a2_is_theta11_times_theta12() {
    let t = &fixture().table;
    let k = t.k();
    let want = th(k, 2, 0) * th(k, 1, 1);
    assert!(close(t.expansion.a2, want, 1e-9), "{} vs {want}", t.expansion.a2);
    let ratio = th(k, 1, 1) / th(k, 0, 1);
    assert!(close(ratio, c64(-0.540630615562807, 0.0), 1e-9), "{ratio}");
}

#[test]
fn second_curve_is_the_reflection_of_the_first() {
    let ex = &fixture().table.expansion;
    assert!((ex.b2 - ex.b).norm() < 1e-6 * ex.b.norm().max(1.0));
    assert!((ex.d2 + ex.d).norm() < 1e-6 * ex.d.norm().max(1.0));
}

#[test]
fn json_has_documented_keys() {
    let f = fixture();
    let v = f.table.to_json(&f.geo);
    for key in [
        "K", "K_inf", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "a", "b", "d", "e", "alpha", "beta", "gamma", "a2",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let c1 = v["c1"].as_array().unwrap();
    assert_eq!(c1.len(), 2);
    assert!((c1[0].as_f64().unwrap() - 1.0812612311256136).abs() < 1e-9);
}
