mod common;

use abelops::constants::sample_points;
use abelops::theta::{DerivIndex, ThetaContext};
use abelops::{c64, CVec2, Error, C64, PI};
use common::{omega, theta_sum};

fn ctx() -> ThetaContext {
    ThetaContext::new(omega(), 1e-14).unwrap()
}

#[test]
fn values_and_partials_match_direct_summation() {
    let th = ctx();
    let om = omega();
    for z in sample_points(5, 12, 0.4) {
        for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 3), (2, 1)] {
            let got = th.partial(z, i, j).unwrap();
            let want = theta_sum(&om, z, i as u32, j as u32);
            let scale = theta_sum(&om, z, 0, 0).norm().max(1.0) * (2.0 * PI).powi((i + j) as i32);
            assert!((got - want).norm() < 1e-11 * scale, "({i},{j}) at {z:?}: {got} vs {want}");
        }
    }
}

#[test]
fn quasi_periodicity_law() {
    let th = ctx();
    let lat = th.lattice().clone();
    for (k, z) in sample_points(9, 20, 0.3).into_iter().enumerate() {
        let m = [(k % 3) as i64 - 1, (k % 2) as i64];
        let n = [(k % 5) as i64 - 2, 1];
        let shifted: CVec2 = {
            let p = lat.point(m, n);
            [z[0] + p[0], z[1] + p[1]]
        };
        let o = th.omega();
        let mf = [m[0] as f64, m[1] as f64];
        let quad = o[(0, 0)] * mf[0] * mf[0] + o[(0, 1)] * 2.0 * mf[0] * mf[1] + o[(1, 1)] * mf[1] * mf[1];
        let factor = (c64(0.0, -PI) * quad - c64(0.0, 2.0 * PI) * (z[0] * mf[0] + z[1] * mf[1])).exp();
        let lhs = th.theta(shifted).unwrap();
        let rhs = factor * th.theta(z).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(rhs.norm()), "m={m:?} n={n:?}");
    }
}

#[test]
fn theta_is_even() {
    let th = ctx();
    for z in sample_points(3, 10, 0.5) {
        let a = th.theta(z).unwrap();
        let b = th.theta([-z[0], -z[1]]).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        let d1 = th.partial(z, 1, 0).unwrap();
        let d1m = th.partial([-z[0], -z[1]], 1, 0).unwrap();
        assert!((d1 + d1m).norm() < 1e-11 * d1.norm().max(1.0));
    }
}

#[test]
fn theta_is_real_on_the_four_tori() {
    let th = ctx();
    for index in 1..=4u8 {
        let grid = th.torus_grid(index, 50).unwrap();
        let max = grid.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
        let worst = grid.iter().map(|(_, v)| v.im.abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10 * (1.0 + max), "T{index}: {worst:e}");
    }
}

#[test]
fn grid_csv_has_plot_columns() {
    let th = ctx();
    let mut buf = Vec::new();
    th.write_grid_csv(2, 4, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t1,t2,re,im"));
    assert_eq!(lines.count(), 16);
}

#[test]
fn derivative_order_is_capped() {
    assert!(DerivIndex::new(2, 1).is_ok());
    assert!(matches!(DerivIndex::new(2, 2), Err(Error::DerivOrder(2, 2))));
}

#[test]
fn log_derivative_is_quotient() {
    let th = ctx();
    let z = [c64(0.11, 0.2), c64(-0.3, 0.05)];
    let d = th.log_deriv(z, DerivIndex::new(0, 1).unwrap()).unwrap();
    let q = th.partial(z, 0, 1).unwrap() / th.theta(z).unwrap();
    assert!((d - q).norm() < 1e-12 * q.norm().max(1.0));
}

#[test]
fn reduction_lands_in_the_unit_cell() {
    let th = ctx();
    let lat = th.lattice();
    let z: CVec2 = [c64(3.7, -2.1), c64(-1.2, 4.4)];
    let p = lat.reduce(z);
    let (a, b) = lat.real_coordinates(p.z);
    for v in a.iter().chain(b.iter()) {
        assert!((0.0..1.0).contains(v), "{v}");
    }
    let back = lat.point(p.m, p.n);
    assert!(((p.z[0] + back[0]) - z[0]).norm() < 1e-12);
    assert!(((p.z[1] + back[1]) - z[1]).norm() < 1e-12);
    let _: C64 = th.theta(p.z).unwrap();
}
