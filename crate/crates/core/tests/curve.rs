mod common;

use abelops::curve::{abel_map, omega2_zeros, AbelBase, Curve, CycleLabel};
use abelops::quad::Doubling;
use abelops::{c64, vscale, Error};
use common::{interval_integral, BRANCH, OMEGA_IM};

fn periods() -> (Curve, abelops::curve::PeriodData) {
    let c = Curve::new(BRANCH).unwrap();
    let p = c.period_data(Doubling::default()).unwrap();
    (c, p)
}

#[test]
fn period_matrix_matches_frozen_values() {
    let (_, p) = periods();
    for i in 0..2 {
        for j in 0..2 {
            let o = p.omega[(i, j)];
            assert!(o.re.abs() < 1e-12, "Re Omega[{i}{j}] = {}", o.re);
            assert!((o.im - OMEGA_IM[i][j]).abs() < 1e-12, "Im Omega[{i}{j}] = {}", o.im);
        }
    }
}

/// `Im Omega = diag(1, -1) J^-1 K` with `J` the integrals over `[y1, y2]`,
/// `[y3, y4]` and `K` the combinations `[y2, y3] - [y4, y5]`, `-[y4, y5]`.
#[test]
fn period_matrix_matches_interval_quadrature() {
    let i = |a: f64, b: f64, k: i32| interval_integral(BRANCH, a, b, k);
    let j = nalgebra::Matrix2::new(i(0.0, 1.0, 0), i(2.0, 3.0, 0), i(0.0, 1.0, 1), i(2.0, 3.0, 1));
    let k = nalgebra::Matrix2::new(
        i(1.0, 2.0, 0) - i(3.0, 4.0, 0),
        -i(3.0, 4.0, 0),
        i(1.0, 2.0, 1) - i(3.0, 4.0, 1),
        -i(3.0, 4.0, 1),
    );
    let y = nalgebra::Matrix2::new(1.0, 0.0, 0.0, -1.0) * j.try_inverse().unwrap() * k;
    let (_, p) = periods();
    for r in 0..2 {
        for c in 0..2 {
            assert!((y[(r, c)] - p.omega[(r, c)].im).abs() < 1e-11, "{r}{c}: {} vs {}", y[(r, c)], p.omega[(r, c)].im);
        }
    }
}

#[test]
fn period_integrity_residuals() {
    let (_, p) = periods();
    assert!(p.symmetry_residual() < 1e-10);
    assert!(p.normalization_residual() < 1e-10);
    assert!(p.max_real_part() < 1e-9);
    assert!(p.imag_eigenvalues()[0] > 0.0);
}

#[test]
fn zero_of_second_differential_is_two_minus_sqrt2() {
    let (c, p) = periods();
    let (r, q) = omega2_zeros(&c, &p).unwrap();
    let want = 2.0 - 2f64.sqrt();
    assert!((r.y().unwrap() - c64(want, 0.0)).norm() < 1e-12);
    assert_eq!(r.y(), q.y());
    assert!((r.w().unwrap() + q.w().unwrap()).norm() < 1e-14);
    // the a1-period of omega_2 vanishes, so y0 = int y/w / int 1/w over [y1, y2]
    let oracle = interval_integral(BRANCH, 0.0, 1.0, 1) / interval_integral(BRANCH, 0.0, 1.0, 0);
    assert!((oracle - want).abs() < 1e-12);
}

#[test]
fn branch_points_map_to_half_periods() {
    let (c, p) = periods();
    let lat = p.lattice();
    for k in 1..=5 {
        let z = abel_map(&c, &p, &c.branch_point(k), AbelBase::Infinity, Doubling::default()).unwrap();
        let twice = vscale(c64(2.0, 0.0), z.z);
        assert!(lat.distance(twice, [c64(0.0, 0.0); 2]) < 1e-8, "Q{k}");
    }
}

#[test]
fn canonical_cycles_intersect_canonically() {
    let c = Curve::new(BRANCH).unwrap();
    let cyc = |l| c.cycle(l);
    let (a1, a2, b1, b2) = (cyc(CycleLabel::A1), cyc(CycleLabel::A2), cyc(CycleLabel::B1), cyc(CycleLabel::B2));
    assert_eq!(c.intersection(&a1, &a2), 0);
    assert_eq!(c.intersection(&b1, &b2), 0);
    assert_eq!(c.intersection(&a1, &b1).abs(), 1);
    assert_eq!(c.intersection(&a2, &b2).abs(), 1);
    assert_eq!(c.intersection(&a1, &b2), 0);
    for l in [CycleLabel::A1, CycleLabel::A2, CycleLabel::B1, CycleLabel::B2] {
        assert!(c.is_closed(&cyc(l)), "{l}");
    }
}

#[test]
fn invalid_branch_points_are_rejected() {
    assert!(matches!(Curve::new([0.0, 2.0, 1.0, 3.0, 4.0]), Err(Error::NonIncreasing { .. })));
    assert!(matches!(Curve::new([0.0, 1.0, 1.0, 3.0, 4.0]), Err(Error::Coincident { .. })));
    assert!(matches!(Curve::new([0.0, 1.0, f64::NAN, 3.0, 4.0]), Err(Error::NonFinite(_))));
}

#[test]
fn other_curve_has_imaginary_periods() {
    let c = Curve::new([-1.5, -0.2, 0.7, 2.0, 5.5]).unwrap();
    let p = c.period_data(Doubling::default()).unwrap();
    assert!(p.max_real_part() < 1e-9);
    assert!(p.symmetry_residual() < 1e-10);
    assert!(p.imag_eigenvalues()[0] > 0.0);
}
