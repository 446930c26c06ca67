use std::sync::{Arc, OnceLock};

use abelops::cauchy::CauchyOpts;
use abelops::constants::{ConstantsTable, Geometry};
use abelops::operators::baker::Component;
use abelops::operators::fields::lemma1_operators;
use abelops::operators::reconstruct::{LambdaSpec, OrderProfile, Reconstructor, SamplerOpts};
use abelops::operators::{BakerBasis, CoefficientField, DiffPoly, FieldContext, MatrixOperator};
use abelops::{c64, CVec2, C64};

const C: CVec2 = [C64::new(0.0, 0.13), C64::new(0.0, 0.29)];
const X: CVec2 = [C64::new(0.1, 0.05), C64::new(-0.07, 0.12)];

struct Fixture {
    geo: Arc<Geometry>,
    table: Arc<ConstantsTable>,
    l: MatrixOperator,
    l1: MatrixOperator,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let geo = Arc::new(Geometry::from_branch([0.0, 1.0, 2.0, 3.0, 4.0]).unwrap());
        let table = Arc::new(ConstantsTable::compute(&geo).unwrap());
        let ctx = FieldContext::new(geo.clone(), table.clone(), C).unwrap();
        let (l, l1) = lemma1_operators(&ctx).unwrap();
        Fixture { geo, table, l, l1 }
    })
}

fn basis() -> BakerBasis {
    let f = fixture();
    BakerBasis::section3(f.geo.clone(), &f.table, C)
}

#[test]
fn closed_form_operators_have_the_baker_pair_as_eigenvector() {
    let f = fixture();
    let opts = CauchyOpts::default();
    let z = [c64(0.21, -0.08), c64(-0.13, 0.17)];
    let p = basis().at(z).unwrap();
    let phi = [p.jet(Component::First, X, 2).unwrap(), p.jet(Component::Second, X, 2).unwrap()];
    let lj = f.geo.theta.log_jet(z, 2).unwrap();
    for (op, lambda) in [(&f.l, lj.partial(2, 0)), (&f.l1, lj.partial(1, 1))] {
        let loc = op.localize(X, 0, &opts).unwrap();
        for row in 0..2 {
            let lhs = loc.apply_row(row, [&phi[0], &phi[1]]);
            let rhs = lambda * phi[row].value();
            assert!((lhs - rhs).norm() < 1e-7 * rhs.norm().max(1.0), "row {row}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn closed_form_operators_commute() {
    let f = fixture();
    let opts = CauchyOpts::default();
    let scale = f.l.localize(X, 0, &opts).unwrap().max_abs_coefficient();
    let comm = f.l.commutator(&f.l1).localize(X, 0, &opts).unwrap().max_abs_coefficient();
    assert!(comm < 1e-6 * scale.max(1.0), "{comm:e}");
}

#[test]
fn reconstruction_reproduces_closed_form() {
    let f = fixture();
    let rec = Reconstructor::new(basis(), LambdaSpec::second(1, 1), OrderProfile::full(2), SamplerOpts::default()).unwrap();
    let r = rec.reconstruct(X).unwrap();
    let c = f.l.localize(X, 0, &CauchyOpts::default()).unwrap();
    let d = r.to_local().sub(&c).max_abs_coefficient() / c.max_abs_coefficient().max(1.0);
    assert!(d < 1e-7, "{d:e}");
    assert!(r.heldout_residual.iter().all(|&h| h < 1e-7), "{:?}", r.heldout_residual);
}

#[test]
fn reconstruction_is_deterministic_per_seed() {
    let make = |seed| {
        let opts = SamplerOpts { seed, ..SamplerOpts::default() };
        Reconstructor::new(basis(), LambdaSpec::second(1, 2), OrderProfile::full(2), opts)
            .unwrap()
            .reconstruct(X)
            .unwrap()
            .to_json()
    };
    assert_eq!(make(7), make(7));
}

#[test]
fn derivative_and_coordinate_commute_to_one() {
    let d1 = DiffPoly::from_terms([((1, 0), CoefficientField::constant("1", c64(1.0, 0.0)))]);
    let x1 = DiffPoly::multiplication(CoefficientField::closure("x1", |x| Ok(x[0])));
    let loc = d1.commutator(&x1).localize(X, 0, &CauchyOpts::default()).unwrap();
    assert!((loc.coefficient((0, 0)) - c64(1.0, 0.0)).norm() < 1e-10);
    assert!(loc.coefficient((1, 0)).norm() < 1e-10);
}

#[test]
fn spectral_functions_parse_and_print() {
    let l: LambdaSpec = "D20 + D02".parse().unwrap();
    assert_eq!(l.to_string(), "D20 + D02");
    assert_eq!(l.order(), 2);
    let p: LambdaSpec = "D20*D02".parse().unwrap();
    assert_eq!(p.order(), 4);
    assert_eq!(p, LambdaSpec::second(1, 1).mul(&LambdaSpec::second(2, 2)));
    assert!("D111".parse::<LambdaSpec>().unwrap_err().to_string().contains("cannot parse"));
    assert!("D40".parse::<LambdaSpec>().is_err());
    assert!("x".parse::<LambdaSpec>().is_err());
}
