//! Coefficient fields of the operators in the basis `(psi_1, psi_2)`.
//!
//! Two frames share the formulas: the primary frame `(c, K)` and its partner
//! `(c - 2K, -K)`. The 11-entry multiplier of one frame is `W` and of the
//! other `V`; `U` of a frame is built from the partner's `ln H11`.
//!
//! The frame table (`g`, `f`, `h`, `H` coefficients) reads frame data
//! straight from theta at `k` and `3k`; the base fields `U, V, W` of `L` and
//! `L1` use the tabulated constants `c1..c8`. Checks compare the two.

use std::sync::Arc;

use crate::cauchy::CauchyOpts;
use crate::constants::{guard, ConstantsTable, Geometry};
use crate::operators::diffpoly::{CoefficientField, DiffPoly, MatrixOperator};
use crate::series::Jet;
use crate::{vadd, vscale, vsub, CVec2, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    /// `(c, K)`.
    Primary,
    /// `(c - 2K, -K)`.
    Partner,
}

impl Frame {
    pub fn partner(self) -> Frame {
        match self {
            Frame::Primary => Frame::Partner,
            Frame::Partner => Frame::Primary,
        }
    }

    fn index(self) -> usize {
        match self {
            Frame::Primary => 0,
            Frame::Partner => 1,
        }
    }

    /// Sign picked up by `c1, c4, c5, c6` and `beta0` in this frame.
    pub fn sign(self) -> f64 {
        match self {
            Frame::Primary => 1.0,
            Frame::Partner => -1.0,
        }
    }
}

/// Theta data of one frame, evaluated directly at `k` and `3k`.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub shift: CVec2,
    pub k: CVec2,
    pub t11: C64,
    pub t12: C64,
    pub t2: C64,
    pub t22: C64,
    pub theta_3k: C64,
    /// `ln theta` at `3k`, order 2.
    pub log_3k: Jet,
    pub b: C64,
    pub d: C64,
}

impl FrameData {
    pub fn beta0(&self) -> C64 {
        (self.b * self.t11 / self.t2 + self.d) * 0.5
    }

    pub fn g11(&self) -> C64 {
        self.t11 / self.t2
    }

    pub fn g12(&self) -> C64 {
        self.beta0() + self.t12 / self.t2
    }

    pub fn g22(&self) -> C64 {
        self.t22 / self.t2
    }
}

/// Shared state for every field closure.
#[derive(Debug)]
pub struct FieldContext {
    geo: Arc<Geometry>,
    table: Arc<ConstantsTable>,
    c: CVec2,
    frames: [FrameData; 2],
}

fn lin_x1(order: usize, x: CVec2, rate: C64) -> Jet {
    Jet::coordinate(order, 0, x[0]).scale(rate)
}

impl FieldContext {
    pub fn new(geo: Arc<Geometry>, table: Arc<ConstantsTable>, c: CVec2) -> Result<Arc<Self>> {
        let rc = &table.riemann;
        let ex = &table.expansion;
        let frame_data = |k: CVec2, shift: CVec2, b: C64, d: C64| -> Result<FrameData> {
            let jet = geo.jet(k, 3)?;
            let three_k = vscale(C64::new(3.0, 0.0), k);
            Ok(FrameData {
                shift,
                k,
                t11: guard("theta_11(k)", jet.partial(2, 0), 1e-10)?,
                t12: jet.partial(1, 1),
                t2: guard("theta_2(k)", jet.partial(0, 1), 1e-10)?,
                t22: jet.partial(0, 2),
                theta_3k: guard("theta(3k)", geo.theta.theta(three_k)?, 1e-10)?,
                log_3k: geo.theta.log_jet(three_k, 2)?,
                b,
                d,
            })
        };
        let primary = frame_data(rc.k, c, ex.b, ex.d)?;
        let partner = frame_data(rc.multiple(-1), vsub(c, rc.multiple(2)), ex.b2, ex.d2)?;
        Ok(Arc::new(FieldContext {
            geo,
            table,
            c,
            frames: [primary, partner],
        }))
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geo
    }

    pub fn table(&self) -> &Arc<ConstantsTable> {
        &self.table
    }

    pub fn c(&self) -> CVec2 {
        self.c
    }

    pub fn frame(&self, frame: Frame) -> &FrameData {
        &self.frames[frame.index()]
    }

    fn log_theta(&self, w: CVec2, order: usize) -> Result<Jet> {
        self.geo.theta.log_jet(w, order)
    }

    /// Jet of `ln H11` of the frame at `x`:
    /// `ln(2 theta_11(k) / theta(3k)) + ln theta(k + c + x) - ln theta(c - k + x) + 2 beta0 x1`.
    pub fn big_h11_log(&self, frame: Frame, x: CVec2, order: usize) -> Result<Jet> {
        let f = self.frame(frame);
        let num = self.log_theta(vadd(vadd(f.k, f.shift), x), order)?;
        let den = self.log_theta(vadd(vsub(f.shift, f.k), x), order)?;
        let head = (f.t11 * 2.0 / f.theta_3k).ln();
        Ok(&(&num - &den) + &lin_x1(order, x, f.beta0() * 2.0) + head)
    }

    pub fn big_h11_jet(&self, frame: Frame, x: CVec2, order: usize) -> Result<Jet> {
        Ok(self.big_h11_log(frame, x, order)?.exp())
    }

    /// `W = H11` of the primary frame.
    pub fn w_log(&self, x: CVec2, order: usize) -> Result<Jet> {
        self.big_h11_log(Frame::Primary, x, order)
    }

    /// `V = H11` of the partner frame.
    pub fn v_log(&self, x: CVec2, order: usize) -> Result<Jet> {
        self.big_h11_log(Frame::Partner, x, order)
    }

    /// Closed form of `h11`, with the theta ratio
    /// `theta(c - 3k + x) / theta(c - k + x)` and frame data only.
    pub fn h11_closed(&self, frame: Frame, x: CVec2) -> Result<C64> {
        let f = self.frame(frame);
        let three_k = vscale(C64::new(3.0, 0.0), f.k);
        let ratio = &self.log_theta(vadd(vsub(f.shift, three_k), x), 2)? - &self.log_theta(vadd(vsub(f.shift, f.k), x), 2)?;
        let s1 = ratio.partial(1, 0) + f.log_3k.partial(1, 0) + f.beta0();
        let s2 = ratio.partial(0, 1) + f.log_3k.partial(0, 1);
        Ok(ratio.partial(2, 0) + s1 * s1 - f.g11() * s2 + self.table.fay.c3)
    }

    /// Closed form of `f12` in the primary frame (uses `a, e, alpha`).
    pub fn f12_closed(&self, x: CVec2) -> Result<C64> {
        let f = self.frame(Frame::Primary);
        let ex = &self.table.expansion;
        let (t11, t12, t2, b, d) = (f.t11, f.t12, f.t2, f.b, f.d);
        let sq = d * 0.5 - b * t11 / (t2 * 2.0);
        let bracket = self.h11_closed(Frame::Primary, x)? - self.table.fay.c3 + d * t12 * 2.0 / t2
            - b * t11 * t12 * 2.0 / (t2 * t2)
            - ex.a * 2.0 / t2
            - sq * sq
            - t11 * ex.e * 2.0
            - t11 * ex.alpha / t2;
        Ok(t2 / (t11 * 2.0) * bracket)
    }

    /// `f12` of a frame from `(h11 + c8) / (2 g11)`; `c8` is shared by both frames.
    pub fn f12_frame(&self, frame: Frame, x: CVec2) -> Result<C64> {
        let f = self.frame(frame);
        Ok((self.h11_closed(frame, x)? + self.table.ops.c8) / (f.g11() * 2.0))
    }

    /// Closed form of `h12`, with the partner's `ln H11`.
    pub fn h12_closed(&self, frame: Frame, x: CVec2) -> Result<C64> {
        let f = self.frame(frame);
        let lp = self.big_h11_log(frame.partner(), x, 2)?;
        let s1 = lp.partial(1, 0) + f.beta0() * 3.0 + f.log_3k.partial(1, 0);
        let s2 = lp.partial(0, 1) + f.log_3k.partial(0, 1);
        let f12 = match frame {
            Frame::Primary => self.f12_closed(x)?,
            Frame::Partner => self.f12_frame(frame, x)?,
        };
        Ok(lp.partial(1, 1) + s1 * s2 - f12 * s1 - f.g12() * s2 + f.log_3k.partial(1, 1))
    }

    /// The base fields at `x`, from exact jets of `ln V` and `ln W`.
    pub fn base_values(&self, x: CVec2) -> Result<BaseFieldValues> {
        let o = &self.table.ops;
        let lv = self.v_log(x, 2)?;
        let lw = self.w_log(x, 2)?;
        let v = lv.value().exp();
        let w = lw.value().exp();
        let (v1x, v2x) = (lv.partial(1, 0) + o.c4, lv.partial(0, 1) + o.c5);
        let (w1x, w2x) = (lw.partial(1, 0) - o.c4, lw.partial(0, 1) - o.c5);
        let u = lv.partial(2, 0) + v1x * v1x - o.c1 * v2x + o.c3;
        let u_tilde = lw.partial(2, 0) + w1x * w1x + o.c1 * w2x + o.c3;
        let u2 = (u + o.c8) / (o.c1 * 2.0);
        let u2_tilde = -(u_tilde + o.c8) / (o.c1 * 2.0);
        let u1 = lv.partial(1, 1) + v1x * v2x - u2 * v1x - o.c6 * lv.partial(0, 1) + o.c7;
        let u1_tilde = lw.partial(1, 1) + w1x * w2x - u2_tilde * w1x + o.c6 * lw.partial(0, 1) + o.c7;
        let dv = v * lv.partial(1, 0);
        let dw = w * lw.partial(1, 0);
        Ok(BaseFieldValues {
            u,
            u_tilde,
            u1,
            u1_tilde,
            u2,
            u2_tilde,
            v,
            w,
            v1: o.c6 / o.c1 * v + dv / (o.c1 * 2.0),
            w1: o.c6 / o.c1 * w - dw / (o.c1 * 2.0),
        })
    }
}

/// Pointwise values of the base fields of `L` and `L1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseFieldValues {
    pub u: C64,
    pub u_tilde: C64,
    pub u1: C64,
    pub u1_tilde: C64,
    pub u2: C64,
    pub u2_tilde: C64,
    pub v: C64,
    pub w: C64,
    pub v1: C64,
    pub w1: C64,
}

fn field(ctx: &Arc<FieldContext>, name: &str, f: impl Fn(&FieldContext, CVec2) -> Result<C64> + Send + Sync + 'static) -> CoefficientField {
    let ctx = Arc::clone(ctx);
    CoefficientField::closure(name, move |x| f(&ctx, x))
}

fn base_field(ctx: &Arc<FieldContext>, name: &str, pick: fn(&BaseFieldValues) -> C64) -> CoefficientField {
    field(ctx, name, move |c, x| Ok(pick(&c.base_values(x)?)))
}

/// `(V, W)`.
pub fn vw_fields(ctx: &Arc<FieldContext>) -> (CoefficientField, CoefficientField) {
    (base_field(ctx, "V", |v| v.v), base_field(ctx, "W", |v| v.w))
}

/// Coefficients of `[L^{ij}]_{11}` and `H^{ij}` of one frame.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub frame: Frame,
    pub g11: CoefficientField,
    pub g12: CoefficientField,
    pub g22: CoefficientField,
    pub f11: CoefficientField,
    pub f12: CoefficientField,
    /// Closed form through the frame's own `ln H11`.
    pub h11: CoefficientField,
    /// Form through the partner's `ln H11` (`V` in the primary frame).
    pub h11_via_partner: CoefficientField,
    pub h12: CoefficientField,
    pub big_h11: CoefficientField,
    pub big_h12: CoefficientField,
    pub big_h22: CoefficientField,
}

pub fn lemma7_9_coefficients(ctx: &Arc<FieldContext>, frame: Frame) -> CoefficientTable {
    let f = ctx.frame(frame).clone();
    let s = frame.sign();
    let tag = match frame {
        Frame::Primary => "",
        Frame::Partner => "~",
    };
    let name = |base: &str| format!("{base}{tag}");
    let opts = CauchyOpts::default();
    let big_h11 = field(ctx, &name("H11"), move |c, x| Ok(c.big_h11_jet(frame, x, 0)?.value()));
    let h11_field = big_h11.clone();
    let (k12, k22) = (
        f.t12 / f.t11 + f.b * 0.5 + f.d * f.t2 / (f.t11 * 2.0),
        f.t22 / f.t11 + f.b + f.d * f.t2 / f.t11,
    );
    let (r12, r22) = (f.t2 / (f.t11 * 2.0), f.t2 / f.t11);
    let h11_for_12 = h11_field.clone();
    let big_h12 = CoefficientField::closure(&name("H12"), move |x| {
        let h = h11_for_12.jet(x, 1, &opts)?;
        Ok(k12 * h.value() - r12 * h.partial(1, 0))
    });
    let big_h22 = CoefficientField::closure(&name("H22"), move |x| {
        let h = h11_field.jet(x, 1, &opts)?;
        Ok(k22 * h.value() - r22 * h.partial(0, 1))
    });
    CoefficientTable {
        frame,
        g11: CoefficientField::constant(&name("g11"), f.g11()),
        g12: CoefficientField::constant(&name("g12"), f.g12()),
        g22: CoefficientField::constant(&name("g22"), f.g22()),
        f11: CoefficientField::constant(&name("f11"), C64::new(0.0, 0.0)),
        f12: field(ctx, &name("f12"), move |c, x| match frame {
            Frame::Primary => c.f12_closed(x),
            Frame::Partner => c.f12_frame(frame, x),
        }),
        h11: field(ctx, &name("h11"), move |c, x| c.h11_closed(frame, x)),
        h11_via_partner: field(ctx, &name("h11'"), move |c, x| {
            let o = &c.table.ops;
            let lp = c.big_h11_log(frame.partner(), x, 2)?;
            let s1 = lp.partial(1, 0) + o.c4 * s;
            Ok(lp.partial(2, 0) + s1 * s1 - o.c1 * s * (lp.partial(0, 1) + o.c5 * s) + o.c3)
        }),
        h12: field(ctx, &name("h12"), move |c, x| c.h12_closed(frame, x)),
        big_h11,
        big_h12,
        big_h22,
    }
}

/// Second-order spectral functions whose 11-entries are known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectral {
    /// `d_{z1}^2 log theta`.
    D11,
    /// `d_{z1} d_{z2} log theta`.
    D12,
}

fn neg_one() -> CoefficientField {
    CoefficientField::constant("-1", C64::new(-1.0, 0.0))
}

/// `([L]_{11}, [L]_{12})` of a frame from its coefficient table.
pub fn first_row(table: &CoefficientTable, spectral: Spectral) -> [DiffPoly; 2] {
    match spectral {
        Spectral::D11 => [
            DiffPoly::from_terms([
                ((2, 0), neg_one()),
                ((1, 0), table.f11.clone()),
                ((0, 1), table.g11.clone()),
                ((0, 0), table.h11.clone()),
            ]),
            DiffPoly::multiplication(table.big_h11.clone()),
        ],
        Spectral::D12 => [
            DiffPoly::from_terms([
                ((1, 1), neg_one()),
                ((1, 0), table.f12.clone()),
                ((0, 1), table.g12.clone()),
                ((0, 0), table.h12.clone()),
            ]),
            DiffPoly::multiplication(table.big_h12.clone()),
        ],
    }
}

/// Second row: `[L]_21 = P12 o (1/c2)(heat11 - c3)`, `[L]_22 = P11 + (1/c2) P12 o W`,
/// where `P` is the partner frame's first row and `heat11` is `[L^{11}]_{11}`
/// of the primary frame.
pub fn assemble_second_row(
    heat11: &DiffPoly,
    partner_row: &[DiffPoly; 2],
    w: &DiffPoly,
    c2: C64,
    c3: C64,
) -> Result<(DiffPoly, DiffPoly)> {
    let inv = C64::new(1.0, 0.0) / guard("c2", c2, 1e-14)?;
    let shifted = heat11.sub(&DiffPoly::constant("c3", c3)).scale(inv);
    let l21 = partner_row[1].compose(&shifted);
    let l22 = partner_row[0].add(&partner_row[1].compose(w).scale(inv));
    Ok((l21, l22))
}

/// The operator of `spectral` assembled from both frames' tables.
pub fn assembled_operator(ctx: &Arc<FieldContext>, spectral: Spectral) -> Result<MatrixOperator> {
    let primary = lemma7_9_coefficients(ctx, Frame::Primary);
    let partner = lemma7_9_coefficients(ctx, Frame::Partner);
    let [l11, l12] = first_row(&primary, spectral);
    let [heat11, _] = first_row(&primary, Spectral::D11);
    let partner_row = first_row(&partner, spectral);
    let w = DiffPoly::multiplication(primary.big_h11.clone());
    let fay = &ctx.table.fay;
    let (l21, l22) = assemble_second_row(&heat11, &partner_row, &w, fay.c2, fay.c3)?;
    Ok(MatrixOperator::new([[l11, l12], [l21, l22]]))
}

/// The heat operator `-d1^2 + c1 d2 + U - c3`.
pub fn heat_operator(ctx: &Arc<FieldContext>) -> DiffPoly {
    let o = ctx.table.ops;
    DiffPoly::from_terms([
        ((2, 0), neg_one()),
        ((0, 1), CoefficientField::constant("c1", o.c1)),
        ((0, 0), base_field(ctx, "U-c3", |v| v.u).shifted(-o.c3)),
    ])
}

impl CoefficientField {
    /// `self + s` as a new closure field.
    pub fn shifted(self, s: C64) -> CoefficientField {
        let name = format!("{}+({s})", self.name());
        CoefficientField::closure(&name, move |x| Ok(self.eval(x)? + s))
    }
}

/// The closed-form operators `L` (for `d1^2 log theta`) and `L1` (for `d1 d2 log theta`).
pub fn lemma1_operators(ctx: &Arc<FieldContext>) -> Result<(MatrixOperator, MatrixOperator)> {
    let o = ctx.table.ops;
    let c2 = guard("c2", o.c2, 1e-14)?;
    let k = |name: &str, v: C64| CoefficientField::constant(name, v);
    let u_minus_c3 = base_field(ctx, "U-c3", |v| v.u).shifted(-o.c3);

    let l = MatrixOperator::new([
        [
            DiffPoly::from_terms([((2, 0), neg_one()), ((0, 1), k("c1", o.c1)), ((0, 0), base_field(ctx, "U", |v| v.u))]),
            DiffPoly::multiplication(base_field(ctx, "W", |v| v.w)),
        ],
        [
            DiffPoly::multiplication(field(ctx, "V/c2", move |c, x| Ok(c.base_values(x)?.v / c2))).compose(&DiffPoly::from_terms([
                ((2, 0), neg_one()),
                ((0, 1), k("c1", o.c1)),
                ((0, 0), u_minus_c3.clone()),
            ])),
            DiffPoly::from_terms([
                ((2, 0), neg_one()),
                ((0, 1), k("-c1", -o.c1)),
                ((0, 0), field(ctx, "U~+WV/c2", move |c, x| {
                    let v = c.base_values(x)?;
                    Ok(v.u_tilde + v.w * v.v / c2)
                })),
            ]),
        ],
    ]);
    let l1 = MatrixOperator::new([
        [
            DiffPoly::from_terms([
                ((1, 1), neg_one()),
                ((1, 0), base_field(ctx, "U2", |v| v.u2)),
                ((0, 1), k("c6", o.c6)),
                ((0, 0), base_field(ctx, "U1", |v| v.u1)),
            ]),
            DiffPoly::multiplication(base_field(ctx, "W1", |v| v.w1)),
        ],
        [
            DiffPoly::multiplication(field(ctx, "V1/c2", move |c, x| Ok(c.base_values(x)?.v1 / c2))).compose(
                &DiffPoly::from_terms([((2, 0), neg_one()), ((0, 1), k("c1", o.c1)), ((0, 0), u_minus_c3)]),
            ),
            DiffPoly::from_terms([
                ((1, 1), neg_one()),
                ((1, 0), base_field(ctx, "U2~", |v| v.u2_tilde)),
                ((0, 1), k("-c6", -o.c6)),
                ((0, 0), field(ctx, "U1~+WV1/c2", move |c, x| {
                    let v = c.base_values(x)?;
                    Ok(v.u1_tilde + v.w * v.v1 / c2)
                })),
            ]),
        ],
    ]);
    Ok((l, l1))
}
