//! Genus-2 curve `w^2 = (y - y1)...(y - y5)` with real branch points, its
//! canonical cycles, abelian integrals, periods and the Abel map.
//!
//! Sheet convention: on the first sheet `w = i * prod_k sqrt(y_k - y)` with the
//! principal square root. This branch is analytic off the cuts
//! `[y1, y2]`, `[y3, y4]`, `[y5, inf)`; on the real axis it is taken with
//! boundary values from the upper half-plane.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::quad::{integrate_doubling, Doubling, GaussLegendre};
use crate::{mat_vec, CMat2, CVec2, Error, Result, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sheet {
    First,
    Second,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::First => 1.0,
            Sheet::Second => -1.0,
        }
    }

    pub fn flip(self) -> Sheet {
        match self {
            Sheet::First => Sheet::Second,
            Sheet::Second => Sheet::First,
        }
    }
}

/// A point of the compactified curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvePoint {
    Infinity,
    Finite { y: C64, w: C64, sheet: Sheet },
}

impl CurvePoint {
    pub fn y(&self) -> Option<C64> {
        match self {
            CurvePoint::Infinity => None,
            CurvePoint::Finite { y, .. } => Some(*y),
        }
    }

    pub fn w(&self) -> Option<C64> {
        match self {
            CurvePoint::Infinity => None,
            CurvePoint::Finite { w, .. } => Some(*w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Involution {
    /// `(y, w) -> (y, -w)`.
    Hyperelliptic,
    /// `(y, w) -> (conj y, conj w)`.
    Conjugation,
}

/// Named cycles: the canonical basis, the three real ovals (where `w` is real)
/// and the three imaginary ovals (where `w` is imaginary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CycleLabel {
    A1,
    A2,
    B1,
    B2,
    RealOval(u8),
    ImaginaryOval(u8),
}

impl fmt::Display for CycleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleLabel::A1 => write!(f, "a1"),
            CycleLabel::A2 => write!(f, "a2"),
            CycleLabel::B1 => write!(f, "b1"),
            CycleLabel::B2 => write!(f, "b2"),
            CycleLabel::RealOval(k) => write!(f, "C{k}"),
            CycleLabel::ImaginaryOval(k) => write!(f, "B{k}"),
        }
    }
}

/// Oriented piece of the real axis on one sheet; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub from: f64,
    pub to: f64,
    pub sheet: Sheet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub label: CycleLabel,
    pub segments: Vec<Segment>,
}

/// Piece of an integration path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathSegment {
    /// Along the real axis, passing branch points on small upper detours.
    Real { from: f64, to: f64, sheet: Sheet },
    /// Straight segment in C; `sheet` is the sheet at `from`, the sheet flips
    /// where the segment crosses a cut.
    Line { from: C64, to: C64, sheet: Sheet },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    branch: [f64; 5],
}

fn sqrt_above(x: C64) -> C64 {
    if x.im == 0.0 && x.re < 0.0 {
        C64::new(0.0, -(-x.re).sqrt())
    } else {
        x.sqrt()
    }
}

impl Curve {
    pub fn new(branch: [f64; 5]) -> Result<Self> {
        for (i, b) in branch.iter().enumerate() {
            if !b.is_finite() {
                return Err(Error::NonFinite(i + 1));
            }
        }
        for i in 0..4 {
            let (a, b) = (branch[i], branch[i + 1]);
            if a == b {
                return Err(Error::Coincident {
                    i: i + 1,
                    j: i + 2,
                    value: a,
                });
            }
            if a > b {
                return Err(Error::NonIncreasing {
                    i: i + 1,
                    j: i + 2,
                    a,
                    b,
                });
            }
        }
        Ok(Curve { branch })
    }

    pub fn branch(&self) -> [f64; 5] {
        self.branch
    }

    /// Warnings about nearly coincident branch points.
    pub fn warnings(&self) -> Vec<String> {
        let scale = (self.branch[4] - self.branch[0]).abs().max(1.0);
        (0..4)
            .filter(|&i| self.branch[i + 1] - self.branch[i] < 1e-6 * scale)
            .map(|i| {
                format!(
                    "branch points y{} and y{} are nearly coincident; periods will be ill-conditioned",
                    i + 1,
                    i + 2
                )
            })
            .collect()
    }

    pub fn poly(&self, y: C64) -> C64 {
        self.branch.iter().map(|b| y - b).product()
    }

    /// First-sheet value of `w`, with upper boundary values on the real axis.
    pub fn w_first(&self, y: C64) -> C64 {
        I * self
            .branch
            .iter()
            .map(|b| sqrt_above(C64::new(*b, 0.0) - y))
            .product::<C64>()
    }

    /// Number of branch points strictly below the real number `y`.
    fn rank(&self, y: f64) -> usize {
        self.branch.iter().filter(|b| **b < y).count()
    }

    /// Phase of the upper boundary value `w+(y) = phase * sqrt|P(y)|` on the
    /// real interval containing `y`.
    fn phase(&self, y: f64) -> C64 {
        let k = self.rank(y);
        I * (-I).powu(k as u32)
    }

    fn branch_index(&self, y: f64) -> Option<usize> {
        self.branch.iter().position(|b| *b == y)
    }

    /// True inside `(y1, y2)`, `(y3, y4)`, `(y5, inf)`.
    pub fn on_cut(&self, y: f64) -> bool {
        self.branch_index(y).is_none() && self.rank(y) % 2 == 1
    }

    pub fn point(&self, y: C64, sheet: Sheet) -> CurvePoint {
        CurvePoint::Finite {
            y,
            w: self.w_first(y) * sheet.sign(),
            sheet,
        }
    }

    /// Point with a prescribed `w`; the sheet is read off from `w`.
    pub fn point_with_w(&self, y: C64, w: C64) -> Result<CurvePoint> {
        let p = self.poly(y);
        if (w * w - p).norm() > 1e-10 * (1.0 + p.norm()) {
            return Err(Error::Config(format!(
                "w = {w} does not satisfy w^2 = P(y) at y = {y}"
            )));
        }
        let w1 = self.w_first(y);
        let sheet = if (w - w1).norm() <= (w + w1).norm() {
            Sheet::First
        } else {
            Sheet::Second
        };
        if w1.norm() > 0.0 && ((w - w1).norm() - (w + w1).norm()).abs() < 1e-12 * w1.norm() {
            return Err(Error::AmbiguousSheet(y.re));
        }
        Ok(CurvePoint::Finite { y, w, sheet })
    }

    /// Branch point `Q_k`, `k` in `1..=5`.
    pub fn branch_point(&self, k: usize) -> CurvePoint {
        CurvePoint::Finite {
            y: C64::new(self.branch[k - 1], 0.0),
            w: C64::new(0.0, 0.0),
            sheet: Sheet::First,
        }
    }

    pub fn apply_involution(&self, which: Involution, p: CurvePoint) -> CurvePoint {
        match p {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Finite { y, w, .. } => {
                let (y2, w2) = match which {
                    Involution::Hyperelliptic => (y, -w),
                    Involution::Conjugation => (y.conj(), w.conj()),
                };
                let w1 = self.w_first(y2);
                let sheet = if w2.norm() == 0.0 || (w2 - w1).norm() <= (w2 + w1).norm() {
                    Sheet::First
                } else {
                    Sheet::Second
                };
                CurvePoint::Finite {
                    y: y2,
                    w: w2,
                    sheet,
                }
            }
        }
    }

    fn loop_around(from: f64, to: f64) -> Vec<Segment> {
        vec![
            Segment {
                from: to,
                to: from,
                sheet: Sheet::First,
            },
            Segment {
                from,
                to,
                sheet: Sheet::Second,
            },
        ]
    }

    /// The hard-coded segment list of a named cycle.
    pub fn cycle(&self, label: CycleLabel) -> Cycle {
        let [y1, y2, y3, y4, y5] = self.branch;
        let inf = f64::INFINITY;
        let segments = match label {
            CycleLabel::A1 | CycleLabel::RealOval(1) => Curve::loop_around(y1, y2),
            CycleLabel::A2 | CycleLabel::RealOval(2) => Curve::loop_around(y3, y4),
            CycleLabel::RealOval(_) => Curve::loop_around(y5, inf),
            CycleLabel::B1 => vec![
                Segment {
                    from: y5,
                    to: y2,
                    sheet: Sheet::First,
                },
                Segment {
                    from: y2,
                    to: y3,
                    sheet: Sheet::Second,
                },
                Segment {
                    from: y3,
                    to: y4,
                    sheet: Sheet::First,
                },
                Segment {
                    from: y4,
                    to: y5,
                    sheet: Sheet::Second,
                },
            ],
            CycleLabel::B2 | CycleLabel::ImaginaryOval(3) => Curve::loop_around(y4, y5),
            CycleLabel::ImaginaryOval(1) => Curve::loop_around(-inf, y1),
            CycleLabel::ImaginaryOval(_) => Curve::loop_around(y2, y3),
        };
        Cycle { label, segments }
    }

    pub fn named_cycles(&self) -> Vec<Cycle> {
        use CycleLabel::*;
        [
            A1,
            A2,
            B1,
            B2,
            RealOval(1),
            RealOval(2),
            RealOval(3),
            ImaginaryOval(1),
            ImaginaryOval(2),
            ImaginaryOval(3),
        ]
        .into_iter()
        .map(|l| self.cycle(l))
        .collect()
    }

    fn is_branch_or_infinite(&self, y: f64) -> bool {
        y.is_infinite() || self.branch_index(y).is_some()
    }

    /// Segments join head to tail and only change sheet at branch points.
    pub fn is_closed(&self, cycle: &Cycle) -> bool {
        let segs = &cycle.segments;
        if segs.is_empty() {
            return true;
        }
        let same = |a: f64, b: f64| a == b || (a.is_infinite() && b.is_infinite());
        (0..segs.len()).all(|k| {
            let cur = segs[k];
            let next = segs[(k + 1) % segs.len()];
            same(cur.to, next.from)
                && (cur.sheet == next.sheet || self.is_branch_or_infinite(cur.to))
        })
    }

    /// Signed multiplicity of each of the six real intervals
    /// `(-inf,y1), (y1,y2), ..., (y5,inf)`, normalized so that a loop around
    /// one interval has weight one.
    pub fn interval_weights(&self, cycle: &Cycle) -> [i64; 6] {
        let mut w = [0i64; 6];
        let edges = [
            f64::NEG_INFINITY,
            self.branch[0],
            self.branch[1],
            self.branch[2],
            self.branch[3],
            self.branch[4],
            f64::INFINITY,
        ];
        for s in &cycle.segments {
            let (lo, hi, dir) = if s.from < s.to {
                (s.from, s.to, 1i64)
            } else {
                (s.to, s.from, -1i64)
            };
            for k in 0..6 {
                if edges[k] >= lo && edges[k + 1] <= hi {
                    // a loop traverses its interval backwards on sheet one and
                    // forwards on sheet two: weight -1 each
                    w[k] += -dir * s.sheet.sign() as i64;
                }
            }
        }
        w.map(|v| v / 2)
    }

    /// Intersection number from the interval decomposition: adjacent
    /// interval loops meet once, with sign given by their order on the
    /// circle `R u {inf}`.
    pub fn intersection(&self, a: &Cycle, b: &Cycle) -> i64 {
        let wa = self.interval_weights(a);
        let wb = self.interval_weights(b);
        let mut total = 0;
        for j in 0..6 {
            for k in 0..6 {
                let s = if k == (j + 1) % 6 {
                    1
                } else if j == (k + 1) % 6 {
                    -1
                } else {
                    0
                };
                total += wa[j] * wb[k] * s;
            }
        }
        total
    }

    /// `int (1, y) dy / w+` over a real interval `[p, q]` (p < q) containing no
    /// branch point in its interior.
    fn basic_piece(&self, p: f64, q: f64, quad: Doubling) -> Result<[C64; 2]> {
        let probe = if p.is_infinite() {
            q - 1.0
        } else if q.is_infinite() {
            p + 1.0
        } else {
            0.5 * (p + q)
        };
        let phase = self.phase(probe);
        let pb = self.branch_index(p);
        let qb = self.branch_index(q);
        let rest_abs = |y: f64, skip: &[usize]| -> f64 {
            self.branch
                .iter()
                .enumerate()
                .filter(|(k, _)| !skip.contains(k))
                .map(|(_, b)| (y - b).abs())
                .product::<f64>()
                .sqrt()
        };
        let pair = |scale: f64, y: f64| -> [C64; 2] {
            let s = C64::new(scale, 0.0) / phase;
            [s, s * y]
        };
        let v = match (p.is_infinite(), q.is_infinite(), pb, qb) {
            (false, false, Some(i), Some(j)) => {
                let mid = 0.5 * (p + q);
                let half = 0.5 * (q - p);
                integrate_doubling(-FRAC_PI_2, FRAC_PI_2, quad, |phi| {
                    let y = mid + half * phi.sin();
                    pair(1.0 / rest_abs(y, &[i, j]), y)
                })?
            }
            (false, false, Some(i), None) => {
                let d = q - p;
                integrate_doubling(0.0, 1.0, quad, |v| {
                    let y = p + d * v * v;
                    pair(2.0 * d.sqrt() / rest_abs(y, &[i]), y)
                })?
            }
            (false, false, None, Some(j)) => {
                let d = q - p;
                integrate_doubling(0.0, 1.0, quad, |v| {
                    let y = q - d * v * v;
                    pair(2.0 * d.sqrt() / rest_abs(y, &[j]), y)
                })?
            }
            (false, false, None, None) => integrate_doubling(p, q, quad, |y| {
                pair(1.0 / rest_abs(y, &[]), y)
            })?,
            (false, true, Some(i), _) => integrate_doubling(0.0, FRAC_PI_2, quad, |phi| {
                let t = phi.tan();
                let y = p + t * t;
                let sec2 = 1.0 + t * t;
                pair(2.0 * sec2 / rest_abs(y, &[i]), y)
            })?,
            (false, true, None, _) => integrate_doubling(0.0, FRAC_PI_2, quad, |phi| {
                let t = phi.tan();
                let y = p + t * t;
                let sec2 = 1.0 + t * t;
                pair(2.0 * t * sec2 / rest_abs(y, &[]), y)
            })?,
            (true, false, _, Some(j)) => integrate_doubling(0.0, FRAC_PI_2, quad, |phi| {
                let t = phi.tan();
                let y = q - t * t;
                let sec2 = 1.0 + t * t;
                pair(2.0 * sec2 / rest_abs(y, &[j]), y)
            })?,
            (true, false, _, None) => integrate_doubling(0.0, FRAC_PI_2, quad, |phi| {
                let t = phi.tan();
                let y = q - t * t;
                let sec2 = 1.0 + t * t;
                pair(2.0 * t * sec2 / rest_abs(y, &[]), y)
            })?,
            _ => unreachable!("both endpoints infinite"),
        };
        Ok(v.value)
    }

    /// First-sheet integral of `(1, y) dy / w` from `a` to `b` along the real
    /// axis (upper detours around interior branch points).
    pub fn real_integral(&self, a: f64, b: f64, quad: Doubling) -> Result<[C64; 2]> {
        if a == b {
            return Ok([C64::new(0.0, 0.0); 2]);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut cuts: Vec<f64> = vec![lo];
        cuts.extend(self.branch.iter().copied().filter(|y| *y > lo && *y < hi));
        cuts.push(hi);
        let mut acc = [C64::new(0.0, 0.0); 2];
        for w in cuts.windows(2) {
            let v = self.basic_piece(w[0], w[1], quad)?;
            acc[0] += v[0];
            acc[1] += v[1];
        }
        Ok([acc[0] * sign, acc[1] * sign])
    }

    /// Integral along a straight complex segment on which `w = factor * w_first`.
    fn line_piece(&self, from: C64, to: C64, factor: f64, quad: Doubling) -> Result<[C64; 2]> {
        let d = to - from;
        if d.norm() == 0.0 {
            return Ok([C64::new(0.0, 0.0); 2]);
        }
        let fb = self.branch.iter().position(|b| C64::new(*b, 0.0) == from);
        let tb = self.branch.iter().position(|b| C64::new(*b, 0.0) == to);
        let rest = |y: C64, skip: usize| -> C64 {
            self.branch
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != skip)
                .map(|(_, b)| sqrt_above(C64::new(*b, 0.0) - y))
                .product()
        };
        let v = match (fb, tb) {
            (Some(_), Some(_)) => {
                let mid = from + d * 0.5;
                let a = self.line_piece(from, mid, factor, quad)?;
                let b = self.line_piece(mid, to, factor, quad)?;
                return Ok([a[0] + b[0], a[1] + b[1]]);
            }
            (Some(i), None) => integrate_doubling(0.0, 1.0, quad, |v| {
                let y = from + d * (v * v);
                let g = C64::new(2.0, 0.0) * d / (I * (-d).sqrt() * rest(y, i) * factor);
                [g, g * y]
            })?,
            (None, Some(j)) => integrate_doubling(0.0, 1.0, quad, |v| {
                // y = to - d v^2, traversed from v = 1 to v = 0
                let y = to - d * (v * v);
                let g = C64::new(2.0, 0.0) * d / (I * d.sqrt() * rest(y, j) * factor);
                [g, g * y]
            })?,
            (None, None) => integrate_doubling(0.0, 1.0, quad, |t| {
                let y = from + d * t;
                let g = d / (self.w_first(y) * factor);
                [g, g * y]
            })?,
        };
        Ok(v.value)
    }

    fn line_integral(&self, from: C64, to: C64, sheet: Sheet, quad: Doubling) -> Result<[C64; 2]> {
        let d = to - from;
        for b in self.branch {
            let bc = C64::new(b, 0.0);
            if bc == from || bc == to {
                continue;
            }
            let t = ((bc - from) * d.conj()).re / d.norm_sqr();
            if t > 0.0 && t < 1.0 && (from + d * t - bc).norm() < 1e-13 * (1.0 + b.abs()) {
                return Err(Error::PathThroughBranch(b));
            }
        }
        if from.im == 0.0 && to.im == 0.0 {
            let v = self.real_integral(from.re, to.re, quad)?;
            return Ok([v[0] * sheet.sign(), v[1] * sheet.sign()]);
        }
        let sigma = sheet.sign();
        // the branch `w_first` is continuous in each open half-plane; crossing
        // or touching the real axis inside a cut flips the sign
        let flip_at = |x: f64| if self.on_cut(x) { -1.0 } else { 1.0 };
        let (a_im, b_im) = (from.im, to.im);
        if a_im >= 0.0 && b_im >= 0.0 {
            return self.line_piece(from, to, sigma, quad);
        }
        if a_im < 0.0 && b_im < 0.0 {
            return self.line_piece(from, to, sigma, quad);
        }
        if a_im == 0.0 {
            // starts on the axis, runs into the lower half-plane
            return self.line_piece(from, to, sigma * flip_at(from.re), quad);
        }
        if b_im == 0.0 {
            return self.line_piece(from, to, sigma, quad);
        }
        let t = a_im / (a_im - b_im);
        let cross = from + d * t;
        let cross = C64::new(cross.re, 0.0);
        let first = self.line_piece(from, cross, sigma, quad)?;
        let second = self.line_piece(cross, to, sigma * flip_at(cross.re), quad)?;
        Ok([first[0] + second[0], first[1] + second[1]])
    }

    /// Unnormalized integral `(int du1, int du2)` along a path.
    pub fn path_integral(&self, path: &[PathSegment], quad: Doubling) -> Result<[C64; 2]> {
        let mut acc = [C64::new(0.0, 0.0); 2];
        for seg in path {
            let v = match *seg {
                PathSegment::Real { from, to, sheet } => {
                    let v = self.real_integral(from, to, quad)?;
                    [v[0] * sheet.sign(), v[1] * sheet.sign()]
                }
                PathSegment::Line { from, to, sheet } => self.line_integral(from, to, sheet, quad)?,
            };
            acc[0] += v[0];
            acc[1] += v[1];
        }
        Ok(acc)
    }

    pub fn cycle_integral(&self, cycle: &Cycle, quad: Doubling) -> Result<[C64; 2]> {
        let path: Vec<PathSegment> = cycle
            .segments
            .iter()
            .map(|s| PathSegment::Real {
                from: s.from,
                to: s.to,
                sheet: s.sheet,
            })
            .collect();
        self.path_integral(&path, quad)
    }

    /// Canonical path from infinity (approached along the negative real axis)
    /// to `target`.
    pub fn canonical_path(&self, target: &CurvePoint) -> Vec<PathSegment> {
        match *target {
            CurvePoint::Infinity => vec![],
            CurvePoint::Finite { y, sheet, .. } => {
                if y.im == 0.0 {
                    vec![PathSegment::Real {
                        from: f64::NEG_INFINITY,
                        to: y.re,
                        sheet,
                    }]
                } else {
                    let y1 = self.branch[0];
                    vec![
                        PathSegment::Real {
                            from: f64::NEG_INFINITY,
                            to: y1,
                            sheet,
                        },
                        PathSegment::Line {
                            from: C64::new(y1, 0.0),
                            to: y,
                            sheet,
                        },
                    ]
                }
            }
        }
    }

    pub fn period_data(&self, quad: Doubling) -> Result<PeriodData> {
        let col = |l: CycleLabel| self.cycle_integral(&self.cycle(l), quad);
        let a1 = col(CycleLabel::A1)?;
        let a2 = col(CycleLabel::A2)?;
        let b1 = col(CycleLabel::B1)?;
        let b2 = col(CycleLabel::B2)?;
        let amat = CMat2::new(a1[0], a2[0], a1[1], a2[1]);
        let bmat = CMat2::new(b1[0], b2[0], b1[1], b2[1]);
        let sv = amat.svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::IllConditioned(cond));
        }
        let cmat = amat.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
        let omega = cmat * bmat;
        Ok(PeriodData {
            amat,
            bmat,
            omega,
            cmat,
        })
    }
}

/// Periods of `du_i = y^(i-1) dy / w` and the normalized period matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodData {
    /// `amat[(i, j)] = int_{a_j} du_i`.
    pub amat: CMat2,
    pub bmat: CMat2,
    pub omega: CMat2,
    /// `omega_i = sum_j cmat[(i, j)] du_j`.
    pub cmat: CMat2,
}

impl PeriodData {
    pub fn normalize(&self, du: [C64; 2]) -> CVec2 {
        mat_vec(&self.cmat, du)
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.omega)
    }

    pub fn to_json(&self, curve: &Curve) -> serde_json::Value {
        use crate::serial::mat2;
        serde_json::json!({
            "branch": curve.branch(),
            "Amat": mat2(&self.amat),
            "Bmat": mat2(&self.bmat),
            "Omega": mat2(&self.omega),
            "Cmat": mat2(&self.cmat),
        })
    }

    /// `int_{a_j} omega_i - delta_ij`, max modulus.
    pub fn normalization_residual(&self) -> f64 {
        let id = self.cmat * self.amat;
        let mut r: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                r = r.max((id[(i, j)] - e).norm());
            }
        }
        r
    }

    pub fn symmetry_residual(&self) -> f64 {
        (self.omega[(0, 1)] - self.omega[(1, 0)]).norm()
    }

    pub fn max_real_part(&self) -> f64 {
        self.omega.iter().map(|c| c.re.abs()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the symmetrized imaginary part, ascending.
    pub fn imag_eigenvalues(&self) -> [f64; 2] {
        let y = Matrix2::new(
            self.omega[(0, 0)].im,
            0.5 * (self.omega[(0, 1)].im + self.omega[(1, 0)].im),
            0.5 * (self.omega[(0, 1)].im + self.omega[(1, 0)].im),
            self.omega[(1, 1)].im,
        );
        let e = y.symmetric_eigenvalues();
        [e.min(), e.max()]
    }
}

/// The period lattice `Z^2 + Omega Z^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub omega: CMat2,
    imag_inv: Matrix2<f64>,
}

impl Lattice {
    pub fn new(omega: CMat2) -> Self {
        let y = omega.map(|c| c.im);
        let imag_inv = y.try_inverse().expect("imaginary part of the period matrix is singular");
        Lattice { omega, imag_inv }
    }

    /// Real coordinates `(a, b)` with `z = Omega a + b`.
    pub fn real_coordinates(&self, z: CVec2) -> ([f64; 2], [f64; 2]) {
        let a0 = self.imag_inv[(0, 0)] * z[0].im + self.imag_inv[(0, 1)] * z[1].im;
        let a1 = self.imag_inv[(1, 0)] * z[0].im + self.imag_inv[(1, 1)] * z[1].im;
        let b0 = z[0].re - self.omega[(0, 0)].re * a0 - self.omega[(0, 1)].re * a1;
        let b1 = z[1].re - self.omega[(1, 0)].re * a0 - self.omega[(1, 1)].re * a1;
        ([a0, a1], [b0, b1])
    }

    pub fn point(&self, m: [i64; 2], n: [i64; 2]) -> CVec2 {
        let mf = [C64::new(m[0] as f64, 0.0), C64::new(m[1] as f64, 0.0)];
        let om = mat_vec(&self.omega, mf);
        [om[0] + n[0] as f64, om[1] + n[1] as f64]
    }

    fn reduce_with(&self, z: CVec2, round: fn(f64) -> f64) -> JacobianPoint {
        let (a, _) = self.real_coordinates(z);
        let m = [round(a[0]) as i64, round(a[1]) as i64];
        let shifted = crate::vsub(z, self.point(m, [0, 0]));
        let (_, b) = self.real_coordinates(shifted);
        let n = [round(b[0]) as i64, round(b[1]) as i64];
        let z0 = crate::vsub(shifted, [C64::new(n[0] as f64, 0.0), C64::new(n[1] as f64, 0.0)]);
        JacobianPoint { z: z0, m, n }
    }

    /// Representative with real coordinates in `[0, 1)`.
    pub fn reduce(&self, z: CVec2) -> JacobianPoint {
        let p = self.reduce_with(z, f64::floor);
        // second pass absorbs coordinates that landed on 1 through roundoff
        let q = self.reduce_with(p.z, f64::floor);
        JacobianPoint {
            z: q.z,
            m: [p.m[0] + q.m[0], p.m[1] + q.m[1]],
            n: [p.n[0] + q.n[0], p.n[1] + q.n[1]],
        }
    }

    /// Representative with real coordinates in `[-1/2, 1/2]`.
    pub fn reduce_centered(&self, z: CVec2) -> JacobianPoint {
        self.reduce_with(z, f64::round)
    }

    /// Distance from `z1 - z2` to the nearest lattice point.
    pub fn distance(&self, z1: CVec2, z2: CVec2) -> f64 {
        let p = self.reduce_centered(crate::vsub(z1, z2));
        crate::vnorm(p.z)
    }
}

/// A point of the Jacobian: `z_raw = z + Omega m + n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianPoint {
    pub z: CVec2,
    pub m: [i64; 2],
    pub n: [i64; 2],
}

/// Which base point the Abel map starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbelBase {
    Infinity,
    Point(CurvePoint),
}

/// Normalized Abel integral from infinity along the canonical path, not reduced.
pub fn abel_integral(
    curve: &Curve,
    periods: &PeriodData,
    target: &CurvePoint,
    quad: Doubling,
) -> Result<CVec2> {
    let du = curve.path_integral(&curve.canonical_path(target), quad)?;
    Ok(periods.normalize(du))
}

pub fn abel_map(
    curve: &Curve,
    periods: &PeriodData,
    target: &CurvePoint,
    base: AbelBase,
    quad: Doubling,
) -> Result<JacobianPoint> {
    let mut z = abel_integral(curve, periods, target, quad)?;
    if let AbelBase::Point(b) = base {
        z = crate::vsub(z, abel_integral(curve, periods, &b, quad)?);
    }
    Ok(periods.lattice().reduce(z))
}

/// Zeros `(R, Q)` of `omega_2`; `R` is on the first sheet and `Q = sigma(R)`.
pub fn omega2_zeros(curve: &Curve, periods: &PeriodData) -> Result<(CurvePoint, CurvePoint)> {
    let c21 = periods.cmat[(1, 0)];
    let c22 = periods.cmat[(1, 1)];
    let scale = periods.cmat.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if c22.norm() < 1e-14 * scale {
        return Err(Error::DegenerateDifferential);
    }
    let mut y0 = -c21 / c22;
    if y0.im.abs() < 1e-13 * (1.0 + y0.re.abs()) {
        y0.im = 0.0;
    }
    let r = curve.point(y0, Sheet::First);
    let q = curve.apply_involution(Involution::Hyperelliptic, r);
    Ok((r, q))
}

/// Gauss-Legendre integral of `(1, y) / w` along a short straight segment,
/// with `w` supplied by the caller; used for local parametrizations.
pub fn short_segment_integral<W>(from: C64, to: C64, nodes: usize, w: W) -> [C64; 2]
where
    W: Fn(C64) -> C64,
{
    let d = to - from;
    let rule = GaussLegendre::cached(nodes);
    rule.integrate(0.0, 1.0, |t| {
        let y = from + d * t;
        let g = d / w(y);
        [g, g * y]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_curve() -> Curve {
        Curve::new([0.0, 1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn rejects_bad_branch_points() {
        assert!(matches!(
            Curve::new([0.0, 1.0, 1.0, 3.0, 4.0]),
            Err(Error::Coincident { .. })
        ));
        assert!(matches!(
            Curve::new([1.0, 0.0, 2.0, 3.0, 4.0]),
            Err(Error::NonIncreasing { .. })
        ));
        let e = Curve::new([0.0, 1.0, 1.0, 3.0, 4.0]).unwrap_err().to_string();
        assert!(e.contains("coincident branch points"));
    }

    #[test]
    fn poly_vanishes_at_branch_points() {
        let c = default_curve();
        for y in c.branch() {
            assert_eq!(c.poly(C64::new(y, 0.0)), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn cycles_close_and_intersect_canonically() {
        let c = default_curve();
        for cyc in c.named_cycles() {
            assert!(c.is_closed(&cyc), "{} not closed", cyc.label);
        }
        let a1 = c.cycle(CycleLabel::A1);
        let a2 = c.cycle(CycleLabel::A2);
        let b1 = c.cycle(CycleLabel::B1);
        let b2 = c.cycle(CycleLabel::B2);
        assert_eq!(c.intersection(&a1, &b1), 1);
        assert_eq!(c.intersection(&a2, &b2), 1);
        assert_eq!(c.intersection(&a1, &b2), 0);
        assert_eq!(c.intersection(&a2, &b1), 0);
        assert_eq!(c.intersection(&a1, &a2), 0);
        assert_eq!(c.intersection(&b1, &b2), 0);
    }

    #[test]
    fn w_first_matches_boundary_phases() {
        let c = default_curve();
        for (y, phase) in [
            (-1.0, I),
            (0.5, C64::new(1.0, 0.0)),
            (1.5, -I),
            (2.5, C64::new(-1.0, 0.0)),
            (3.5, I),
            (5.0, C64::new(1.0, 0.0)),
        ] {
            let w = c.w_first(C64::new(y, 0.0));
            let expect = phase * c.poly(C64::new(y, 0.0)).norm().sqrt();
            assert!((w - expect).norm() < 1e-12, "y = {y}");
            let above = c.w_first(C64::new(y, 1e-9));
            assert!((above - w).norm() < 1e-6);
        }
    }

    #[test]
    fn involutions_square_to_identity() {
        let c = default_curve();
        let p = c.point(C64::new(0.3, 0.7), Sheet::Second);
        for inv in [Involution::Hyperelliptic, Involution::Conjugation] {
            let q = c.apply_involution(inv, c.apply_involution(inv, p));
            assert_eq!(q, p);
        }
        let q1 = c.branch_point(1);
        assert_eq!(c.apply_involution(Involution::Hyperelliptic, q1), q1);
    }

    #[test]
    fn reduction_lands_in_unit_cell() {
        let c = default_curve();
        let pd = c.period_data(Doubling::default()).unwrap();
        let lat = pd.lattice();
        let z = [C64::new(3.7, -2.2), C64::new(-5.1, 4.4)];
        let p = lat.reduce(z);
        let (a, b) = lat.real_coordinates(p.z);
        for k in 0..2 {
            assert!((0.0..1.0).contains(&a[k]) && (0.0..1.0).contains(&b[k]));
        }
        let back = crate::vadd(p.z, lat.point(p.m, p.n));
        assert!(crate::vnorm(crate::vsub(back, z)) < 1e-12);
    }
}
