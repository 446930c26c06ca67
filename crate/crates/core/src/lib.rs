//! Numerical toolkit for commuting 2x2 matrix differential operators built from
//! the theta function of a genus-2 hyperelliptic curve with real branch points.
//!
//! The pipeline runs bottom-up: [`curve`] computes periods and Abel images,
//! [`theta`] evaluates the theta function, [`constants`] fixes the Riemann
//! constants and the operator constants, [`operators`] builds and
//! reconstructs the operators, and [`verify`] turns every checkable identity
//! into a residual.

pub mod cauchy;
pub mod cli;
pub mod config;
pub mod constants;
pub mod curve;
mod error;
pub mod operators;
pub mod quad;
pub mod serial;
pub mod series;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
/// A point of C^2.
pub type CVec2 = [C64; 2];
pub type CMat2 = nalgebra::Matrix2<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const TAU: f64 = std::f64::consts::TAU;
pub const PI: f64 = std::f64::consts::PI;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn vadd(a: CVec2, b: CVec2) -> CVec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn vsub(a: CVec2, b: CVec2) -> CVec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn vscale(s: C64, a: CVec2) -> CVec2 {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn vnorm(a: CVec2) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

/// `m * v` for a 2x2 complex matrix.
#[inline]
pub fn mat_vec(m: &CMat2, v: CVec2) -> CVec2 {
    [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]]
}
