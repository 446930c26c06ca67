//! Baker functions, coefficient fields, differential polynomials and the
//! matrix operators built from them.

pub mod baker;
pub mod diffpoly;
pub mod fields;
pub mod magnetic;
pub mod reconstruct;

pub use baker::{BakerBasis, BasisKind};
pub use diffpoly::{CoefficientField, DiffPoly, LocalMatrix, LocalOp, MatrixOperator, MultiIndex};
pub use fields::{FieldContext, Frame, Spectral};
