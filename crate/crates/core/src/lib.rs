//! Envelopes of intermediate lines of smooth plane curves.

pub mod affine;
pub mod curve;
pub mod envelope;
pub mod error;
pub mod geom;
pub mod locus;
pub mod numeric;
pub mod report;
pub mod singularities;

pub use curve::{AffineMap, CurveJet, CurveSpec, ParamCurve};
pub use error::{EilError, Result};
pub use geom::{Mat2, Vec2};
pub use locus::{AlphaParam, BranchKind, PairBranch};
