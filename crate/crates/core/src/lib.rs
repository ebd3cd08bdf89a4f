//! Nonlinear multivariate subdivision on integer lattices.
//!
//! The crate models subdivision schemes on `Z^d` refined by an integer
//! dilation matrix, with data-dependent selection among finitely many linear
//! stencil rules per coset. It derives schemes for the differences, bounds
//! their joint spectral radii to certify convergence and regularity, and
//! renders limit functions against hat or box-spline bases.
//!
//! Sequence arithmetic is generic over [`Scalar`]; use [`Rational`] wherever
//! identities must hold exactly and `f64` for rendering.

pub mod boxspline;
pub mod diffscheme;
pub mod error;
pub mod gridseq;
pub mod lattice;
pub mod limit;
pub mod lp;
pub mod scalar;
pub mod scheme;
pub mod spectral;

pub use error::{Error, Result};
pub use gridseq::{DifferenceBlock, DirectionSet, LatticeSequence, MultiIndex, PNorm};
pub use lattice::{CosetSet, DilationMatrix, IsotropyInfo, IsotropyKind, Point};
pub use scalar::{Rational, Scalar};
pub use scheme::{ReproductionCertificate, SchemeSpec, Selector, StencilRule};

/// Sequence with exact rational values.
pub type ExactSequence = LatticeSequence<Rational>;
/// Sequence with double-precision values.
pub type FloatSequence = LatticeSequence<f64>;
/// Sequence with single-precision values.
pub type Float32Sequence = LatticeSequence<f32>;
/// Difference block with exact rational values.
pub type ExactBlock = DifferenceBlock<Rational>;
/// Difference block with double-precision values.
pub type FloatBlock = DifferenceBlock<f64>;
