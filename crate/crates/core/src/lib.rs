//! Hodge-Laplacian laboratory.
//!
//! The crate is organized around two layers. The abstract layer
//! ([`hilbert`], [`crime`]) works with finite-dimensional Hilbert cochain
//! complexes given by Gram and differential matrices: Hodge decomposition,
//! Poincaré constants, the mixed Hodge-Laplace solver and eigensolver, and
//! the machinery for comparing a "true" complex against an approximating
//! one through an injection/projection morphism pair. The geometric layer
//! ([`geometry`], [`derham`]) instantiates that machinery for surface
//! finite elements: implicit surfaces with tubular-neighborhood calculus,
//! refinable triangle meshes lifted onto the surface, and Whitney-form
//! de Rham complexes assembled over them.
//!
//! Large assembled complexes are handled by the sparse counterparts in
//! [`sparse`], which mirror the dense solvers behind the same contracts.

pub mod crime;
pub mod derham;
pub mod geometry;
pub mod hilbert;
pub mod linalg;
pub mod quad;
pub mod sparse;

mod error;

pub use error::{Error, Result};
pub use hilbert::{ComplexRep, EigenResult, HodgeSplit, MixedSolution};
pub use crime::{ComplexMorphism, CrimePair, CrimeReport, JacobianOp};
pub use geometry::{ImplicitSurface, SurfaceMesh};
pub use derham::{AssembledComplex, ElementFamily, FormCallback};
