//! Lifted differential geometry on spaces of measures, mappings,
//! submanifolds and curves over a Euclidean base space.
//!
//! Functions on these spaces are cylinder functions `ψ(⟨g₁,p⟩, …, ⟨gₙ,p⟩)`
//! ([`cylinder`]). Vector fields on the base lift to derivations whose action
//! is again a cylinder function, and every lifted formula has a flow-based
//! finite-difference counterpart for checking.
//!
//! * [`smooth`]: symbolic scalar and vector fields, flows, forms, metrics.
//! * [`geometry`]: the abstract algebra of derivations and formal forms.
//! * [`measure`], [`mapping`], [`submanifold`], [`curve`]: the instances.

pub mod curve;
pub mod cylinder;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod mapping;
pub mod measure;
pub mod quadrature;
pub mod smooth;
pub mod submanifold;
pub use error::{LiftedError, Result};
pub use expr::Expr;
