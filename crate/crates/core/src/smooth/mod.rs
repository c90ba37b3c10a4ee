//! Finite-dimensional calculus on `X = ℝᵐ`: test functions and vector fields
//! with exact derivative oracles, brackets, flows, metrics and forms.

pub mod field;
pub mod flow;
pub mod form;
pub mod maps;
pub mod metric;

pub use field::{
    directional_derivative_scalar, lie_bracket, make_bump, Ball, Precision, SmoothScalarField,
    SmoothVectorField,
};
pub use flow::{flow, rk4};
pub use form::{eval_form_on_x, exterior_d_on_x, increasing_indices, lie_derivative_form_on_x, FormOnX};
pub use maps::{AffineEmbedding, Diffeo};
pub use metric::{metric_gradient, RiemannianMetric};
