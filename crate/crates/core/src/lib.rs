//! Tractor/tractrix systems on Riemannian surfaces and space forms.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comparison;
pub mod export;
pub mod functionals;
pub mod manifold;
pub mod ode;
pub mod scenario;
pub mod shortening;
pub mod spaceform;
pub mod tractrix_sim;
