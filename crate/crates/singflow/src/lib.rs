//! Numerical laboratory for `u_t = f(g(u_x) u_xx)` on `(-b, b)` with
//! `u(+-b, t) = +inf`.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod model;
pub mod numerics;
pub mod regime;
pub mod run;
pub mod scenario;
pub mod solver;
pub mod suite;
pub mod verify;
pub mod wave;
