//! Perturbative solution of a general polynomial system around a known zero.

mod pinv;
mod poly;
mod toy;

pub use pinv::{checked_svd, pseudo_inverse, pseudo_inverse_exact, rat, rat_mul, rref, RatMatrix};
pub use poly::{
    kernel_projector, solve_order, Coeff, Monomial, OrderSolution, PerturbOrders, PolySystem, MAX_DEGREE,
};
pub use toy::{
    format_series, origin_closed_form, origin_series, shifted_series, toy_series, toy_system, ToyBase, ToyBranch,
    ToySeries,
};
