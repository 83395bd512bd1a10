//! The perturbative engine around the Fourier matrix.
//!
//! Writing `H = (1 - X) F`, the Hadamard conditions become
//! `diag([Pⁿ, X] + [Pⁿ, X] X) = 0` (up to unitarity). With `X = Σ_s X^(s)` the
//! order-`s` equations are linear in `X^(s)` with source terms `B^(s,n)` built
//! from lower orders, solvable exactly when the string sums of `B^(s,n)` vanish.

mod pattern;
mod scalar;
mod scan;
mod series;

pub use pattern::{
    apply_pattern, random_assignment, unit_disc, AssignmentSampler, ConstraintPattern, DiagClasses,
    PatternLabel,
};
pub use scalar::{big_to_f64, BigComplex, Precision, Scalar};
pub use scan::{
    breakdown_scan, breakdown_scan_with_progress, run_trial, trial_rng, OrderMax, OrderRecord, Progress,
    ScanConfig, ScanReport, ScanStatus, TrialReport, RNG_NAME,
};
pub use series::{
    extract_assignment, homogeneous_x, Assignment, ConsistencyReport, CorrectionInfo, Mat, ResidualEntry,
    SeriesState, BREAKDOWN_THRESHOLD,
};

use crate::error::Result;
use crate::hcore::{unitarity_residual, ComplexMatrix};

/// `max |M M† - 1|` for `M = 1 - Σ_{s ≤ order} X^(s)` with unitarity imposed at every
/// order and the free first-order data scaled by `eps`.
pub fn truncated_unitarity_residual(n: usize, free: &Assignment, eps: f64, order: usize) -> Result<f64> {
    let scaled: Assignment = free.iter().map(|(k, v)| (*k, v * eps)).collect();
    let mut st = SeriesState::<num_complex::Complex64>::new_unitary(n, &scaled, ())?;
    while st.order() < order {
        st.force_advance()?;
    }
    let m = ComplexMatrix::identity(n, n) - st.x_sum(order);
    Ok(unitarity_residual(&m))
}
