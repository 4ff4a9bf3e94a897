//! Numerical thresholds shared across the crate.

/// Every threshold the solvers and verifiers compare against.
///
/// The defaults are the values used throughout the library; callers that want
/// a stricter or looser screen can build their own record and pass it to the
/// `*_with` entry points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Entrywise tolerance on `P + Q = I`.
    pub projection_sum: f64,
    /// Tolerance on `P·P = P` and on `P·M = M·P`.
    pub projection_idempotent: f64,
    /// Minimum distance of an eigenvalue from the dichotomy boundary
    /// (imaginary axis or unit circle).
    pub boundary_margin: f64,
    /// Bisection stopping width when locating a violation of the eigenvalue
    /// condition on `u ∈ [0, 1]`.
    pub eigen_root: f64,
    /// Maximum below-diagonal magnitude accepted as "upper triangular".
    pub triangular: f64,
    /// `‖AB − BA‖` below this counts as commuting.
    pub commuting: f64,
    /// `‖(AB − BA)^p‖` below this (relative) counts as nilpotent.
    pub nilpotent: f64,
    /// Hard cap on squarings in the matrix exponential.
    pub max_squarings: u32,
    /// Minimum `|det C(n)|` for a difference system coefficient.
    pub coefficient_det: f64,
    /// Minimum `|det Z(t, τ)|` on the unit interval.
    pub z_det: f64,
    /// Distance between `iω` and `spec(A)` below which the closed-form
    /// forcing integral is abandoned for quadrature.
    pub resonance_margin: f64,
    /// Continuity tolerance at integer points, as a multiple of the solve tolerance.
    pub continuity_factor: f64,
    /// Relative ODE residual bound, scaled by `(1 + ‖A‖ + ‖B‖)·sup|x|`.
    pub residual_scale: f64,
    /// Central-difference step for residual checks.
    pub residual_step: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        projection_sum: 1e-10,
        projection_idempotent: 1e-9,
        boundary_margin: 1e-8,
        eigen_root: 1e-12,
        triangular: 1e-9,
        commuting: 1e-10,
        nilpotent: 1e-8,
        max_squarings: 40,
        coefficient_det: 1e-12,
        z_det: 1e-10,
        resonance_margin: 1e-6,
        continuity_factor: 10.0,
        residual_scale: 1e-4,
        residual_step: 1e-5,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
