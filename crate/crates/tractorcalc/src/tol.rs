//! Shared numerical tolerances.
//!
//! Every residual check in the crate measures against one of these, so the
//! meaning of "passes" is uniform across modules and the checker can report
//! a single tolerance table.

/// Pure linear-algebra residuals (inverses, raise/lower consistency at one
/// point): close to machine precision with headroom for conditioning.
pub const ALGEBRAIC: f64 = 1e-10;

/// Identity residuals built from symbolic derivatives of curvature. Scaled
/// by (1 + magnitude of the terms entering the identity), see [`scaled_id`].
pub const IDENTITY: f64 = 1e-8;

/// Round-trip residual for raising then lowering an index.
pub const ROUNDTRIP: f64 = 1e-12;

/// ODE transport residuals (holonomy loops): limited by RK4 step error.
pub const ODE: f64 = 1e-6;

/// Relative singular-value threshold below which a direction counts as
/// kernel / as numerically zero in rank decisions.
pub const KERNEL_REL: f64 = 1e-8;

/// Matrix logarithm series is only trusted for ||H - id|| below this.
pub const LOG_GUARD: f64 = 0.5;

/// Holonomy defect of a curvature-driven loop scales as epsilon^2; halving
/// epsilon must shrink it by a factor inside this window.
pub const RATIO_LO: f64 = 3.5;
pub const RATIO_HI: f64 = 4.5;

/// Loops whose defect is below this floor are at the integrator noise level
/// and excluded from ratio tests. Ten times [`ODE`].
pub const LOOP_FLOOR: f64 = 1e-5;

/// Relative singular-value cutoff when ranking the span of holonomy logs.
/// Coarser than [`KERNEL_REL`] on purpose: second-order commutator terms of
/// the sampled logs sit two decades above integrator noise and must not be
/// counted as independent algebra directions.
pub const LOG_RANK_REL: f64 = 1e-3;

/// Identity tolerance scaled by the magnitude of what entered the identity.
pub fn scaled_id(magnitude: f64) -> f64 {
    IDENTITY * (1.0 + magnitude)
}
