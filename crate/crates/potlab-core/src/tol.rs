//! Fixed numerical tolerances used across the crate.
//!
//! Every knob that affects a numerical verdict lives here so that runs are
//! reproducible and the CLI can record the full set in its manifest.

/// Residual tolerance factor for fiber root solving; the effective tolerance
/// is `RESIDUAL_TOL_FACTOR * scale` with `scale` the max coefficient
/// magnitude at the fiber.
pub const RESIDUAL_TOL_FACTOR: f64 = 1e-12;

/// Below this magnitude the leading coefficient of a fiber counts as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Maximum Aberth-Ehrlich iterations per fiber.
pub const MAX_ROOT_ITER: usize = 200;

/// Point clustering tolerance factor: points within
/// `CLUSTER_TOL_FACTOR * (1 + max|point|)` are the same point.
pub const CLUSTER_TOL_FACTOR: f64 = 1e-8;

/// Smallest step the adaptive branch continuation may take before giving up.
pub const MIN_STEP: f64 = 1e-10;

/// Absolute tolerance for adaptive path quadrature of branch primitives.
pub const QUAD_TOL: f64 = 1e-10;

/// Maximum bisection depth for adaptive path quadrature.
pub const MAX_QUAD_DEPTH: usize = 32;

/// On-curve residual bound for level-curve samples.
pub const TRACE_TOL: f64 = 1e-9;

/// Relative agreement required between analytic gradients and finite
/// differences of harmonic values.
pub const GRAD_TOL: f64 = 1e-6;

/// Gradient magnitudes below this stall the level-curve tracer.
pub const STALL_TOL: f64 = 1e-7;

/// Tangential-order equality threshold factor (times window length).
pub const ORDER_TOL_FACTOR: f64 = 1e-9;

/// Collinearity tolerance for Theorem-2.10-style assembly.
pub const COLLINEAR_TOL: f64 = 1e-9;

/// Upper-envelope slack in assembled configuration fields.
pub const ASSEMBLE_TOL: f64 = 1e-9;

/// Convex-hull edge classification tolerance, relative to hull diameter.
pub const HULL_TOL: f64 = 1e-10;

/// Jump densities may dip this far below zero (times the gradient scale)
/// before a configuration counts as non-subharmonic.
pub const JUMP_TOL_FACTOR: f64 = 1e-8;

/// Cauchy-transform evaluation clearance factor (times support diameter).
pub const EVAL_CLEARANCE_FACTOR: f64 = 1e-6;

/// Slack in TreeScore internal inequalities (mass vs total variation).
pub const TV_TOL: f64 = 1e-6;

/// Side offset for two-sided branch continuation, as a fraction of the
/// arc length it probes.
pub const SIDE_EPS_FACTOR: f64 = 1e-4;

/// Embedding tolerance for arc-intersection checks in analytic trees.
pub const EMBED_TOL: f64 = 1e-9;

/// Simulated-annealing start temperature for the tree search.
pub const ANNEAL_T0: f64 = 1.0;

/// Geometric temperature decay per iteration for the tree search.
pub const ANNEAL_DECAY: f64 = 0.995;

/// Cluster tolerance for a set of points.
pub fn cluster_tol(points_scale: f64) -> f64 {
    CLUSTER_TOL_FACTOR * (1.0 + points_scale)
}
