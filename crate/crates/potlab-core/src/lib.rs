//! Computational potential theory on the complex plane.
//!
//! The crate solves algebraic equations for Cauchy-transform branches,
//! builds and verifies piecewise-harmonic subharmonic configurations,
//! extracts Riesz measures as interface jump densities, and searches for
//! analytic trees carrying positive measures.

pub mod algebraic;
pub mod configurations;
pub mod grid;
pub mod harmonic;
pub mod io;
pub mod measure;
pub mod poly;
pub mod quad;
pub mod tol;
pub mod tree;

pub use algebraic::{
    circle_path, continue_branches, discriminant_nodes, monodromy, segment_path, solve_fiber,
    AlgebraicError, BivariatePolynomial, BranchSample, BranchTrack, Permutation, SingularKind,
    SingularSet,
};
pub use configurations::{
    assemble_configuration, enumerate_collinear_configurations, extreme_point_profile,
    interface_lipschitz, max_configuration, verify_forward_star, verify_subharmonic,
    CollinearConfiguration, ConfigError, PointStatus,
};
pub use grid::{ConfigurationField, Grid, RegionMask};
pub use harmonic::{
    sector_decomposition, tangential_order, trace_level_curve, Disk, HarmonicError,
    HarmonicTuple, LevelCurve, TraceOptions,
};
pub use measure::{
    example51_measure, jump_density, stokes_mass, verify_algebraic_relation, Circle, FnField,
    Measure, MeasureArc, MeasureError, QuadTag, RieszDensity,
};
pub use poly::Poly;
pub use quad::QuadRule;
pub use tree::{
    critical_values, exterior_branch, score_tree, search_tree, tree_measure, AnalyticTree,
    MeasureOptions, SearchConfig, TreeError, TreeMeasure, TreeScore,
};
