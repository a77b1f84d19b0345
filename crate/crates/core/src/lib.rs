//! Piecewise Taylor surrogates for anisotropic analytic functions on `[-1, 1]^d`.
//!
//! A function is described by its Taylor coefficients `t_nu` at the origin and a
//! weight sequence `rho`. Best-`m` truncations are certified with a priori
//! bounds, the cube is partitioned into cells whose recentered weights make
//! the local bound fall below a target, and the local polynomials are
//! collected into a queryable [`SurrogateLibrary`].

pub mod bounds;
pub mod error;
pub mod index;
pub mod model;
pub mod partition;
pub mod recenter;
pub mod sampling;
mod serde_ext;
pub mod surrogate;
pub mod weights;

pub use error::{Error, Result};
pub use index::{is_lower_set, top_terms, LowerSet, MultiIndex};
pub use model::{ClassNorm, ModelKind, ModelSpec, PolynomialTerm, TaylorModel};
pub use bounds::{
    compare_bounds, global_bound, global_bound_sharp, global_kappa_bound, local_bound_v1,
    local_bound_v2, BoundComparison, BoundKind, BoundParts, BoundReport,
};
pub use partition::{
    build_ladder, build_partition, compute_j, feasibility_gate, Cell, DirectionLadder, GateOutcome,
    PartitionGrid,
};
pub use recenter::{apply_t, operator_norm_bound, shifted_coeffs, WeightedCoeffSeq};
pub use weights::{
    beta_constant, c_constant, kappa_of, lq_norm, recentered_weights, ExponentProfile,
    TailConvention, WeightFamily, WeightSequence,
};
pub use surrogate::{
    build_library, certify, query, CertificationReport, LocalPolynomial, LocalSurrogate,
    SurrogateLibrary,
};
