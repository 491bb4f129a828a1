//! Capacity, capacity-achieving input sets and quadratic-decay certificates
//! for finite discrete memoryless channels.
//!
//! All information quantities are in nats.

pub mod capacity;
pub mod certify;
pub mod channel;
pub mod error;
pub mod expansion;
pub mod fixtures;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod polytope;
pub mod qp;
pub mod rng;

pub use capacity::{
    analyze, blahut_arimoto, capacity_achieving_set, constrained_capacity, constrained_pi_set,
    polish_solution, solve_capacity, CapacitySolution, ConstraintSet, EqualitySystem, PiSet,
    DEFAULT_SUPPORT_TOL,
};
pub use certify::{
    alpha_of_direction, certify, compute_mu, estimate_alpha, verify_theorem, AlphaEstimate,
    QuadraticCertificate, Status, VerificationReport, Violation,
};
pub use channel::{
    kernel_basis, kl_divergence, mutual_information, output_distribution, Channel, Distribution,
    TangentVector,
};
pub use error::{Error, Result};
pub use expansion::{
    expansion_at, phi, remainder_envelope, taylor_remainder, ExpansionData, OutputDirection,
};
pub use geometry::{
    cone_membership, project_onto_cone, project_to_pi, sample_valid_directions, support_sets,
    valid_direction_cone, ConeDescription, DualGenerators, SupportSets,
};
pub use polytope::InputPolytope;
