//! Extraction of minimal unsatisfiable cores (MUCs) from finite-domain
//! constraint networks.
//!
//! The extractor runs a dichotomy-based destructive search over a core
//! preprocessed by [`wcore`], and can discover additional transition
//! constraints with recursive model rotation ([`rotation`]) or with a
//! dedicated local search ([`lstc`]). The [`oracle`] module provides
//! brute-force ground truth for small networks.

pub mod extractor;
pub mod fixtures;
pub mod format;
pub mod lstc;
pub mod model;
pub mod oracle;
pub mod rotation;
pub mod solver;
pub mod wcore;

pub use extractor::{extract_muc, ExtractParams, Method, MucResult, MucStatus, Provenance};
pub use model::{
    Assignment, ConstraintId, ConstraintNetwork, ConstraintSet, NetworkBuilder, VarId,
};
