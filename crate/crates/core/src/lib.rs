//! Online unit clustering in one dimension, played as a game between an
//! adaptive adversary and a deterministic online algorithm.
//!
//! The crate provides the exact game model ([`model`]), the offline optimum
//! ([`opt`]), baseline algorithms ([`algorithms`]), adversary strategy trees
//! ([`adversary`]), an exhaustive lower-bound checker ([`verifier`]) and a
//! minimax search for forced competitive ratios ([`search`]).

pub mod adversary;
pub mod algorithms;
pub mod model;
pub mod opt;
pub mod pos;
pub mod ratio;
pub mod search;
pub mod trace;
pub mod verifier;

pub use model::{Cluster, ClusterId, Decision, OnState};
pub use pos::{Pos, Scale};
pub use ratio::Ratio;
