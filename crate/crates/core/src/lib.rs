//! Simulation and exact analysis of two-particle semiquantum secret sharing.
//!
//! A quantum sender distributes entangled pairs to two classical receivers,
//! who may only measure in Z and resend, prepare Z states, or reflect. The
//! crate models honest runs, a dishonest receiver who intercepts the other
//! receiver's particles, and an exact branch enumeration of the resulting
//! detection probabilities.

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod protocol;
pub mod qstate;
pub mod report;
