//! CLI plumbing: instance generation, the JSON schema, seeded randomness,
//! and the verification suite behind `verify-ksw`.

pub mod gen;
pub mod json;
pub mod report;
pub mod rng;
pub mod verify;
