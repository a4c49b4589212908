//! Test fixtures and an independent reference language model used to
//! validate the main crate. Nothing here is part of the shipped toolkit.

pub mod corpus;
pub mod planted;
pub mod reference_lm;
pub mod repo;
