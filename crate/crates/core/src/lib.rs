//! Exact reconstruction and verification of Mathon's 21-line perp-system of
//! PG(5,3), together with the generalized quadrangle W(2) and the partial
//! geometry pg(8,20,2) it induces.

pub mod cli;
pub mod forms;
pub mod geometries;
pub mod groups;
pub mod linalg;
pub mod pipeline;
pub mod projective;
pub mod report;
