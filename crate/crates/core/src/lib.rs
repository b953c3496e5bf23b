//! Certified distance, criticality and hull computations for planar
//! self-similar sets, plus the nested-interval construction of a family of
//! attractors with uncountably many critical values.

pub mod precision;
pub mod geometry;
pub mod ifs;
pub mod distance;
pub mod hull;
pub mod construction;
