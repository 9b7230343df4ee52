#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod corrector;
pub mod diagnostics;
pub mod euler;
pub mod fields;
pub mod geometry;
pub mod inequalities;
pub mod report;
pub mod solver;
pub mod sweep;
