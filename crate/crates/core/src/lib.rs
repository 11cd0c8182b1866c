// Index loops mirror the matrix formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constructions;
pub mod experiments;
pub mod io;
pub mod krylov;
pub mod linalg;
pub mod precision;
pub mod problems;
