#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod catalog;
pub mod checker;
pub mod cli;
pub mod decomposition;
pub mod error;
pub mod linalg;
pub mod reach;
pub mod simulator;
pub mod spec_file;
pub mod tolerance;
