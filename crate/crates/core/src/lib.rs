//! Levi-form geometry, D'Angelo 1-forms and Diederich-Fornaess / Steinness index
//! estimates for domains in C^n given by explicit defining functions.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod crmap;
pub mod dangelo;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod indices;
pub mod jet;
pub mod nelder_mead;
pub mod space;

pub use error::{Error, ParseError, Result};
