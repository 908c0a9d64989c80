//! Seeded randomness extraction with (almost) two-universal hashing over
//! GF(2^n), closed-form security bounds, and a numerical harness that checks
//! the leftover hash lemma and its supporting inequalities on small
//! classical-quantum states.

// NaN-rejecting guards are written as negated comparisons; dense kernels
// index several arrays per loop.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod gf2poly;
pub mod hash_families;
pub mod qinfo;
pub mod qmat;
pub mod verify;

pub use error::{Error, Result};
