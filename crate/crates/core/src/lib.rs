//! Low-rank completion of partially specified matrices.
//!
//! The crate works with entry patterns (which positions of an `n x m` grid
//! are left unspecified) and answers three kinds of questions about them:
//! the generic completion rank over the complex numbers, computed exactly
//! over a large prime field; explicit rank-minimal completions of real data
//! for several structured pattern families, with replayable certificates;
//! and Monte Carlo estimates of the typical real completion ranks.
//!
//! `no_std` with `alloc`. File formats, parallel drivers and the command
//! line live in `lowrank-lab`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod complete;
pub mod fiber;
pub mod field;
pub mod generic;
pub mod linalg;
pub mod matrix;
pub mod pattern;
pub mod rng;
pub mod typical;

pub use field::{Complexes, Field, OrderedField, PrimeField, Rationals, Reals};
pub use matrix::Matrix;
pub use pattern::{EntryPattern, PatternError, PatternFamily};
