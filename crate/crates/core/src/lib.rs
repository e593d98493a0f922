//! Boundary intersection theory for holomorphic half-disks with boundary on
//! a totally real plane in `C^2`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adjunction;
pub mod cauchy_green;
pub mod comparison;
pub mod error;
pub mod grid;
pub mod intersection;
pub mod linking;
pub mod normal_form;
pub mod roots;
pub mod series;
pub mod solver;
pub mod structures;

pub use error::{Error, Result};
