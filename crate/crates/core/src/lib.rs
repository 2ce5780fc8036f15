//! Holomorphic functional calculus for pseudo-differential operators on the
//! flat torus T^n (n = 1, 2), realized on a discrete grid.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calculus;
pub mod contour;
pub mod error;
pub mod funcalc;
pub mod grid;
pub mod jet;
pub mod laurent;
pub mod quantize;
pub mod spectral;
pub mod symbols;
pub mod traces;

pub use error::{Error, Result};
pub use grid::{GridField, TorusGrid};
pub use num_complex::Complex64;
pub use quantize::{op_tau0, op_tau1, OperatorMatrix};
pub use symbols::{Family, SectorSpec, SymbolClassSpec, SymbolField, TrigTerm};
