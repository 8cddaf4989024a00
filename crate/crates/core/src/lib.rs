//! Exact Freiman homomorphism spaces over Z_N (N prime), the pair-complex
//! linearity criterion, the recursive embedding polynomials Λ^i, reduced
//! Boolean polynomials with Kim-Vu style concentration quantities, and a
//! seeded Monte Carlo harness for random subsets.

pub mod boolean_poly;
pub mod error;
pub mod experiments;
pub mod hom_space;
pub mod lambda;
pub mod linalg;
pub mod pair_complex;
pub mod zn;

pub use error::{Error, Result};
pub use zn::{CyclicGroup, RandomModel, SubsetOfZn};
