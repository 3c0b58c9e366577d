//! Sparse grid combination technique for elliptic tensor-product problems
//! `(Δ ⊗ Δ) u = f` on `Ω × Ω`, with the multilevel hierarchy built purely
//! algebraically (classical Ruge-Stüben AMG) from the fine-level matrix.
//!
//! The pipeline is
//!
//! 1. [`mesh`] and [`fem`]: triangulate `Ω`, assemble P1 stiffness and mass.
//! 2. [`amg`]: coarsen the stiffness matrix into a Galerkin hierarchy.
//! 3. [`tensor`]: solve anisotropic Kronecker systems `(A_j ⊗ A_j') U = F`
//!    with a direction-wise tensor-product multigrid iteration.
//! 4. [`combination`]: combine the subproblem solutions with ±1 weights and
//!    evaluate them at sampled fine node pairs.
//!
//! [`frame`] materialises the single-domain multilevel frame system and
//! [`study`] runs complete convergence studies.

pub mod amg;
pub mod combination;
pub mod error;
pub mod fem;
pub mod frame;
pub mod krylov;
pub mod mesh;
pub mod mm;
pub mod sparse;
pub mod study;
pub mod tensor;

pub use error::{Error, Result};
pub use sparse::{DenseGrid, SparseMatrix};
