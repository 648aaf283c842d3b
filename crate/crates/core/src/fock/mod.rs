//! Truncated bosonic Fock space over a mode set and its sector-block operators.

mod assemble;
mod basis;
mod blocks;
mod operator;

pub use assemble::{
    build_double_commutator_formula, build_full_hamiltonian, build_kinetic, build_number,
    build_number_mask, build_one_body, build_quartic, build_quartic_masked, build_rho, build_wre,
    build_wre_masked, ladder_monomial, shift_matrix,
};
pub use basis::{build_basis, build_basis_with_limit, basis_dimension, FockBasis, Sector, DEFAULT_BASIS_LIMIT};
pub use blocks::{classify, Block, Leg};
pub use operator::{commutator, double_commutator, BlockOperator};
