//! Kasteleyn signs, self-dual quaternionic Kasteleyn matrices and their
//! quaternion determinants.

mod derivative;
mod linalg;
mod matrix;
mod signs;

pub use derivative::{logdet_derivative, logdet_finite_difference, perturbation, zipper_edge_contribution};
pub use linalg::{antisymmetry_defect, determinant, inverse as dense_inverse, log_determinant, pfaffian, wrap_log, CMatrix};
pub use matrix::{
    assemble, perfect_matching, permutation_parity, scalar_kasteleyn, KMatrix, QValue, Route, DEFINITION_CAP,
};
pub use signs::{alternating_ratio, check_kasteleyn_condition, kasteleyn_signs, SignMode, SignedWeights};
