//! Real tensor networks whose indices carry finite-dimensional *-algebras.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense labeled real tensors and their calculus.
//! * [`algebra`]: *-algebras from structure tensors, axiom checks, embeddings.
//! * [`star_tensor`]: positivity and normalization of *-tensors.
//! * [`complex`]: complex tensors through their real representation.
//! * [`network`]: networks, causal checks, contraction planning, evaluation.
//! * [`classical`], [`quantum`], [`trotter`]: model builders.

pub mod algebra;
pub mod classical;
pub mod complex;
pub mod network;
pub mod quantum;
pub mod star_tensor;
pub mod tensor;
pub mod trotter;

pub use algebra::{
    algebra_direct_sum, algebra_tensor_product, complex_algebra, delta_algebra, matrix_algebra, matrix_embedding,
    quantum_algebra, quaternion_algebra, trivial_algebra, AlgebraError, AlgebraKind, AxiomReport, Orientation,
    StarAlgebra, SubAlgebraEmbedding,
};
pub use complex::{
    complex_product_contract, derealify, hermitian_conjugate, realify, realify_partial, ComplexError, ComplexTensor,
    RealifiedMap,
};
pub use star_tensor::{
    assemble_from_root, check_normalized, check_positive, emulate_via_matrix, star_contract, star_product,
    star_tensordot, Direction, NormReport, Positivity, PositivityCertificate, StarTensor, StarTensorError, Witness,
};
pub use tensor::{
    apply_gauge, block, contract, direct_sum, identity, tensor_product, tensordot, unblock, Basis, GaugeMap, Index,
    Tensor, TensorError, Tolerance,
};
