//! Vineyard modules in vine-and-matrix form: exact barcodes over a time grid plus
//! the matrices of the forward and backward interleaving maps between
//! consecutive times. Forward-then-backward simplification reduces the matrices
//! to projections except for isolated residual scalars (the λ-vector), and the
//! module is a direct sum of vine modules exactly when every residual is zero.

pub mod field;
pub mod interval;
pub mod io;
pub mod matrix;
pub mod module;
pub mod morphism;
pub mod oracle;
pub mod simplify;
pub mod vineyard;

pub use field::{Field, FieldSpec, PrimeField, Rationals};
pub use interval::{frac, int, staircase_leq, Barcode, Interval, Rat, VineId};
pub use matrix::{Matrix, MatrixError};
pub use module::{direct_sum, trivial_module, Family, ModuleError, ModuleViolation, VineyardModuleRep};
pub use morphism::{compose, is_basis_transformation, truncate, MorphismMatrix, MorphismViolation};
pub use oracle::{brute_force_trivial, brute_force_witness, OracleError, OracleLimits};
pub use simplify::{
    backward_simplify, block_partition, forward_simplify, is_trivial, lambda_vector, simplify, verify_witness, Pass,
    Residual, SimplifiedModule, SimplifyError,
};
pub use vineyard::{CriticalEvent, Direction, EventKind, ModelError, TimeGrid, Vine, Vineyard, Violation};
