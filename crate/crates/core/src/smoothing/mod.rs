//! Admissible sets and the averaged functions `f_{A,s,ℓ}` with their step records.

pub mod admissible;
pub mod averaging;
pub mod experiment;
pub mod step_record;

pub use admissible::{
    admissible_from_witness, AdmissibleSet, Clause, IntegerSet, RescaledAdmissible, Variant, Violation,
};
pub use averaging::{eval_f_direct, eval_f_recursive, FTables, Scalar, SparseFn, DIRECT_BUDGET};
pub use experiment::{inversion_experiment, InversionResult, InversionRow, InversionSettings};
pub use step_record::{
    build_step_record, classify_steps, product_identity_check, step_record_from_tables, StepFlags, StepRecord,
};
